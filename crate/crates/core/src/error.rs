use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular block {block}: pivot {pivot:e} below threshold")]
    Singular { block: usize, pivot: f64 },

    #[error("non-finite {what} at x = {x}, t = {t}")]
    Assembly { what: &'static str, x: f64, t: f64 },

    #[error("dense path refused: {unknowns} unknowns exceeds limit {limit}")]
    TooLarge { unknowns: usize, limit: usize },

    #[error("unknown built-in problem id {0} (expected 1, 2 or 3)")]
    UnknownProblem(u32),

    #[error("problem has no exact solution")]
    NoExactSolution,

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
