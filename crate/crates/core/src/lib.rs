pub mod blocksys;
pub mod collocation;
pub mod error;
pub mod gamma;
pub mod linalg;
pub mod metrics;
pub mod opmatrix;
pub mod problem;
pub mod quadrature;
pub mod spline;
pub mod wavelet;

pub use error::{Error, Result};
