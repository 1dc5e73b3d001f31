//! Problem instances of
//! `∂^α y/∂t^α + a(x) y_x + b(x) y_xx = f(x, t)` on `[0, ℓ] × (0, 1]`,
//! with `y(x, 0) = φ(x)`, `y(0, t) = g1(t)`, `y(ℓ, t) = g2(t)`.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{domain, Error, Result};
use crate::gamma::gamma;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type FieldFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A closed-form solution together with the derivatives the PDE needs.
#[derive(Clone)]
pub struct ExactSolution {
    pub y: FieldFn,
    /// Caputo derivative in t of order α.
    pub caputo_t: FieldFn,
    pub y_x: FieldFn,
    pub y_xx: FieldFn,
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub alpha: f64,
    pub ell: f64,
    /// Convection coefficient a(x).
    pub a_coeff: ScalarFn,
    /// Diffusion coefficient b(x); enters as `+b(x) y_xx`.
    pub b_coeff: ScalarFn,
    pub forcing: FieldFn,
    pub phi: ScalarFn,
    pub phi_x: ScalarFn,
    pub phi_xx: ScalarFn,
    pub g1: ScalarFn,
    pub g2: ScalarFn,
    pub exact: Option<ExactSolution>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("alpha", &self.alpha)
            .field("ell", &self.ell)
            .field("has_exact", &self.exact.is_some())
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn exact_value(&self, x: f64, t: f64) -> Result<f64> {
        self.exact
            .as_ref()
            .map(|e| (e.y)(x, t))
            .ok_or(Error::NoExactSolution)
    }

    /// `∂^α y + a y_x + b y_xx − f` for the stored exact solution.
    pub fn exact_residual(&self, x: f64, t: f64) -> Result<f64> {
        let e = self.exact.as_ref().ok_or(Error::NoExactSolution)?;
        Ok((e.caputo_t)(x, t) + (self.a_coeff)(x) * (e.y_x)(x, t)
            + (self.b_coeff)(x) * (e.y_xx)(x, t)
            - (self.forcing)(x, t))
    }

    pub(crate) fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(self.ell > 0.0 && self.ell.is_finite()) {
            return domain(format!("domain length {} must be positive", self.ell));
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        domain(format!("fractional order alpha = {alpha} outside (0, 1)"))
    }
}

/// Caputo derivative of order `alpha` of `t^beta`:
/// `Γ(β+1) / Γ(β+1−α) · t^{β−α}`, and 0 for the constant `β = 0`.
pub fn caputo_monomial(beta: f64, alpha: f64, t: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if t < 0.0 {
        return domain(format!("Caputo derivative needs t >= 0, got {t}"));
    }
    if beta < 0.0 {
        return domain(format!("monomial exponent {beta} must be non-negative"));
    }
    if beta == 0.0 {
        return Ok(0.0);
    }
    Ok(gamma(beta + 1.0) / gamma(beta + 1.0 - alpha) * t.powf(beta - alpha))
}

fn constant(v: f64) -> ScalarFn {
    Arc::new(move |_| v)
}

/// One of the three benchmark problems, at fractional order `alpha`.
pub fn builtin_example(id: u32, alpha: f64) -> Result<ProblemSpec> {
    check_alpha(alpha)?;
    let cap = move |beta: f64, t: f64| caputo_monomial(beta, alpha, t).unwrap_or(f64::NAN);
    let spec = match id {
        // y = t³x², a = 1, b = −1
        1 => {
            let g4 = gamma(4.0 - alpha);
            ProblemSpec {
                name: "example-1".into(),
                alpha,
                ell: 1.0,
                a_coeff: constant(1.0),
                b_coeff: constant(-1.0),
                forcing: Arc::new(move |x, t| {
                    6.0 * x * x * t.powf(3.0 - alpha) / g4 - 2.0 * t.powi(3) * (1.0 - x)
                }),
                phi: constant(0.0),
                phi_x: constant(0.0),
                phi_xx: constant(0.0),
                g1: constant(0.0),
                g2: Arc::new(|t| t.powi(3)),
                exact: Some(ExactSolution {
                    y: Arc::new(|x, t| t.powi(3) * x * x),
                    caputo_t: Arc::new(move |x, t| cap(3.0, t) * x * x),
                    y_x: Arc::new(|x, t| 2.0 * t.powi(3) * x),
                    y_xx: Arc::new(|_, t| 2.0 * t.powi(3)),
                }),
            }
        }
        // y = (1 + t^{2α})(x − x³), a = x, b = −1
        2 => {
            let ratio = gamma(1.0 + 2.0 * alpha) / gamma(1.0 + alpha);
            ProblemSpec {
                name: "example-2".into(),
                alpha,
                ell: 1.0,
                a_coeff: Arc::new(|x| x),
                b_coeff: constant(-1.0),
                forcing: Arc::new(move |x, t| {
                    ratio * t.powf(alpha) * (x - x.powi(3))
                        + (1.0 + t.powf(2.0 * alpha)) * (7.0 * x - 3.0 * x.powi(3))
                }),
                phi: Arc::new(|x| x - x.powi(3)),
                phi_x: Arc::new(|x| 1.0 - 3.0 * x * x),
                phi_xx: Arc::new(|x| -6.0 * x),
                g1: constant(0.0),
                g2: constant(0.0),
                exact: Some(ExactSolution {
                    y: Arc::new(move |x, t| (1.0 + t.powf(2.0 * alpha)) * (x - x.powi(3))),
                    caputo_t: Arc::new(move |x, t| cap(2.0 * alpha, t) * (x - x.powi(3))),
                    y_x: Arc::new(move |x, t| (1.0 + t.powf(2.0 * alpha)) * (1.0 - 3.0 * x * x)),
                    y_xx: Arc::new(move |x, t| (1.0 + t.powf(2.0 * alpha)) * (-6.0 * x)),
                }),
            }
        }
        // y = (1 + t²)x³, a = 1, b = −x
        3 => {
            let g3 = gamma(3.0 - alpha);
            ProblemSpec {
                name: "example-3".into(),
                alpha,
                ell: 1.0,
                a_coeff: constant(1.0),
                b_coeff: Arc::new(|x| -x),
                forcing: Arc::new(move |x, t| {
                    2.0 * t.powf(2.0 - alpha) * x.powi(3) / g3 - 3.0 * (1.0 + t * t) * x * x
                }),
                phi: Arc::new(|x| x.powi(3)),
                phi_x: Arc::new(|x| 3.0 * x * x),
                phi_xx: Arc::new(|x| 6.0 * x),
                g1: constant(0.0),
                g2: Arc::new(|t| 1.0 + t * t),
                exact: Some(ExactSolution {
                    y: Arc::new(|x, t| (1.0 + t * t) * x.powi(3)),
                    caputo_t: Arc::new(move |x, t| cap(2.0, t) * x.powi(3)),
                    y_x: Arc::new(|x, t| 3.0 * (1.0 + t * t) * x * x),
                    y_xx: Arc::new(|x, t| 6.0 * (1.0 + t * t) * x),
                }),
            }
        }
        other => return Err(Error::UnknownProblem(other)),
    };
    Ok(spec)
}

/// Build a problem whose exact solution is `solution`: the forcing is
/// `∂^α y + a y_x + b y_xx`, initial data and boundary data are traces of `y`.
pub fn manufactured(
    name: impl Into<String>,
    alpha: f64,
    ell: f64,
    solution: ExactSolution,
    a_coeff: ScalarFn,
    b_coeff: ScalarFn,
) -> Result<ProblemSpec> {
    check_alpha(alpha)?;
    let forcing: FieldFn = {
        let (s, a, b) = (solution.clone(), a_coeff.clone(), b_coeff.clone());
        Arc::new(move |x, t| (s.caputo_t)(x, t) + a(x) * (s.y_x)(x, t) + b(x) * (s.y_xx)(x, t))
    };
    let trace_x = |f: FieldFn| -> ScalarFn { Arc::new(move |x| f(x, 0.0)) };
    let y = solution.y.clone();
    let y_r = solution.y.clone();
    let spec = ProblemSpec {
        name: name.into(),
        alpha,
        ell,
        a_coeff,
        b_coeff,
        forcing,
        phi: trace_x(solution.y.clone()),
        phi_x: trace_x(solution.y_x.clone()),
        phi_xx: trace_x(solution.y_xx.clone()),
        g1: Arc::new(move |t| y(0.0, t)),
        g2: Arc::new(move |t| y_r(ell, t)),
        exact: Some(solution),
    };
    spec.validate()?;
    Ok(spec)
}

/// `coef · x^x_pow · t^(t_pow + t_pow_alpha·α)`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparableTerm {
    pub coef: f64,
    #[serde(default)]
    pub x_pow: u32,
    #[serde(default)]
    pub t_pow: f64,
    #[serde(default)]
    pub t_pow_alpha: f64,
}

impl SeparableTerm {
    fn t_exponent(&self, alpha: f64) -> f64 {
        self.t_pow + self.t_pow_alpha * alpha
    }
}

/// Exact solution given as a sum of separable monomial terms.
pub fn separable_solution(terms: &[SeparableTerm], alpha: f64) -> Result<ExactSolution> {
    check_alpha(alpha)?;
    for term in terms {
        if term.t_exponent(alpha) < 0.0 {
            return domain(format!(
                "time exponent {} must be non-negative",
                term.t_exponent(alpha)
            ));
        }
    }
    let terms: Arc<[SeparableTerm]> = terms.into();
    let x_part = |p: u32, order: u32, x: f64| -> f64 {
        if order > p {
            return 0.0;
        }
        let falling: f64 = (0..order).map(|i| (p - i) as f64).product();
        falling * x.powi((p - order) as i32)
    };
    let build = move |order: u32, caputo: bool| -> FieldFn {
        let terms = terms.clone();
        Arc::new(move |x, t| {
            terms
                .iter()
                .map(|term| {
                    let beta = term.t_exponent(alpha);
                    let tp = if caputo {
                        caputo_monomial(beta, alpha, t).unwrap_or(f64::NAN)
                    } else {
                        t.powf(beta)
                    };
                    term.coef * x_part(term.x_pow, order, x) * tp
                })
                .sum()
        })
    };
    Ok(ExactSolution {
        y: build(0, false),
        caputo_t: build(0, true),
        y_x: build(1, false),
        y_xx: build(2, false),
    })
}

/// Ascending-power polynomial in x.
pub fn polynomial(coeffs: &[f64]) -> ScalarFn {
    let c: Vec<f64> = coeffs.to_vec();
    Arc::new(move |x| c.iter().rev().fold(0.0, |acc, &v| acc * x + v))
}

/// Custom problem file (TOML):
///
/// ```toml
/// alpha = 0.5
/// ell = 1.0
/// a = [1.0]        # a(x) = 1, ascending powers of x
/// b = [0.0, -1.0]  # b(x) = -x
///
/// [[solution]]     # y = (1 + t^2) x^3
/// coef = 1.0
/// x_pow = 3
///
/// [[solution]]
/// coef = 1.0
/// x_pow = 3
/// t_pow = 2.0
/// ```
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub alpha: Option<f64>,
    #[serde(default = "default_ell")]
    pub ell: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub solution: Vec<SeparableTerm>,
}

fn default_ell() -> f64 {
    1.0
}

impl ProblemConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Build the problem; `alpha_override` wins over the file's `alpha`.
    pub fn to_problem(&self, alpha_override: Option<f64>) -> Result<ProblemSpec> {
        let alpha = alpha_override
            .or(self.alpha)
            .ok_or_else(|| Error::Config("alpha not given in file or on the command line".into()))?;
        let a = self.a.clone();
        let b = self.b.clone();
        if a.iter().all(|&v| v == 0.0) && b.iter().all(|&v| v == 0.0) {
            return Err(Error::Config("a(x) and b(x) are both identically zero".into()));
        }
        manufactured(
            self.name.clone().unwrap_or_else(|| "custom".into()),
            alpha,
            self.ell,
            separable_solution(&self.solution, alpha)?,
            polynomial(&a),
            polynomial(&b),
        )
    }
}
