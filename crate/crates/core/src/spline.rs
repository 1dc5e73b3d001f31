//! Exponential B-splines on a uniform knot sequence.
//!
//! `B_j` is supported on `[x_{j−2}, x_{j+2}]`, lies in the span of
//! `{1, x, e^{px}, e^{−px}}` on each knot interval and is C² overall. As the
//! tension `p → 0` it tends to the cubic B-spline scaled to `B_j(x_j) = 1`.
//!
//! Closed-form knot values lose accuracy like `ε / (ph)³` because
//! `ph·cosh(ph) − sinh(ph)` cancels, so small `ph` switches to series.

use crate::error::{domain, Result};

/// Below this `ph` the knot stencils come from series expansions.
pub const SERIES_THRESHOLD: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplineGrid {
    ell: f64,
    n_h: usize,
    h: f64,
    p: f64,
}

impl SplineGrid {
    pub fn new(ell: f64, n_h: usize, p: f64) -> Result<Self> {
        if !(ell > 0.0 && ell.is_finite()) {
            return domain(format!("domain length {ell} must be positive"));
        }
        if n_h == 0 {
            return domain("N_h must be at least 1");
        }
        if !(p > 0.0 && p.is_finite()) {
            return domain(format!("tension p = {p} must be positive"));
        }
        Ok(Self {
            ell,
            n_h,
            h: ell / n_h as f64,
            p,
        })
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn n_h(&self) -> usize {
        self.n_h
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Knot `x_j = j h`; ghost knots for `j < 0` or `j > N_h`.
    pub fn knot(&self, j: i64) -> f64 {
        if j == self.n_h as i64 {
            self.ell
        } else {
            j as f64 * self.h
        }
    }

    /// Interior collocation knots `x_0 … x_{N_h}`.
    pub fn knots(&self) -> Vec<f64> {
        (0..=self.n_h as i64).map(|j| self.knot(j)).collect()
    }

    /// Index range of basis functions, `−1 ..= N_h + 1`.
    pub fn basis_range(&self) -> std::ops::RangeInclusive<i64> {
        -1..=self.n_h as i64 + 1
    }
}

/// Values of `B_j`, `B_j′`, `B_j″` at the knots `x_j` and `x_{j±1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplineStencils {
    /// `B_j(x_j)`, always 1.
    pub v0: f64,
    /// `B_j(x_{j±1}) = (s − ph) / (2(phc − s))`.
    pub v1: f64,
    /// `|B_j′(x_{j±1})| = |p(1 − c) / (2(phc − s))|`.
    pub d1: f64,
    /// `B_j″(x_j) = −p²s / (phc − s)`.
    pub w0: f64,
    /// `B_j″(x_{j±1}) = p²s / (2(phc − s))`.
    pub w1: f64,
}

/// Which knot row to take from the stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivative {
    Value,
    First,
    Second,
}

pub fn stencils(grid: &SplineGrid) -> SplineStencils {
    if grid.p * grid.h < SERIES_THRESHOLD {
        stencils_series(grid)
    } else {
        stencils_direct(grid)
    }
}

/// Closed-form stencils.
pub fn stencils_direct(grid: &SplineGrid) -> SplineStencils {
    let (p, h) = (grid.p, grid.h);
    let z = p * h;
    let (s, c) = (z.sinh(), z.cosh());
    let den = z * c - s;
    let w1 = p * p * s / (2.0 * den);
    SplineStencils {
        v0: 1.0,
        v1: (s - z) / (2.0 * den),
        d1: (p * (1.0 - c) / (2.0 * den)).abs(),
        w0: -2.0 * w1,
        w1,
    }
}

/// Stencils from the expansions of `phc − s`, `s − ph`, `c − 1` and `s` with
/// the leading powers of `ph` cancelled analytically.
pub fn stencils_series(grid: &SplineGrid) -> SplineStencils {
    let h = grid.h;
    let z = grid.p * h;
    let den = zcosh_minus_sinh_over_cube(z, true);
    let w1 = sinh_over(z, true) / (2.0 * h * h * den);
    SplineStencils {
        v0: 1.0,
        v1: sinh_minus_over_cube(z, true) / (2.0 * den),
        d1: cosh_minus_one_over_sq(z, true) / (2.0 * h * den),
        w0: -2.0 * w1,
        w1,
    }
}

/// Row entries at column offsets `(−1, 0, +1)` for collocation at a knot.
///
/// The first-derivative row is `(−d1, 0, +d1)`: `B_{j−1}` is decreasing at
/// `x_j` and `B_{j+1}` increasing.
pub fn knot_row(which: Derivative, st: &SplineStencils) -> [f64; 3] {
    match which {
        Derivative::Value => [st.v1, st.v0, st.v1],
        Derivative::First => [-st.d1, 0.0, st.d1],
        Derivative::Second => [st.w1, st.w0, st.w1],
    }
}

// Series tails: each helper returns its quotient with the leading power of z
// divided out, summing the Taylor series when `series` is set or z is small.

const SERIES_TERMS: usize = 8;

/// (sinh z − z) / z³
fn sinh_minus_over_cube(z: f64, series: bool) -> f64 {
    if series || z.abs() < 0.1 {
        odd_series(z, |n| 1.0 / factorial(2 * n + 1))
    } else {
        (z.sinh() - z) / (z * z * z)
    }
}

/// (z cosh z − sinh z) / z³
fn zcosh_minus_sinh_over_cube(z: f64, series: bool) -> f64 {
    if series || z.abs() < 0.1 {
        odd_series(z, |n| 2.0 * n as f64 / factorial(2 * n + 1))
    } else {
        (z * z.cosh() - z.sinh()) / (z * z * z)
    }
}

/// (cosh z − 1) / z²
fn cosh_minus_one_over_sq(z: f64, series: bool) -> f64 {
    if series || z.abs() < 0.1 {
        odd_series(z, |n| 1.0 / factorial(2 * n))
    } else {
        (z.cosh() - 1.0) / (z * z)
    }
}

/// sinh z / z
fn sinh_over(z: f64, series: bool) -> f64 {
    if series || z.abs() < 0.1 {
        1.0 + z * z * odd_series(z, |n| 1.0 / factorial(2 * n + 1))
    } else {
        z.sinh() / z
    }
}

/// Σ_{n ≥ 1} coeff(n) z^{2n−2}
fn odd_series(z: f64, coeff: impl Fn(usize) -> f64) -> f64 {
    let z2 = z * z;
    (1..=SERIES_TERMS)
        .rev()
        .fold(0.0, |acc, n| acc * z2 + coeff(n))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `B_j(x)` for `j` in `−1 ..= N_h + 1` and `x` in `[0, ℓ]`.
///
/// Evaluated through the symmetric truncated-power form
/// `B_j(x) = K [φ(2h − r) − 2(1 + c) φ(h − r)]`, `r = |x − x_j|`,
/// `φ(u) = sinh(pu) − pu` (second term only for `r < h`),
/// `K = 1 / (2(phc − s))`, with every `φ / (phc − s)` ratio formed without
/// cancellation.
pub fn eval_b(j: i64, x: f64, grid: &SplineGrid) -> Result<f64> {
    if !grid.basis_range().contains(&j) {
        return domain(format!(
            "basis index {j} outside [-1, {}]",
            grid.n_h as i64 + 1
        ));
    }
    let slack = 1e-12 * grid.ell;
    if !(x >= -slack && x <= grid.ell + slack) {
        return domain(format!("x = {x} outside [0, {}]", grid.ell));
    }
    Ok(eval_b_unchecked(j, x, grid))
}

pub(crate) fn eval_b_unchecked(j: i64, x: f64, grid: &SplineGrid) -> f64 {
    let (p, h) = (grid.p, grid.h);
    let z = p * h;
    let r = ((x - j as f64 * h) / h).abs();
    if r >= 2.0 {
        return 0.0;
    }
    let den = zcosh_minus_sinh_over_cube(z, false);
    // K φ(u h) = u³ · (sinh(zu) − zu)/(zu)³ / (2 (phc − s)/z³)
    let term = |u: f64| u * u * u * sinh_minus_over_cube(z * u, false) / (2.0 * den);
    let outer = term(2.0 - r);
    if r >= 1.0 {
        outer
    } else {
        outer - 2.0 * (1.0 + z.cosh()) * term(1.0 - r)
    }
}

/// Value or derivative of `B_j` at `x`, in the same cancellation-free form
/// as [`eval_b`]. At the centre knot the first derivative is 0.
pub fn eval_b_derivative(j: i64, x: f64, which: Derivative, grid: &SplineGrid) -> Result<f64> {
    let v = eval_b(j, x, grid)?;
    let (p, h) = (grid.p, grid.h);
    let z = p * h;
    let d = (x - j as f64 * h) / h;
    let r = d.abs();
    if r >= 2.0 {
        return Ok(0.0);
    }
    let den = 2.0 * zcosh_minus_sinh_over_cube(z, false);
    let inner = 2.0 * (1.0 + z.cosh());
    let combine = |t: &dyn Fn(f64) -> f64| {
        if r >= 1.0 {
            t(2.0 - r)
        } else {
            t(2.0 - r) - inner * t(1.0 - r)
        }
    };
    Ok(match which {
        Derivative::Value => v,
        Derivative::First => {
            let t = |u: f64| u * u * cosh_minus_one_over_sq(z * u, false) / (h * den);
            if d == 0.0 {
                0.0
            } else {
                -d.signum() * combine(&t)
            }
        }
        Derivative::Second => {
            let t = |u: f64| u * sinh_over(z * u, false) / (h * h * den);
            combine(&t)
        }
    })
}

/// Coefficients of the four-piece closed form of `B_j`:
/// outer pieces `e(x_{j∓2} ∓ …) − (e/p) sinh(…)`, inner pieces
/// `a + b·r + c·e^{pr} + d·e^{−pr}` with `r = |x − x_j|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplinePieceCoeffs {
    pub e_c: f64,
    pub a_c: f64,
    pub b_c: f64,
    pub c_c: f64,
    pub d_c: f64,
}

pub fn piece_coeffs(grid: &SplineGrid) -> SplinePieceCoeffs {
    let p = grid.p;
    let z = p * grid.h;
    let (s, c) = (z.sinh(), z.cosh());
    let den = z * c - s;
    let (em, ep) = ((-z).exp(), z.exp());
    SplinePieceCoeffs {
        e_c: p / (2.0 * den),
        a_c: z * c / den,
        b_c: 0.5 * p * (c * (c - 1.0) + s * s) / (den * (1.0 - c)),
        c_c: 0.25 * (em * (1.0 - c) + s * (em - 1.0)) / (den * (1.0 - c)),
        d_c: 0.25 * (ep * (c - 1.0) + s * (ep - 1.0)) / (den * (1.0 - c)),
    }
}

/// `B_j(x)` straight from the piecewise closed form. Accurate only for
/// moderate `ph`; kept as an independent check on [`eval_b`].
pub fn eval_b_pieces(j: i64, x: f64, grid: &SplineGrid) -> f64 {
    let co = piece_coeffs(grid);
    let (p, h) = (grid.p, grid.h);
    let xj = j as f64 * h;
    let u = (x - xj) / h;
    if u <= -2.0 || u >= 2.0 {
        0.0
    } else if u <= -1.0 {
        let d = xj - 2.0 * h - x;
        co.e_c * d - co.e_c / p * (p * d).sinh()
    } else if u <= 1.0 {
        let r = (x - xj).abs();
        co.a_c + co.b_c * r + co.c_c * (p * r).exp() + co.d_c * (-p * r).exp()
    } else {
        let d = x - xj - 2.0 * h;
        co.e_c * d - co.e_c / p * (p * d).sinh()
    }
}
