//! Collocation of the fractional PDE on wavelet midpoints × spline knots.
//!
//! The unknown field is `y(x,t) ≈ Σ_l B_l(x) Ψ(t)ᵀ J¹ᵀ C_l + φ(x)` with one
//! coefficient vector `C_l ∈ R^{N_t}` per spline index `l = −1..=N_h+1`.
//! Block row 0 and block row `N_h+2` are the boundary conditions; block row
//! `j+1` is the PDE at knot `x_j`.

use std::time::Instant;

use ndarray::{s, Array1, Array2, ArrayView1};

use crate::blocksys::{solve_dense, BlockBandedMatrix, BlockRow};
use crate::error::{domain, Error, Result};
use crate::opmatrix::build_j;
use crate::problem::ProblemSpec;
use crate::spline::{eval_b_unchecked, knot_row, stencils, Derivative, SplineGrid};
use crate::wavelet::{eval_wavelet_vector, WaveletGrid};

/// Relative residuals above this are flagged.
pub const RESIDUAL_WARN: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct CollocationPoints {
    pub times: Vec<f64>,
    pub knots: Vec<f64>,
}

pub fn collocation_points(wgrid: &WaveletGrid, sgrid: &SplineGrid) -> CollocationPoints {
    CollocationPoints {
        times: wgrid.midpoints(),
        knots: sgrid.knots(),
    }
}

/// Rows `Ψ(t_i)ᵀ Jᵀ` for the fractional-derivative term (`p_alpha`, order
/// `1−α`) and for the derivative-free terms (`p`, order 1).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeBlocks {
    pub p_alpha: Array2<f64>,
    pub p: Array2<f64>,
}

/// Time blocks via `(Q F)ᵀ`, valid because the collocation times are the
/// block-pulse midpoints.
pub fn build_time_blocks(wgrid: &WaveletGrid, alpha: f64) -> Result<TimeBlocks> {
    check_alpha(alpha)?;
    let frac = build_j(1.0 - alpha, wgrid)?;
    let one = build_j(1.0, wgrid)?;
    Ok(TimeBlocks {
        p_alpha: frac.qf().reversed_axes(),
        p: one.qf().reversed_axes(),
    })
}

/// Time blocks by evaluating `Ψ(t_i)` and multiplying by `Jᵀ` row by row.
pub fn build_time_blocks_stacked(wgrid: &WaveletGrid, alpha: f64) -> Result<TimeBlocks> {
    check_alpha(alpha)?;
    let frac = build_j(1.0 - alpha, wgrid)?;
    let one = build_j(1.0, wgrid)?;
    let n = wgrid.n_t();
    let mut p_alpha = Array2::zeros((n, n));
    let mut p = Array2::zeros((n, n));
    for (i, &t) in wgrid.midpoints().iter().enumerate() {
        let psi = eval_wavelet_vector(wgrid, t)?;
        p_alpha.row_mut(i).assign(&frac.j.dot(&psi));
        p.row_mut(i).assign(&one.j.dot(&psi));
    }
    Ok(TimeBlocks { p_alpha, p })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        domain(format!("fractional order alpha = {alpha} outside (0, 1)"))
    }
}

/// A block `frac · P_α + first · P`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockCoeff {
    pub frac: f64,
    pub first: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompactRow {
    pub first_col: usize,
    pub coeffs: Vec<BlockCoeff>,
}

/// The assembled system, stored as scalar multiples of the two time blocks.
#[derive(Debug, Clone)]
pub struct CollocationSystem {
    pub wgrid: WaveletGrid,
    pub sgrid: SplineGrid,
    pub time: TimeBlocks,
    pub rows: Vec<CompactRow>,
    pub rhs: Array1<f64>,
}

impl CollocationSystem {
    pub fn block_size(&self) -> usize {
        self.wgrid.n_t()
    }

    pub fn n_blocks(&self) -> usize {
        self.rows.len()
    }

    pub fn n_unknowns(&self) -> usize {
        self.block_size() * self.n_blocks()
    }

    fn materialize(&self, c: BlockCoeff) -> Array2<f64> {
        &self.time.p_alpha * c.frac + &self.time.p * c.first
    }

    /// Dense block at (block row, block column); zero outside the profile.
    pub fn block(&self, r: usize, c: usize) -> Array2<f64> {
        let row = &self.rows[r];
        match c.checked_sub(row.first_col) {
            Some(o) if o < row.coeffs.len() => self.materialize(row.coeffs[o]),
            _ => Array2::zeros((self.block_size(), self.block_size())),
        }
    }

    pub fn to_block_matrix(&self) -> Result<BlockBandedMatrix> {
        let rows = self
            .rows
            .iter()
            .map(|r| BlockRow {
                first: r.first_col,
                blocks: r.coeffs.iter().map(|&c| self.materialize(c)).collect(),
            })
            .collect();
        BlockBandedMatrix::new(self.block_size(), rows)
    }

    pub fn to_dense(&self) -> Result<Array2<f64>> {
        self.to_block_matrix()?.to_dense()
    }

    pub fn matvec(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let b = self.block_size();
        let n = self.n_blocks();
        let xa: Vec<Array1<f64>> = (0..n)
            .map(|c| self.time.p_alpha.dot(&x.slice(s![c * b..(c + 1) * b])))
            .collect();
        let xp: Vec<Array1<f64>> = (0..n)
            .map(|c| self.time.p.dot(&x.slice(s![c * b..(c + 1) * b])))
            .collect();
        let mut y = Array1::zeros(n * b);
        for (r, row) in self.rows.iter().enumerate() {
            let mut yr = y.slice_mut(s![r * b..(r + 1) * b]);
            for (o, c) in row.coeffs.iter().enumerate() {
                let col = row.first_col + o;
                yr.scaled_add(c.frac, &xa[col]);
                yr.scaled_add(c.first, &xp[col]);
            }
        }
        y
    }

    /// `‖A x − b‖∞ / ‖b‖∞` (absolute when `b = 0`).
    pub fn relative_residual(&self, x: ArrayView1<f64>) -> f64 {
        let r = self.matvec(x) - &self.rhs;
        let rn = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let bn = self.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if bn > 0.0 {
            rn / bn
        } else {
            rn
        }
    }
}

pub fn assemble(
    problem: &ProblemSpec,
    wgrid: &WaveletGrid,
    sgrid: &SplineGrid,
) -> Result<CollocationSystem> {
    let time = build_time_blocks(wgrid, problem.alpha)?;
    assemble_with(problem, wgrid, sgrid, time)
}

/// Assemble with caller-supplied time blocks.
pub fn assemble_with(
    problem: &ProblemSpec,
    wgrid: &WaveletGrid,
    sgrid: &SplineGrid,
    time: TimeBlocks,
) -> Result<CollocationSystem> {
    problem.validate()?;
    if (sgrid.ell() - problem.ell).abs() > 1e-12 * problem.ell {
        return domain(format!(
            "spline grid length {} differs from problem length {}",
            sgrid.ell(),
            problem.ell
        ));
    }
    let nt = wgrid.n_t();
    if time.p.dim() != (nt, nt) || time.p_alpha.dim() != (nt, nt) {
        return domain("time blocks do not match the wavelet grid");
    }
    let n_h = sgrid.n_h();
    let st = stencils(sgrid);
    let val = knot_row(Derivative::Value, &st);
    let d1 = knot_row(Derivative::First, &st);
    let d2 = knot_row(Derivative::Second, &st);
    let times = wgrid.midpoints();
    let n_blocks = n_h + 3;
    let mut rhs = Array1::zeros(n_blocks * nt);
    let mut rows = Vec::with_capacity(n_blocks);

    let boundary_row = |first_col| CompactRow {
        first_col,
        coeffs: val
            .iter()
            .map(|&v| BlockCoeff { frac: 0.0, first: v })
            .collect(),
    };

    let phi0 = finite("initial data", (problem.phi)(0.0), 0.0, 0.0)?;
    rows.push(boundary_row(0));
    for (i, &t) in times.iter().enumerate() {
        rhs[i] = finite("boundary data g1", (problem.g1)(t), 0.0, t)? - phi0;
    }

    for j in 0..=n_h {
        let x = sgrid.knot(j as i64);
        let a = finite("convection coefficient", (problem.a_coeff)(x), x, 0.0)?;
        let b = finite("diffusion coefficient", (problem.b_coeff)(x), x, 0.0)?;
        let px = finite("initial data derivative", (problem.phi_x)(x), x, 0.0)?;
        let pxx = finite("initial data derivative", (problem.phi_xx)(x), x, 0.0)?;
        let coeffs = (0..3)
            .map(|o| BlockCoeff {
                frac: val[o],
                first: a * d1[o] + b * d2[o],
            })
            .collect();
        rows.push(CompactRow { first_col: j, coeffs });
        let base = (j + 1) * nt;
        for (i, &t) in times.iter().enumerate() {
            let f = finite("forcing", (problem.forcing)(x, t), x, t)?;
            rhs[base + i] = f - a * px - b * pxx;
        }
    }

    let ell = sgrid.ell();
    let phil = finite("initial data", (problem.phi)(ell), ell, 0.0)?;
    rows.push(boundary_row(n_h));
    let base = (n_h + 2) * nt;
    for (i, &t) in times.iter().enumerate() {
        rhs[base + i] = finite("boundary data g2", (problem.g2)(t), ell, t)? - phil;
    }

    Ok(CollocationSystem {
        wgrid: *wgrid,
        sgrid: *sgrid,
        time,
        rows,
        rhs,
    })
}

fn finite(what: &'static str, v: f64, x: f64, t: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Assembly { what, x, t })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolvePath {
    #[default]
    Block,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualStatus {
    Ok,
    Warning,
}

pub fn solve_system(system: &CollocationSystem, path: SolvePath) -> Result<Array1<f64>> {
    match path {
        SolvePath::Block => system.to_block_matrix()?.solve(&system.rhs),
        SolvePath::Dense => solve_dense(&system.to_dense()?, &system.rhs),
    }
}

/// The reconstructed approximation `y_N(x, t)`.
#[derive(Debug, Clone)]
pub struct SolutionField {
    problem: ProblemSpec,
    wgrid: WaveletGrid,
    sgrid: SplineGrid,
    /// Row `l+1` holds `C_l`.
    coeffs: Array2<f64>,
    j1: Array2<f64>,
}

impl SolutionField {
    pub fn new(
        problem: ProblemSpec,
        wgrid: WaveletGrid,
        sgrid: SplineGrid,
        flat_coeffs: &Array1<f64>,
    ) -> Result<Self> {
        let nt = wgrid.n_t();
        let nb = sgrid.n_h() + 3;
        let coeffs = flat_coeffs
            .clone()
            .into_shape_with_order((nb, nt))
            .map_err(|_| {
                Error::Domain(format!(
                    "expected {} coefficients, got {}",
                    nb * nt,
                    flat_coeffs.len()
                ))
            })?;
        let j1 = build_j(1.0, &wgrid)?.j;
        Ok(Self {
            problem,
            wgrid,
            sgrid,
            coeffs,
            j1,
        })
    }

    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    pub fn wavelet_grid(&self) -> &WaveletGrid {
        &self.wgrid
    }

    pub fn spline_grid(&self) -> &SplineGrid {
        &self.sgrid
    }

    /// `C_l` for `l = −1..=N_h+1`.
    pub fn coefficients(&self, l: i64) -> ArrayView1<'_, f64> {
        self.coeffs.row((l + 1) as usize)
    }

    /// Last collocation time, the closest collocated instant to t = 1.
    pub fn last_collocation_time(&self) -> f64 {
        let n = self.wgrid.n_t() as f64;
        (2.0 * n - 1.0) / (2.0 * n)
    }

    /// `y_N(x, t)` for `x ∈ [0, ℓ]`, `t ∈ [0, 1)`. At `t = 0` the integral
    /// term vanishes and the initial data is returned exactly.
    pub fn reconstruct(&self, x: f64, t: f64) -> Result<f64> {
        let ell = self.sgrid.ell();
        if !(0.0..=ell).contains(&x) {
            return domain(format!("x = {x} outside [0, {ell}]"));
        }
        if !(0.0..1.0).contains(&t) {
            return domain(format!("t = {t} outside [0, 1)"));
        }
        let phi = (self.problem.phi)(x);
        if t == 0.0 {
            return Ok(phi);
        }
        let psi = eval_wavelet_vector(&self.wgrid, t)?;
        // only the block containing t is nonzero in Ψ(t)
        let bl = self.wgrid.block_len();
        let blk = self.wgrid.block_of(t);
        let cols = s![.., blk * bl..(blk + 1) * bl];
        let w = self.j1.slice(cols).dot(&psi.slice(s![blk * bl..(blk + 1) * bl]));
        let h = self.sgrid.h();
        let centre = (x / h).floor() as i64;
        let mut acc = 0.0;
        for l in (centre - 2)..=(centre + 2) {
            if !self.sgrid.basis_range().contains(&l) {
                continue;
            }
            let b = eval_b_unchecked(l, x, &self.sgrid);
            if b != 0.0 {
                acc += b * w.dot(&self.coefficients(l));
            }
        }
        Ok(acc + phi)
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub field: SolutionField,
    pub residual: f64,
    pub status: ResidualStatus,
    pub unknowns: usize,
    pub seconds: f64,
}

pub fn solve_problem(
    problem: &ProblemSpec,
    wgrid: &WaveletGrid,
    sgrid: &SplineGrid,
    path: SolvePath,
) -> Result<Solution> {
    let start = Instant::now();
    let system = assemble(problem, wgrid, sgrid)?;
    let x = solve_system(&system, path)?;
    let residual = system.relative_residual(x.view());
    let status = if residual.is_finite() && residual <= RESIDUAL_WARN {
        ResidualStatus::Ok
    } else {
        ResidualStatus::Warning
    };
    let field = SolutionField::new(problem.clone(), *wgrid, *sgrid, &x)?;
    Ok(Solution {
        field,
        residual,
        status,
        unknowns: system.n_unknowns(),
        seconds: start.elapsed().as_secs_f64(),
    })
}
