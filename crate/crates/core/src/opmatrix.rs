//! Operational matrices of fractional integration.
//!
//! `F` is the Block-Pulse fractional integration matrix, `Q` maps the
//! sine-cosine wavelets onto Block-Pulse coefficients (wavelet values at the
//! Block-Pulse midpoints), and `J = Q F Q⁻¹` is the wavelet operational matrix,
//! so that `J^μ Ψ(t)ᵀ ≈ Ψ(t) Jᵀ`.

use ndarray::{s, Array2};

use crate::error::{domain, Result};
use crate::gamma::gamma;
use crate::linalg::Lu;
use crate::quadrature::GaussLegendre;
use crate::wavelet::{eval_wavelet_vector, WaveletGrid};

/// Pivot floor for the blockwise inversion of `Q`.
pub const Q_PIVOT_TOL: f64 = 1e-13;

/// Four-digit reference values of `J^{0.5}` for `k = 1`, `M = 1`.
pub const J_HALF_REFERENCE: [[f64; 6]; 6] = [
    [0.5319, -0.0209, -0.1715, 0.4407, 0.0180, 0.0821],
    [-0.0209, 0.1651, 0.0991, 0.0180, 0.0061, 0.0148],
    [0.1715, -0.0991, 0.2243, -0.0821, -0.0148, -0.0449],
    [0.0, 0.0, 0.0, 0.5319, -0.0209, -0.1715],
    [0.0, 0.0, 0.0, -0.0209, 0.1651, 0.0991],
    [0.0, 0.0, 0.0, 0.1715, -0.0991, 0.2243],
];

#[derive(Debug, Clone)]
pub struct OperationalMatrices {
    pub grid: WaveletGrid,
    pub mu: f64,
    /// Block-diagonal wavelet-to-Block-Pulse matrix.
    pub q: Array2<f64>,
    /// Upper-triangular Toeplitz Block-Pulse integration matrix.
    pub f: Array2<f64>,
    pub j: Array2<f64>,
}

impl OperationalMatrices {
    /// `Q F`, whose transpose is the stacked rows `Ψ(t_i) Jᵀ` at the midpoints.
    pub fn qf(&self) -> Array2<f64> {
        block_diag_mul(&self.q, &self.f, &self.grid)
    }
}

fn check_order(mu: f64) -> Result<()> {
    if mu > 0.0 && mu <= 1.0 {
        Ok(())
    } else {
        domain(format!("integration order mu = {mu} outside (0, 1]"))
    }
}

/// Block-Pulse fractional integration matrix of order `mu`.
///
/// First row is `(1, ξ_1, …, ξ_{N−1}) / (N^μ Γ(μ + 2))` with
/// `ξ_k = (k+1)^{μ+1} − 2k^{μ+1} + (k−1)^{μ+1}`; each following row is the
/// previous one shifted right.
pub fn build_bpf_frac_matrix(mu: f64, n_t: usize) -> Result<Array2<f64>> {
    check_order(mu)?;
    if n_t == 0 {
        return domain("Block-Pulse matrix needs N_t >= 1");
    }
    let scale = 1.0 / ((n_t as f64).powf(mu) * gamma(mu + 2.0));
    let p = mu + 1.0;
    let first: Vec<f64> = (0..n_t)
        .map(|k| {
            if k == 0 {
                scale
            } else {
                let k = k as f64;
                scale * ((k + 1.0).powf(p) - 2.0 * k.powf(p) + (k - 1.0).powf(p))
            }
        })
        .collect();
    Ok(Array2::from_shape_fn((n_t, n_t), |(r, c)| {
        if c >= r {
            first[c - r]
        } else {
            0.0
        }
    }))
}

/// `Q = diag(Q_0, …, Q_{2^k−1})`; block `Q_n` row `m`, column `j` holds
/// `ψ_{n,m}` at the midpoint of the j-th Block-Pulse interval of block `n`.
pub fn build_q(grid: &WaveletGrid) -> Array2<f64> {
    let n_t = grid.n_t();
    let mut q = Array2::zeros((n_t, n_t));
    for (i, t) in grid.midpoints().into_iter().enumerate() {
        let psi = eval_wavelet_vector(grid, t).expect("midpoints lie in [0, 1)");
        q.column_mut(i).assign(&psi);
    }
    q
}

/// Inverse of a block-diagonal matrix, one LU per `(2M+1)`-sized block.
pub fn invert_block_diag(q: &Array2<f64>, grid: &WaveletGrid) -> Result<Array2<f64>> {
    let n_t = grid.n_t();
    if q.dim() != (n_t, n_t) {
        return domain(format!(
            "matrix is {:?}, grid expects {n_t}x{n_t}",
            q.dim()
        ));
    }
    let b = grid.block_len();
    let mut inv = Array2::zeros((n_t, n_t));
    for blk in 0..grid.blocks() {
        let r = blk * b..(blk + 1) * b;
        let block = q.slice(s![r.clone(), r.clone()]).to_owned();
        let lu = Lu::factor_owned(block, Q_PIVOT_TOL, blk)?;
        inv.slice_mut(s![r.clone(), r]).assign(&lu.inverse());
    }
    Ok(inv)
}

/// `Q · X` for block-diagonal `Q`.
fn block_diag_mul(q: &Array2<f64>, x: &Array2<f64>, grid: &WaveletGrid) -> Array2<f64> {
    let b = grid.block_len();
    let mut out = Array2::zeros((q.nrows(), x.ncols()));
    for blk in 0..grid.blocks() {
        let r = blk * b..(blk + 1) * b;
        let qb = q.slice(s![r.clone(), r.clone()]);
        out.slice_mut(s![r.clone(), ..])
            .assign(&qb.dot(&x.slice(s![r, ..])));
    }
    out
}

/// Build `Q`, `F^μ` and `J^μ = Q F^μ Q⁻¹`.
pub fn build_j(mu: f64, grid: &WaveletGrid) -> Result<OperationalMatrices> {
    let f = build_bpf_frac_matrix(mu, grid.n_t())?;
    let q = build_q(grid);
    let q_inv = invert_block_diag(&q, grid)?;
    let qf = block_diag_mul(&q, &f, grid);
    // right-multiplying by a block-diagonal inverse, block column by block column
    let b = grid.block_len();
    let mut j = Array2::zeros(qf.dim());
    for blk in 0..grid.blocks() {
        let c = blk * b..(blk + 1) * b;
        let rhs = q_inv.slice(s![c.clone(), c.clone()]);
        j.slice_mut(s![.., c.clone()])
            .assign(&qf.slice(s![.., c]).dot(&rhs));
    }
    Ok(OperationalMatrices {
        grid: *grid,
        mu,
        q,
        f,
        j,
    })
}

/// Riemann-Liouville integral `(1/Γ(μ)) ∫_0^t g(ξ) (t−ξ)^{μ−1} dξ` by
/// quadrature, independent of the operational matrices.
///
/// Substituting `σ = (t − ξ)^μ` removes the weak singularity:
/// `J^μ g(t) = (1/Γ(μ+1)) ∫_0^{t^μ} g(t − σ^{1/μ}) dσ`. The σ-range is split at
/// the images of `breakpoints` (points in (0, t) where `g` is not smooth) and
/// each piece is integrated with a composite Gauss-Legendre rule.
pub fn rl_integral_oracle<G: Fn(f64) -> f64>(
    g: G,
    breakpoints: &[f64],
    mu: f64,
    t: f64,
) -> Result<f64> {
    check_order(mu)?;
    if t <= 0.0 {
        return domain(format!("oracle needs t > 0, got {t}"));
    }
    if breakpoints.iter().any(|&b| b < 0.0 || b > t) {
        return domain("breakpoints must lie inside [0, t]");
    }
    if breakpoints.windows(2).any(|w| w[0] > w[1]) {
        return domain("breakpoints must be sorted");
    }
    let inv_mu = 1.0 / mu;
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .filter(|&&b| b > 0.0 && b < t)
        .map(|&b| (t - b).powf(mu))
        .collect();
    cuts.push(0.0);
    cuts.push(t.powf(mu));
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite cut points"));
    cuts.dedup();

    let gl = GaussLegendre::new(20);
    let integrand = |sigma: f64| g(t - sigma.powf(inv_mu));
    let last = cuts.len() - 2;
    let mut total = 0.0;
    for (i, w) in cuts.windows(2).enumerate() {
        let (lo, hi) = (w[0], w[1]);
        // σ^{1/μ} is not smooth at σ = 0, and g may have an algebraic
        // singularity at ξ = 0 (σ = t^μ): grade geometrically toward both
        total += match (i == 0, i == last) {
            (true, true) => {
                let mid = 0.5 * (lo + hi);
                graded(&gl, lo, mid, true, &integrand) + graded(&gl, mid, hi, false, &integrand)
            }
            (true, false) => graded(&gl, lo, hi, true, &integrand),
            (false, true) => graded(&gl, lo, hi, false, &integrand),
            (false, false) => gl.integrate_composite(lo, hi, 8, integrand),
        };
    }
    Ok(total / gamma(mu + 1.0))
}

fn graded<F: Fn(f64) -> f64>(
    gl: &GaussLegendre,
    lo: f64,
    hi: f64,
    toward_lo: bool,
    f: &F,
) -> f64 {
    const LEVELS: usize = 24;
    let mut total = 0.0;
    let mut width = hi - lo;
    for _ in 0..LEVELS {
        width *= 0.5;
        total += if toward_lo {
            gl.integrate(lo + width, lo + 2.0 * width, f)
        } else {
            gl.integrate(hi - 2.0 * width, hi - width, f)
        };
    }
    total
        + if toward_lo {
            gl.integrate(lo, lo + width, f)
        } else {
            gl.integrate(hi - width, hi, f)
        }
}

/// `J^μ ψ_r` at `t` via [`rl_integral_oracle`], with the support edges of
/// wavelet `r` as breakpoints.
pub fn wavelet_rl_oracle(grid: &WaveletGrid, r: usize, mu: f64, t: f64) -> Result<f64> {
    let (n, _) = grid.split_index(r);
    let lo = n as f64 / grid.blocks() as f64;
    let hi = (n + 1) as f64 / grid.blocks() as f64;
    if t <= lo {
        return Ok(0.0);
    }
    let bps: Vec<f64> = [lo, hi].into_iter().filter(|&b| b < t).collect();
    rl_integral_oracle(
        |xi| {
            if xi < lo || xi >= hi || xi >= 1.0 {
                0.0
            } else {
                eval_wavelet_vector(grid, xi).map(|v| v[r]).unwrap_or(0.0)
            }
        },
        &bps,
        mu,
        t,
    )
}

/// Max over midpoints `t_i` and wavelets `r` of `|(Ψ(t_i) Jᵀ)_r − J^μ ψ_r(t_i)|`.
pub fn max_midpoint_oracle_error(ops: &OperationalMatrices) -> Result<f64> {
    let grid = &ops.grid;
    let mut worst: f64 = 0.0;
    for t in grid.midpoints() {
        let row = eval_wavelet_vector(grid, t)?.dot(&ops.j.t());
        for (r, approx) in row.iter().enumerate() {
            let exact = wavelet_rl_oracle(grid, r, ops.mu, t)?;
            worst = worst.max((approx - exact).abs());
        }
    }
    Ok(worst)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::linalg::norm_inf;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bpf_matrix_mu_one_is_classical() {
        let f = build_bpf_frac_matrix(1.0, 4).unwrap();
        let expect = [0.125, 0.25, 0.25, 0.25];
        for (c, e) in expect.iter().enumerate() {
            assert_abs_diff_eq!(f[[0, c]], *e, epsilon = 1e-15);
        }
        // Toeplitz, upper triangular
        for r in 1..4 {
            for c in 0..4 {
                let v = if c >= r { f[[0, c - r]] } else { 0.0 };
                assert_eq!(f[[r, c]], v);
            }
        }
    }

    #[test]
    fn bpf_matrix_scale() {
        let f = build_bpf_frac_matrix(0.5, 2).unwrap();
        assert_abs_diff_eq!(f[[0, 0]], 1.0 / (2f64.sqrt() * gamma(2.5)), epsilon = 1e-15);
        assert_abs_diff_eq!(f[[0, 0]], 0.531_923_040_535_243_4, epsilon = 1e-12);
        let f1 = build_bpf_frac_matrix(0.5, 1).unwrap();
        assert_eq!(f1.dim(), (1, 1));
        assert_abs_diff_eq!(f1[[0, 0]], 1.0 / gamma(2.5), epsilon = 1e-15);
        assert!(build_bpf_frac_matrix(0.0, 3).is_err());
        assert!(build_bpf_frac_matrix(1.5, 3).is_err());
    }

    #[test]
    fn q_examples() {
        let g = WaveletGrid::new(0, 0).unwrap();
        let q = build_q(&g);
        assert_abs_diff_eq!(q[[0, 0]], 1.0, epsilon = 1e-15);

        let g = WaveletGrid::new(1, 1).unwrap();
        let q = build_q(&g);
        for r in 0..3 {
            for c in 0..3 {
                assert_abs_diff_eq!(q[[r, c]], q[[r + 3, c + 3]], epsilon = 1e-14);
                assert_eq!(q[[r, c + 3]], 0.0);
                assert_eq!(q[[r + 3, c]], 0.0);
            }
        }
        for c in 0..3 {
            assert_abs_diff_eq!(q[[0, c]], std::f64::consts::SQRT_2, epsilon = 1e-15);
        }
    }

    #[test]
    fn q_column_matches_wavelet_vector_at_first_midpoint() {
        let g = WaveletGrid::new(1, 1).unwrap();
        let q = build_q(&g);
        let v = eval_wavelet_vector(&g, 1.0 / 12.0).unwrap();
        for r in 0..6 {
            assert_abs_diff_eq!(q[[r, 0]], v[r], epsilon = 1e-15);
        }
    }

    #[test]
    fn blockwise_inverse_matches_dense() {
        let g = WaveletGrid::new(0, 0).unwrap();
        let inv = invert_block_diag(&build_q(&g), &g).unwrap();
        assert_abs_diff_eq!(inv[[0, 0]], 1.0, epsilon = 1e-15);

        let g = WaveletGrid::new(1, 1).unwrap();
        let inv = invert_block_diag(&Array2::eye(6), &g).unwrap();
        assert_eq!(inv, Array2::eye(6));

        for (k, m) in [(1, 1), (2, 2), (3, 1)] {
            let g = WaveletGrid::new(k, m).unwrap();
            let q = build_q(&g);
            let inv = invert_block_diag(&q, &g).unwrap();
            let dense = Lu::factor(&q, 1e-14, 0).unwrap().inverse();
            for (a, b) in inv.iter().zip(dense.iter()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
            let resid = q.dot(&inv) - Array2::<f64>::eye(g.n_t());
            assert!(norm_inf(&resid) <= 1e-12 * g.block_len() as f64);
        }
    }

    #[test]
    fn singular_block_is_named() {
        let g = WaveletGrid::new(1, 0).unwrap();
        let mut q = Array2::eye(2);
        q[[1, 1]] = 0.0;
        match invert_block_diag(&q, &g) {
            Err(Error::Singular { block, .. }) => assert_eq!(block, 1),
            other => panic!("expected singular block, got {other:?}"),
        }
    }

    #[test]
    fn printed_half_order_matrix() {
        let g = WaveletGrid::new(1, 1).unwrap();
        let ops = build_j(0.5, &g).unwrap();
        for (r, row) in J_HALF_REFERENCE.iter().enumerate() {
            for (c, want) in row.iter().enumerate() {
                assert_abs_diff_eq!(ops.j[[r, c]], want, epsilon = 5e-5);
            }
        }
        for r in 3..6 {
            for c in 0..3 {
                assert_eq!(ops.j[[r, c]], 0.0);
            }
        }
    }

    #[test]
    fn trivial_grid_first_order() {
        let g = WaveletGrid::new(0, 0).unwrap();
        let ops = build_j(1.0, &g).unwrap();
        assert_abs_diff_eq!(ops.j[[0, 0]], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn structure_and_multiplication_identity() {
        for mu in [0.3, 0.5, 1.0] {
            for (k, m) in [(1, 1), (2, 1), (2, 2), (3, 1)] {
                let g = WaveletGrid::new(k, m).unwrap();
                let ops = build_j(mu, &g).unwrap();
                let b = g.block_len();
                for ((r, c), v) in ops.j.indexed_iter() {
                    if c / b < r / b {
                        assert_eq!(*v, 0.0, "lower block ({r},{c})");
                    }
                }
                for ((r, c), v) in ops.q.indexed_iter() {
                    if r / b != c / b {
                        assert_eq!(*v, 0.0);
                    }
                }
                let jq = ops.j.dot(&ops.q);
                let qf = ops.q.dot(&ops.f);
                for (a, b) in jq.iter().zip(qf.iter()) {
                    assert_abs_diff_eq!(a, b, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn midpoint_identity() {
        for (k, m) in [(1, 1), (2, 2), (3, 1)] {
            let g = WaveletGrid::new(k, m).unwrap();
            let q = build_q(&g);
            for (i, t) in g.midpoints().into_iter().enumerate() {
                let row = eval_wavelet_vector(&g, t).unwrap();
                for r in 0..g.n_t() {
                    assert_abs_diff_eq!(row[r], q[[r, i]], epsilon = 1e-12);
                }
            }
            let ops = build_j(0.4, &g).unwrap();
            let qf = ops.qf();
            for (i, t) in g.midpoints().into_iter().enumerate() {
                let row = eval_wavelet_vector(&g, t).unwrap().dot(&ops.j.t());
                for c in 0..g.n_t() {
                    assert_abs_diff_eq!(row[c], qf[[c, i]], epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn oracle_closed_forms() {
        let v = rl_integral_oracle(|_| 1.0, &[], 0.5, 1.0).unwrap();
        assert_abs_diff_eq!(v, 1.0 / gamma(1.5), epsilon = 1e-12);
        assert_abs_diff_eq!(v, std::f64::consts::FRAC_2_SQRT_PI, epsilon = 1e-12);
        let v = rl_integral_oracle(|x| x, &[], 1.0, 0.5).unwrap();
        assert_abs_diff_eq!(v, 0.125, epsilon = 1e-14);
        let v = rl_integral_oracle(|x| x, &[], 0.5, 1.0).unwrap();
        assert_abs_diff_eq!(v, 0.752_252_778_063_675_1, epsilon = 1e-12);
        // monomial rule J^μ t^β = Γ(β+1)/Γ(β+1+μ) t^{β+μ}
        for &(beta, mu, t) in &[(2.5, 0.3, 0.7), (1.0, 0.9, 0.2), (3.0, 0.1, 0.95)] {
            let v = rl_integral_oracle(|x: f64| x.powf(beta), &[], mu, t).unwrap();
            let e = gamma(beta + 1.0) / gamma(beta + 1.0 + mu) * t.powf(beta + mu);
            assert_abs_diff_eq!(v, e, epsilon = 1e-12);
        }
        assert!(rl_integral_oracle(|x| x, &[], 0.5, 0.0).is_err());
    }

    #[test]
    fn oracle_handles_jumps() {
        // indicator of [0.2, 0.6): J^μ at t = 1 is ((0.8)^μ − (0.4)^μ) / Γ(μ+1)
        let mu = 0.3;
        let v = rl_integral_oracle(
            |x| if (0.2..0.6).contains(&x) { 1.0 } else { 0.0 },
            &[0.2, 0.6],
            mu,
            1.0,
        )
        .unwrap();
        let e = (0.8f64.powf(mu) - 0.4f64.powf(mu)) / gamma(mu + 1.0);
        assert_abs_diff_eq!(v, e, epsilon = 1e-13);
    }

    #[test]
    fn midpoint_error_scales_by_exact_factor_per_level() {
        // Doubling the dilation level rescales both the wavelets and F^μ, so
        // the midpoint error changes by exactly 2^{1/2 − μ} at fixed M.
        for mu in [0.3, 0.5, 1.0] {
            for m in [1, 2] {
                let errs: Vec<f64> = (1..=3)
                    .map(|k| {
                        let g = WaveletGrid::new(k, m).unwrap();
                        max_midpoint_oracle_error(&build_j(mu, &g).unwrap()).unwrap()
                    })
                    .collect();
                let factor = 2f64.powf(0.5 - mu);
                for w in errs.windows(2) {
                    assert_abs_diff_eq!(w[1] / w[0], factor, epsilon = 1e-8);
                }
                if mu > 0.5 {
                    assert!(errs.windows(2).all(|w| w[1] < w[0]));
                }
            }
        }
    }

    #[test]
    fn first_order_semigroup_improves_with_k() {
        // J^1 J^1 on the constant wavelet vs the exact t^2/2 shape
        let mut prev = f64::INFINITY;
        for k in 1..=4 {
            let g = WaveletGrid::new(k, 1).unwrap();
            let ops = build_j(1.0, &g).unwrap();
            let j2 = ops.j.dot(&ops.j);
            // constant 1 = Σ_n 2^{-k/2} ψ_{n,0}
            let mut coeffs = ndarray::Array1::zeros(g.n_t());
            for n in 0..g.blocks() {
                coeffs[g.flat_index(n, 0)] = 2f64.powf(-(k as f64) / 2.0);
            }
            let mut err: f64 = 0.0;
            for t in g.midpoints() {
                let approx = eval_wavelet_vector(&g, t).unwrap().dot(&j2.t()).dot(&coeffs);
                err = err.max((approx - 0.5 * t * t).abs());
            }
            assert!(err < prev, "k = {k}: {err} !< {prev}");
            prev = err;
        }
    }
}
