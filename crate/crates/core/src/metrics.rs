//! Error norms, convergence rates and the experiment drivers.

use rayon::prelude::*;
use serde::Serialize;

use crate::collocation::{solve_problem, SolutionField, SolvePath};
use crate::error::{domain, Error, Result};
use crate::problem::{builtin_example, ProblemSpec};
use crate::spline::SplineGrid;
use crate::wavelet::WaveletGrid;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub t_eval: f64,
    pub n_h: usize,
    pub e2: f64,
    pub einf: f64,
    /// `(x_j, |y − y_N|)` at interior knots.
    pub per_node: Vec<(f64, f64)>,
}

/// Norms from per-node errors at interior knots `x_1 … x_{N_h−1}`.
pub fn norms_from_nodes(h: f64, t_eval: f64, n_h: usize, per_node: Vec<(f64, f64)>) -> ErrorReport {
    let sum: f64 = per_node.iter().map(|(_, e)| e * e).sum();
    let einf = per_node.iter().fold(0.0f64, |m, (_, e)| m.max(e.abs()));
    ErrorReport {
        t_eval,
        n_h,
        e2: (h * sum).sqrt(),
        einf,
        per_node,
    }
}

pub fn error_norms(field: &SolutionField, t: f64) -> Result<ErrorReport> {
    if !(t > 0.0 && t < 1.0) {
        return domain(format!("evaluation time {t} outside (0, 1)"));
    }
    let problem = field.problem();
    if problem.exact.is_none() {
        return Err(Error::NoExactSolution);
    }
    let sgrid = field.spline_grid();
    let n_h = sgrid.n_h();
    let per_node = (1..n_h)
        .map(|j| {
            let x = sgrid.knot(j as i64);
            let e = (problem.exact_value(x, t)? - field.reconstruct(x, t)?).abs();
            Ok((x, e))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(norms_from_nodes(sgrid.h(), t, n_h, per_node))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n_h: usize,
    pub e2: f64,
    pub rate2: Option<f64>,
    pub einf: f64,
    pub rate_inf: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

pub fn rate(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Builds the table from stored errors; rates use consecutive rows.
pub fn rates_from_errors(n_h: &[usize], e2: &[f64], einf: &[f64]) -> Result<ConvergenceTable> {
    if n_h.len() != e2.len() || n_h.len() != einf.len() {
        return domain("mismatched convergence inputs");
    }
    check_doubling(n_h)?;
    let rows = (0..n_h.len())
        .map(|i| ConvergenceRow {
            n_h: n_h[i],
            e2: e2[i],
            einf: einf[i],
            rate2: (i > 0).then(|| rate(e2[i - 1], e2[i])),
            rate_inf: (i > 0).then(|| rate(einf[i - 1], einf[i])),
        })
        .collect();
    Ok(ConvergenceTable { rows })
}

fn check_doubling(n_h: &[usize]) -> Result<()> {
    if n_h.is_empty() {
        return domain("empty N_h list");
    }
    for w in n_h.windows(2) {
        if w[1] != 2 * w[0] {
            return domain(format!("N_h list must double: {} then {}", w[0], w[1]));
        }
    }
    Ok(())
}

/// Last collocation midpoint `(2N_t − 1)/(2N_t)`.
pub fn last_midpoint(wgrid: &WaveletGrid) -> f64 {
    let n = wgrid.n_t() as f64;
    (2.0 * n - 1.0) / (2.0 * n)
}

pub fn solve_and_measure(
    problem: &ProblemSpec,
    wgrid: &WaveletGrid,
    sgrid: &SplineGrid,
    t_eval: f64,
) -> Result<ErrorReport> {
    let sol = solve_problem(problem, wgrid, sgrid, SolvePath::Block)?;
    error_norms(&sol.field, t_eval)
}

/// Solves are run one after another to bound peak memory.
pub fn convergence_study(
    problem: &ProblemSpec,
    wgrid: &WaveletGrid,
    p: f64,
    n_h_list: &[usize],
    t_eval: f64,
) -> Result<ConvergenceTable> {
    check_doubling(n_h_list)?;
    let mut e2 = Vec::with_capacity(n_h_list.len());
    let mut einf = Vec::with_capacity(n_h_list.len());
    for &n_h in n_h_list {
        let sgrid = SplineGrid::new(problem.ell, n_h, p)?;
        let rep = solve_and_measure(problem, wgrid, &sgrid, t_eval)?;
        e2.push(rep.e2);
        einf.push(rep.einf);
    }
    rates_from_errors(n_h_list, &e2, &einf)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PSweepRow {
    pub p: f64,
    pub e2: f64,
    pub einf: f64,
}

/// One solve per tension value, on the length and N_h of `sgrid_base`.
pub fn p_sweep(
    problem: &ProblemSpec,
    wgrid: &WaveletGrid,
    sgrid_base: &SplineGrid,
    p_list: &[f64],
    t_eval: f64,
) -> Result<Vec<PSweepRow>> {
    p_list
        .par_iter()
        .map(|&p| {
            let sgrid = SplineGrid::new(sgrid_base.ell(), sgrid_base.n_h(), p)?;
            let rep = solve_and_measure(problem, wgrid, &sgrid, t_eval)?;
            Ok(PSweepRow {
                p,
                e2: rep.e2,
                einf: rep.einf,
            })
        })
        .collect()
}

/// Absolute errors at fixed `x` values for several `(k, M)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointErrorTable {
    pub t_eval: f64,
    pub xs: Vec<f64>,
    pub configs: Vec<(u32, usize)>,
    /// `errors[i][c]` is the error at `xs[i]` for `configs[c]`.
    pub errors: Vec<Vec<f64>>,
}

pub fn pointwise_error_table(
    problem: &ProblemSpec,
    configs: &[(u32, usize)],
    n_h: usize,
    p: f64,
    t_eval: f64,
    xs: &[f64],
) -> Result<PointErrorTable> {
    let sgrid = SplineGrid::new(problem.ell, n_h, p)?;
    let columns = configs
        .par_iter()
        .map(|&(k, m)| {
            let wgrid = WaveletGrid::new(k, m)?;
            let sol = solve_problem(problem, &wgrid, &sgrid, SolvePath::Block)?;
            xs.iter()
                .map(|&x| Ok((problem.exact_value(x, t_eval)? - sol.field.reconstruct(x, t_eval)?).abs()))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let errors = (0..xs.len())
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    Ok(PointErrorTable {
        t_eval,
        xs: xs.to_vec(),
        configs: configs.to_vec(),
        errors,
    })
}

pub const TABLE_XS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
pub const TABLE1_CONFIGS: [(u32, usize); 4] = [(2, 1), (3, 1), (4, 1), (5, 1)];
pub const TABLE2_CONFIGS: [(u32, usize); 4] = [(4, 1), (5, 2), (6, 1), (7, 2)];
pub const TABLE3_ALPHAS: [f64; 3] = [0.3, 0.6, 0.9];
pub const TABLE3_NH: [usize; 4] = [5, 10, 20, 40];
pub const PSWEEP_PS: [f64; 8] = [0.001, 0.002, 0.0035, 0.005, 0.01, 0.1, 0.5, 1.0];

/// Example 1 absolute errors at t = 0.25 with N_h = 20, p = 1.
pub fn table1(alpha: f64, n_h: usize, p: f64) -> Result<PointErrorTable> {
    let pb = builtin_example(1, alpha)?;
    pointwise_error_table(&pb, &TABLE1_CONFIGS, n_h, p, 0.25, &TABLE_XS)
}

/// Example 2 absolute errors at t = 0.5 with N_h = 10, p = 1.
pub fn table2(alpha: f64, n_h: usize, p: f64) -> Result<PointErrorTable> {
    let pb = builtin_example(2, alpha)?;
    pointwise_error_table(&pb, &TABLE2_CONFIGS, n_h, p, 0.5, &TABLE_XS)
}

/// Example 3 convergence tables at the last midpoint, one per alpha.
pub fn table3(alphas: &[f64], k: u32, m: usize, p: f64, n_h_list: &[usize]) -> Result<Vec<(f64, ConvergenceTable)>> {
    let wgrid = WaveletGrid::new(k, m)?;
    let t_eval = last_midpoint(&wgrid);
    alphas
        .iter()
        .map(|&alpha| {
            let pb = builtin_example(3, alpha)?;
            Ok((alpha, convergence_study(&pb, &wgrid, p, n_h_list, t_eval)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_errors_give_zero_norms() {
        let rep = norms_from_nodes(0.1, 0.5, 10, (1..10).map(|j| (j as f64 / 10.0, 0.0)).collect());
        assert_eq!((rep.e2, rep.einf), (0.0, 0.0));
    }

    #[test]
    fn single_node_error() {
        let eps = 3e-4;
        let nodes = (1..10)
            .map(|j| (j as f64 / 10.0, if j == 4 { eps } else { 0.0 }))
            .collect();
        let rep = norms_from_nodes(0.1, 0.5, 10, nodes);
        assert_abs_diff_eq!(rep.e2, eps * 0.1f64.sqrt(), epsilon = 1e-18);
        assert_eq!(rep.einf, eps);
    }

    #[test]
    fn synthetic_second_order_rates() {
        let n_h = [5, 10, 20, 40, 80];
        let e: Vec<f64> = n_h.iter().map(|&n| 0.7 / (n as f64).powi(2)).collect();
        let tab = rates_from_errors(&n_h, &e, &e).unwrap();
        assert!(tab.rows[0].rate2.is_none() && tab.rows[0].rate_inf.is_none());
        for row in &tab.rows[1..] {
            assert_abs_diff_eq!(row.rate2.unwrap(), 2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(row.rate_inf.unwrap(), 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn non_doubling_rejected() {
        assert!(rates_from_errors(&[5, 12], &[1.0, 0.5], &[1.0, 0.5]).is_err());
    }

    #[test]
    fn last_midpoint_values() {
        assert_eq!(last_midpoint(&WaveletGrid::new(0, 0).unwrap()), 0.5);
        assert_abs_diff_eq!(last_midpoint(&WaveletGrid::new(1, 1).unwrap()), 11.0 / 12.0);
    }

    #[test]
    fn error_norms_requires_exact() {
        let mut pb = builtin_example(1, 0.5).unwrap();
        pb.exact = None;
        let sol = solve_problem(
            &pb,
            &WaveletGrid::new(1, 1).unwrap(),
            &SplineGrid::new(1.0, 4, 1.0).unwrap(),
            SolvePath::Block,
        )
        .unwrap();
        assert_eq!(error_norms(&sol.field, 0.5), Err(Error::NoExactSolution));
        assert!(error_norms(&sol.field, 1.0).is_err());
    }
}
