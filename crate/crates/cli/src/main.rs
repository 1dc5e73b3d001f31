use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracwave::collocation::{
    build_time_blocks, build_time_blocks_stacked, solve_problem, ResidualStatus, SolvePath,
};
use fracwave::metrics::{
    convergence_study, error_norms, last_midpoint, p_sweep, pointwise_error_table, PSWEEP_PS,
    TABLE1_CONFIGS, TABLE2_CONFIGS, TABLE3_ALPHAS, TABLE3_NH, TABLE_XS,
};
use fracwave::opmatrix::{build_j, max_midpoint_oracle_error, J_HALF_REFERENCE};
use fracwave::problem::{builtin_example, ProblemConfig, ProblemSpec};
use fracwave::spline::SplineGrid;
use fracwave::wavelet::WaveletGrid;
use ndarray::Array2;

mod fmt;
mod table;

use fmt::{g17, num, sci6};
use table::Table;

/// Wavelet / exponential-spline collocation for time-fractional
/// convection-diffusion problems.
#[derive(Debug, Parser)]
#[command(name = "fracwave", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one problem and report errors at the knots or at a point.
    Solve(RunArgs),
    /// Pointwise errors for example 1 over several wavelet resolutions.
    Table1(RunArgs),
    /// Pointwise errors for example 2 over several wavelet resolutions.
    Table2(RunArgs),
    /// Spatial convergence table for example 3.
    Table3(RunArgs),
    /// Error norms of example 3 over a range of tension parameters.
    Psweep(RunArgs),
    /// Check an operational matrix against the quadrature oracle.
    OpmatrixCheck(RunArgs),
    /// Write Q, F and J entries.
    DumpMatrices(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Human,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Fractional order in (0, 1).
    #[arg(long)]
    alpha: Option<f64>,
    /// Wavelet dilation level.
    #[arg(long)]
    k: Option<u32>,
    /// Number of sine/cosine harmonics per block.
    #[arg(long = "M", value_name = "M")]
    m: Option<usize>,
    /// Number of spatial intervals.
    #[arg(long = "Nh", value_name = "NH")]
    n_h: Option<usize>,
    /// Exponential spline tension.
    #[arg(long)]
    p: Option<f64>,
    /// Built-in example id (1, 2, 3) or path to a problem file.
    #[arg(long)]
    problem: Option<String>,
    /// Evaluation time.
    #[arg(long)]
    t: Option<f64>,
    /// Evaluation point (solve only).
    #[arg(long)]
    x: Option<f64>,
    /// Order of the operational matrix (opmatrix-check, dump-matrices).
    #[arg(long)]
    mu: Option<f64>,
    /// Output file; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Numeric(fracwave::Error),
    Io(io::Error),
}

impl From<fracwave::Error> for CliError {
    fn from(e: fracwave::Error) -> Self {
        CliError::Numeric(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.into())
    }
}

type CliResult<T> = Result<T, CliError>;

/// Result of a command: the table to write plus a one-line summary.
struct Report {
    table: Table,
    summary: String,
}

impl RunArgs {
    /// Flags a command does not use are rejected rather than ignored.
    fn reject(&self, cmd: &str, unused: &[&str]) -> CliResult<()> {
        for &name in unused {
            let set = match name {
                "alpha" => self.alpha.is_some(),
                "k" => self.k.is_some(),
                "M" => self.m.is_some(),
                "Nh" => self.n_h.is_some(),
                "p" => self.p.is_some(),
                "problem" => self.problem.is_some(),
                "t" => self.t.is_some(),
                "x" => self.x.is_some(),
                "mu" => self.mu.is_some(),
                _ => unreachable!("unknown flag {name}"),
            };
            if set {
                return Err(CliError::Usage(format!("--{name} is not used by {cmd}")));
            }
        }
        Ok(())
    }

    fn wavelet(&self, k: u32, m: usize) -> CliResult<WaveletGrid> {
        Ok(WaveletGrid::new(self.k.unwrap_or(k), self.m.unwrap_or(m))?)
    }

    fn load_problem(&self, default_id: u32, default_alpha: f64) -> CliResult<ProblemSpec> {
        match &self.problem {
            None => Ok(builtin_example(default_id, self.alpha.unwrap_or(default_alpha))?),
            Some(s) => match s.parse::<u32>() {
                Ok(id) => Ok(builtin_example(id, self.alpha.unwrap_or(default_alpha))?),
                Err(_) => {
                    let cfg = ProblemConfig::load(std::path::Path::new(s))?;
                    let alpha = self.alpha.or(cfg.alpha).unwrap_or(default_alpha);
                    Ok(cfg.to_problem(Some(alpha))?)
                }
            },
        }
    }
}

fn solve(a: &RunArgs) -> CliResult<Report> {
    a.reject("solve", &["mu"])?;
    let pb = a.load_problem(1, 0.5)?;
    let wgrid = a.wavelet(2, 1)?;
    let sgrid = SplineGrid::new(pb.ell, a.n_h.unwrap_or(20), a.p.unwrap_or(1.0))?;
    let t = a.t.unwrap_or_else(|| last_midpoint(&wgrid));
    let sol = solve_problem(&pb, &wgrid, &sgrid, SolvePath::Block)?;
    let xs: Vec<f64> = match a.x {
        Some(x) => vec![x],
        None => sgrid.knots(),
    };
    let mut table = Table::new(["x", "t", "y_n", "y_exact", "abs_error"]);
    for &x in &xs {
        let y = sol.field.reconstruct(x, t)?;
        let (exact, err) = match pb.exact {
            Some(_) => {
                let e = pb.exact_value(x, t)?;
                (sci6(e), sci6((e - y).abs()))
            }
            None => (String::new(), String::new()),
        };
        table.push(vec![num(x), num(t), sci6(y), exact, err]);
    }
    let norms = if pb.exact.is_some() && t > 0.0 {
        let rep = error_norms(&sol.field, t)?;
        format!("e2={} einf={}", sci6(rep.e2), sci6(rep.einf))
    } else {
        "e2=n/a einf=n/a".to_string()
    };
    let flag = match sol.status {
        ResidualStatus::Ok => "",
        ResidualStatus::Warning => " (warning: large residual)",
    };
    Ok(Report {
        table,
        summary: format!(
            "{}: {norms} residual={}{flag} unknowns={} time={:.3}s",
            pb.name,
            sci6(sol.residual),
            sol.unknowns,
            sol.seconds
        ),
    })
}

fn error_table(
    a: &RunArgs,
    cmd: &str,
    id: u32,
    alpha: f64,
    n_h: usize,
    t: f64,
    configs: &[(u32, usize)],
) -> CliResult<Report> {
    a.reject(cmd, &["k", "M", "problem", "x", "mu"])?;
    let start = Instant::now();
    let pb = builtin_example(id, a.alpha.unwrap_or(alpha))?;
    let n_h = a.n_h.unwrap_or(n_h);
    let tab = pointwise_error_table(&pb, configs, n_h, a.p.unwrap_or(1.0), a.t.unwrap_or(t), &TABLE_XS)?;
    let mut header = vec!["x".to_string()];
    header.extend(configs.iter().map(|(k, m)| format!("k{k}_M{m}")));
    let mut table = Table::new(header);
    let mut worst = 0.0f64;
    for (x, row) in tab.xs.iter().zip(&tab.errors) {
        let mut cells = vec![num(*x)];
        for &e in row {
            worst = worst.max(e);
            cells.push(sci6(e));
        }
        table.push(cells);
    }
    Ok(Report {
        table,
        summary: format!(
            "{cmd}: alpha={} N_h={n_h} t={} max_error={} time={:.3}s",
            num(pb.alpha),
            num(tab.t_eval),
            sci6(worst),
            start.elapsed().as_secs_f64()
        ),
    })
}

fn table3(a: &RunArgs) -> CliResult<Report> {
    a.reject("table3", &["problem", "x", "mu"])?;
    let start = Instant::now();
    let wgrid = a.wavelet(6, 2)?;
    let p = a.p.unwrap_or(0.025);
    let t = a.t.unwrap_or_else(|| last_midpoint(&wgrid));
    let alphas: Vec<f64> = a.alpha.map_or(TABLE3_ALPHAS.to_vec(), |x| vec![x]);
    let n_h: Vec<usize> = match a.n_h {
        Some(n) => (0..4).map(|i| n << i).collect(),
        None => TABLE3_NH.to_vec(),
    };
    let mut table = Table::new(["alpha", "N_h", "e2", "rate2", "einf", "rate_inf"]);
    let opt = |r: Option<f64>| r.map_or(String::new(), |v| format!("{v:.4}"));
    for &alpha in &alphas {
        let pb = builtin_example(3, alpha)?;
        let conv = convergence_study(&pb, &wgrid, p, &n_h, t)?;
        for row in conv.rows {
            table.push(vec![
                num(alpha),
                row.n_h.to_string(),
                sci6(row.e2),
                opt(row.rate2),
                sci6(row.einf),
                opt(row.rate_inf),
            ]);
        }
    }
    Ok(Report {
        table,
        summary: format!(
            "table3: k={} M={} p={} t={} rows={} time={:.3}s",
            wgrid.k(),
            wgrid.harmonics(),
            num(p),
            num(t),
            alphas.len() * n_h.len(),
            start.elapsed().as_secs_f64()
        ),
    })
}

fn psweep(a: &RunArgs) -> CliResult<Report> {
    a.reject("psweep", &["x", "mu"])?;
    let start = Instant::now();
    let pb = a.load_problem(3, 0.3)?;
    let wgrid = a.wavelet(6, 1)?;
    let base = SplineGrid::new(pb.ell, a.n_h.unwrap_or(20), 1.0)?;
    let t = a.t.unwrap_or_else(|| last_midpoint(&wgrid));
    let ps: Vec<f64> = a.p.map_or(PSWEEP_PS.to_vec(), |p| vec![p]);
    let rows = p_sweep(&pb, &wgrid, &base, &ps, t)?;
    let mut table = Table::new(["p", "e2", "einf"]);
    for r in &rows {
        table.push(vec![num(r.p), sci6(r.e2), sci6(r.einf)]);
    }
    let best = rows
        .iter()
        .min_by(|a, b| a.e2.total_cmp(&b.e2))
        .expect("non-empty sweep");
    Ok(Report {
        table,
        summary: format!(
            "psweep: alpha={} best p={} e2={} time={:.3}s",
            num(pb.alpha),
            num(best.p),
            sci6(best.e2),
            start.elapsed().as_secs_f64()
        ),
    })
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    (a - b).iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn opmatrix_check(a: &RunArgs) -> CliResult<Report> {
    a.reject("opmatrix-check", &["Nh", "p", "problem", "t", "x"])?;
    let start = Instant::now();
    let wgrid = a.wavelet(1, 1)?;
    let mu = a.mu.unwrap_or(0.5);
    let ops = build_j(mu, &wgrid)?;
    let oracle = max_midpoint_oracle_error(&ops)?;
    let identity = max_abs_diff(&ops.j.dot(&ops.q), &ops.qf());
    let reference = if wgrid.k() == 1 && wgrid.harmonics() == 1 && mu == 0.5 {
        let r = Array2::from_shape_fn((6, 6), |(i, j)| J_HALF_REFERENCE[i][j]);
        sci6(max_abs_diff(&ops.j, &r))
    } else {
        String::new()
    };
    let mut blocks = String::new();
    if let Some(alpha) = a.alpha {
        let m = build_time_blocks(&wgrid, alpha)?;
        let s = build_time_blocks_stacked(&wgrid, alpha)?;
        blocks = sci6(max_abs_diff(&m.p_alpha, &s.p_alpha).max(max_abs_diff(&m.p, &s.p)));
    }
    let mut table = Table::new([
        "mu",
        "k",
        "M",
        "n_t",
        "oracle_max_error",
        "jq_minus_qf",
        "reference_max_dev",
        "time_block_routes",
    ]);
    table.push(vec![
        num(mu),
        wgrid.k().to_string(),
        wgrid.harmonics().to_string(),
        wgrid.n_t().to_string(),
        sci6(oracle),
        sci6(identity),
        reference,
        blocks,
    ]);
    Ok(Report {
        table,
        summary: format!(
            "opmatrix-check: oracle_max_error={} time={:.3}s",
            sci6(oracle),
            start.elapsed().as_secs_f64()
        ),
    })
}

fn dump_matrices(a: &RunArgs) -> CliResult<Report> {
    a.reject("dump-matrices", &["alpha", "Nh", "p", "problem", "t", "x"])?;
    let wgrid = a.wavelet(1, 1)?;
    let mu = a.mu.unwrap_or(0.5);
    let ops = build_j(mu, &wgrid)?;
    let mut table = Table::new(["matrix", "row", "col", "value"]);
    for (name, m) in [("Q", &ops.q), ("F", &ops.f), ("J", &ops.j)] {
        for ((i, j), v) in m.indexed_iter() {
            table.push(vec![name.to_string(), i.to_string(), j.to_string(), g17(*v)]);
        }
    }
    Ok(Report {
        table,
        summary: format!("dump-matrices: mu={} n_t={}", num(mu), wgrid.n_t()),
    })
}

fn run(cli: Cli) -> CliResult<()> {
    let (args, report) = match &cli.command {
        Command::Solve(a) => (a, solve(a)?),
        Command::Table1(a) => (a, error_table(a, "table1", 1, 0.2, 20, 0.25, &TABLE1_CONFIGS)?),
        Command::Table2(a) => (a, error_table(a, "table2", 2, 0.7, 10, 0.5, &TABLE2_CONFIGS)?),
        Command::Table3(a) => (a, table3(a)?),
        Command::Psweep(a) => (a, psweep(a)?),
        Command::OpmatrixCheck(a) => (a, opmatrix_check(a)?),
        Command::DumpMatrices(a) => (a, dump_matrices(a)?),
    };
    let write = |w: &mut dyn Write| -> io::Result<()> {
        match args.format {
            Format::Csv => report.table.write_csv(w),
            Format::Human => report.table.write_human(w),
        }
    };
    match &args.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write(&mut w)?;
            w.flush()?;
            println!("{}", report.summary);
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            // keep stdout machine-readable
            eprintln!("{}", report.summary);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(CliError::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
