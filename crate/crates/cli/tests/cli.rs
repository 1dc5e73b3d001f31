use std::process::{Command, Output};

fn fracwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracwave"))
        .args(args)
        .output()
        .expect("spawn fracwave")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn solve_at_a_point() {
    let o = fracwave(&[
        "solve", "--problem", "1", "--alpha", "0.2", "--k", "2", "--M", "1", "--Nh", "20", "--x",
        "0.5", "--t", "0.25",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0], ["x", "t", "y_n", "y_exact", "abs_error"]);
    assert_eq!(rows.len(), 2);
    let err: f64 = rows[1][4].parse().unwrap();
    assert!((err - 1.1885e-2).abs() < 1e-3 * 1.1885e-2, "{err}");
    let summary = String::from_utf8(o.stderr.clone()).unwrap();
    assert!(summary.contains("residual="));
    assert!(summary.contains("time="));
}

#[test]
fn table1_layout_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let o = fracwave(&["table1", "--out", path.to_str().unwrap()]);
        assert!(o.status.success());
        assert!(stdout(&o).starts_with("table1:"));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let rows = csv_rows(&text);
    assert_eq!(rows[0], ["x", "k2_M1", "k3_M1", "k4_M1", "k5_M1"]);
    assert_eq!(rows.len(), 10);
    assert_eq!(rows[1][0], "0.1");
    // %.6e cells
    assert!(rows[5][1].len() == 12 && rows[5][1].contains("e-0"));
}

#[test]
fn human_format() {
    let o = fracwave(&["opmatrix-check", "--format", "human"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(!text.contains(','));
    assert!(text.lines().next().unwrap().contains("oracle_max_error"));
}

#[test]
fn opmatrix_check_against_reference() {
    let o = fracwave(&["opmatrix-check", "--alpha", "0.5"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    let col = |name: &str| rows[0].iter().position(|h| h == name).unwrap();
    let dev: f64 = rows[1][col("reference_max_dev")].parse().unwrap();
    assert!(dev < 5e-5);
    let routes: f64 = rows[1][col("time_block_routes")].parse().unwrap();
    assert!(routes < 1e-12);
}

#[test]
fn dump_matrices_round_trip() {
    let o = fracwave(&["dump-matrices", "--mu", "0.5"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 1 + 3 * 36);
    let j00 = rows
        .iter()
        .find(|r| r[0] == "J" && r[1] == "0" && r[2] == "0")
        .unwrap();
    let v: f64 = j00[3].parse().unwrap();
    assert!((v - 0.5319).abs() < 5e-5);
}

#[test]
fn problem_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.toml");
    std::fs::write(
        &path,
        "name = \"quadratic\"\nalpha = 0.4\na = [1.0]\nb = [-1.0]\n\n\
         [[solution]]\ncoef = 1.0\nx_pow = 2\nt_pow = 2.0\n",
    )
    .unwrap();
    let o = fracwave(&["solve", "--problem", path.to_str().unwrap(), "--Nh", "10"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = String::from_utf8(o.stderr.clone()).unwrap();
    assert!(summary.starts_with("quadratic:"), "{summary}");
    assert_eq!(csv_rows(&stdout(&o)).len(), 12);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(fracwave(&["solve", "--bogus"]).status.code(), Some(2));
    assert_eq!(fracwave(&["table1", "--k", "3"]).status.code(), Some(2));
    assert_eq!(fracwave(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(fracwave(&["solve", "--format", "xml"]).status.code(), Some(2));
}

#[test]
fn numeric_errors_exit_one() {
    let o = fracwave(&["solve", "--alpha", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().contains("alpha"));
    assert_eq!(fracwave(&["solve", "--problem", "7"]).status.code(), Some(1));
    assert_eq!(
        fracwave(&["solve", "--problem", "/nonexistent/p.toml"]).status.code(),
        Some(1)
    );
    assert_eq!(fracwave(&["solve", "--x", "2.0"]).status.code(), Some(1));
}
