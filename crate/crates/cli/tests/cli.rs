use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mixedts::garch::{simulate, GarchParams};
use mixedts::moments::mixedts_moments;
use mixedts::params::MixedTsParams;
use mixedts::sampling::sample_mixedts;
use tempfile::TempDir;

const VFIAX: &str = "mu0=-0.0681\nmu=0.0601\nsigma=1.0530\na=1.1670\nlambda_plus=1.0280\nlambda_minus=1.0311\nalpha=1.4717\n";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixedts")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn failure(args: &[&str]) -> String {
    let out = run(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn column(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v}\n")).collect()
}

/// `x,pdf,cdf` rows.
fn density_rows(csv: &str) -> Vec<[f64; 3]> {
    csv.lines()
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            [v[0], v[1], v[2]]
        })
        .collect()
}

fn report_value(report: &str, key: &str) -> String {
    report
        .lines()
        .find_map(|l| l.strip_prefix(key).filter(|r| r.starts_with(' ')).map(|r| r.trim().to_string()))
        .unwrap_or_else(|| panic!("no `{key}` in\n{report}"))
}

#[test]
fn density_integrates_to_one() {
    let dir = TempDir::new().unwrap();
    let params = write(&dir, "vfiax.kv", VFIAX);
    let rows = density_rows(&ok(&["density", "--params", s(&params), "--window", "40"]));
    let mass: f64 = rows.windows(2).map(|w| 0.5 * (w[1][0] - w[0][0]) * (w[0][1] + w[1][1])).sum();
    assert!((mass - 1.0).abs() < 1e-3, "{mass}");
}

#[test]
fn vg_density_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let params = write(&dir, "vg.kv", "mu0=0\nmu=0\nsigma=1\na=2\nlambda_plus=1\nlambda_minus=1\nalpha=2\n");
    let out = dir.path().join("vg.csv");
    ok(&["density", "--params", s(&params), "--out", s(&out)]);
    // Half-integer Bessel order: K_{3/2} reduces to elementary functions.
    for [x, pdf, _] in density_rows(&fs::read_to_string(&out).unwrap()) {
        let z = std::f64::consts::SQRT_2 * x.abs();
        let exact = (z + 1.0) * (-z).exp() / 2f64.powf(1.5);
        assert!((pdf - exact).abs() < 1e-6, "x={x}: {pdf} vs {exact}");
    }
}

#[test]
fn malformed_params_name_the_line() {
    let dir = TempDir::new().unwrap();
    let params = write(&dir, "bad.kv", "mu0=0\nmu=zero\n");
    let err = failure(&["density", "--params", s(&params)]);
    assert!(err.contains("line 2"), "{err}");
}

fn skewed() -> MixedTsParams {
    MixedTsParams::new(0.5, -0.5, 1.0, 1.0, 2.5, 0.8, 1.3).unwrap()
}

#[test]
fn fit_reports_convergence_and_vg_pins_alpha() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "x.csv", &column(&sample_mixedts(&skewed(), 5000, 1).unwrap().values));
    let out = dir.path().join("fit");
    let report = ok(&["fit", "--data", s(&data), "--restarts", "1", "--out", s(&out)]);
    assert_eq!(report_value(&report, "converged"), "true");
    for key in ["mu0", "mu", "sigma", "a", "lambda_plus", "lambda_minus", "alpha", "A2", "X2", "A1"] {
        report_value(&report, key);
    }
    assert!(out.join("report.txt").exists() && out.join("fitted_density.csv").exists());
    let vg = ok(&["fit", "--data", s(&data), "--vg", "--restarts", "1"]);
    assert_eq!(report_value(&vg, "alpha").parse::<f64>().unwrap(), 2.0);
}

#[test]
fn fit_of_empty_csv_fails() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "empty.csv", "");
    let err = failure(&["fit", "--data", s(&data)]);
    assert!(err.contains("empty input"), "{err}");
}

fn garch_returns(t: usize) -> Vec<f64> {
    let p = skewed();
    let m = mixedts_moments(&p);
    let z: Vec<f64> = sample_mixedts(&p, t, 2).unwrap().values.iter().map(|x| (x - m.mean) / m.std_dev()).collect();
    simulate(&GarchParams::new(1e-6, 0.05, 0.90).unwrap(), &z).unwrap()
}

#[test]
fn garch_respects_stationarity() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "r.csv", &column(&garch_returns(3000)));
    let out = dir.path().join("garch");
    let report = ok(&["garch", "--data", s(&data), "--restarts", "1", "--out", s(&out)]);
    let a1: f64 = report_value(&report, "alpha1").parse().unwrap();
    let b1: f64 = report_value(&report, "beta1").parse().unwrap();
    assert!(a1 + b1 < 1.0);
    assert_eq!(fs::read_to_string(out.join("residuals.csv")).unwrap().lines().count(), 3001);
    let vg = ok(&["garch", "--data", s(&data), "--innovations", "vg", "--restarts", "1"]);
    assert_eq!(report_value(&vg, "alpha").parse::<f64>().unwrap(), 2.0);
}

#[test]
fn short_garch_series_fails() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "r.csv", &column(&garch_returns(200)));
    let err = failure(&["garch", "--data", s(&data)]);
    assert!(err.contains("series too short"), "{err}");
}

fn panel(dir: &TempDir, t: usize) -> (PathBuf, PathBuf) {
    let n = 10;
    let series: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let alpha = if i < 4 { 1.3 } else { 1.9 };
            let p = MixedTsParams::new(0.0, 0.0, 1.0, 1.0 + i as f64, 1.0, 2.0, alpha).unwrap();
            sample_mixedts(&p, t, 10 + i as u64).unwrap().values
        })
        .collect();
    let header: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let mut body = header.join(",") + "\n";
    for j in 0..t {
        let row: Vec<String> = (0..n).map(|i| (series[i][j] + 0.3 * series[(i + 1) % n][j]).to_string()).collect();
        body += &(row.join(",") + "\n");
    }
    let port: Vec<f64> = (0..t).map(|j| (0..n).map(|i| 0.1 * series[i][j]).sum()).collect();
    (write(dir, "panel.csv", &body), write(dir, "port.csv", &column(&port)))
}

#[test]
fn ica_writes_model_files() {
    let dir = TempDir::new().unwrap();
    let (data, port) = panel(&dir, 1500);
    let out = dir.path().join("ica");
    ok(&["ica", "--data", s(&data), "--portfolio", s(&port), "--restarts", "0", "--max-evals", "600", "--out", s(&out)]);
    let mixing = fs::read_to_string(out.join("mixing.csv")).unwrap();
    assert_eq!(mixing.lines().count(), 11);
    assert!(mixing.lines().all(|l| l.split(',').count() == 10));
    let jb = fs::read_to_string(out.join("jarque_bera.csv")).unwrap();
    assert_eq!(jb.lines().filter(|l| l.ends_with(",factor")).count(), 4);
    let rows = density_rows(&fs::read_to_string(out.join("reconstruction.csv")).unwrap());
    assert!(rows.len() > 100);
    assert!(out.join("normal.csv").exists());
}

#[test]
fn ica_factor_count_flag() {
    let dir = TempDir::new().unwrap();
    let (data, port) = panel(&dir, 1200);
    let out = dir.path().join("ica8");
    let args = ["ica", "--data", s(&data), "--portfolio", s(&port), "--factors", "8", "--restarts", "0"];
    ok(&[&args[..], &["--max-evals", "300", "--out", s(&out)]].concat());
    let jb = fs::read_to_string(out.join("jarque_bera.csv")).unwrap();
    assert_eq!(jb.lines().filter(|l| l.ends_with(",factor")).count(), 8);
    assert_eq!(jb.lines().filter(|l| l.ends_with(",noise")).count(), 2);
}

#[test]
fn ica_length_mismatch_fails() {
    let dir = TempDir::new().unwrap();
    let (data, _) = panel(&dir, 300);
    let port = write(&dir, "short.csv", &column(&[0.1; 299]));
    let out = dir.path().join("bad");
    let err = failure(&["ica", "--data", s(&data), "--portfolio", s(&port), "--out", s(&out)]);
    assert!(err.contains("observations"), "{err}");
}

#[test]
fn sample_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let params = write(&dir, "vfiax.kv", VFIAX);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        ok(&["--seed", "7", "sample", "--params", s(&params), "--count", "20000", "--out", s(out)]);
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("# seed=7"));
    assert_eq!(text.lines().count(), 20001);
}

#[test]
fn sample_variance_within_three_sigma() {
    let dir = TempDir::new().unwrap();
    let params = write(&dir, "vfiax.kv", VFIAX);
    let text = ok(&["sample", "--params", s(&params), "--count", "1000000"]);
    let x: Vec<f64> = text.lines().filter(|l| !l.starts_with('#')).map(|l| l.parse().unwrap()).collect();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let m = mixedts_moments(&MixedTsParams::new(-0.0681, 0.0601, 1.0530, 1.1670, 1.0280, 1.0311, 1.4717).unwrap());
    let se = (m.variance * m.variance * (m.kurtosis - 1.0) / n).sqrt();
    assert!((var - m.variance).abs() < 3.0 * se, "{var} vs {}", m.variance);
}

#[test]
fn zero_count_fails() {
    let dir = TempDir::new().unwrap();
    let params = write(&dir, "vfiax.kv", VFIAX);
    failure(&["sample", "--params", s(&params), "--count", "0"]);
}

#[test]
fn moments_are_printed() {
    let dir = TempDir::new().unwrap();
    let params = write(&dir, "vfiax.kv", VFIAX);
    let text = ok(&["moments", "--params", s(&params)]);
    let mean: f64 = text.lines().find_map(|l| l.strip_prefix("mean=")).unwrap().parse().unwrap();
    assert!((mean - (-0.0681 + 0.0601 * 1.1670)).abs() < 1e-12);
}
