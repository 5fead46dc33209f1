use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fspec")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = fspec(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).skip(1).map(String::from).collect()
}

#[test]
fn gen_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    ok(&["gen", "--bits", "40", "--count", "100", "--seed", "7", "--out", s(&out)]);
    let first = fs::read(out.join("records.csv")).unwrap();
    ok(&["--threads", "2", "gen", "--bits", "40", "--count", "100", "--seed", "7", "--out", s(&out)]);
    assert_eq!(first, fs::read(out.join("records.csv")).unwrap());
    assert_eq!(data_rows(&out.join("records.csv")).len(), 100);
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("# config: {\"tool\":\"fspec\""));
    assert!(text.contains("\"seed\":7"));
}

#[test]
fn gen_smoke_rows_satisfy_invariants() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&["gen", "--bits", "6", "--count", "5", "--seed", "1", "--out", s(dir.path())]);
    assert!(stdout.starts_with("count=5 j=["));
    let sieve: Vec<u64> = (2..64u64).filter(|n| (2..*n).all(|d| n % d != 0)).collect();
    let pi = |v: u64| sieve.iter().filter(|&&p| p <= v).count() as u64;
    for row in data_rows(&dir.path().join("records.csv")) {
        let f: Vec<&str> = row.split(',').collect();
        let (n, x, y, j): (u64, u64, u64, u64) =
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap(), f[3].parse().unwrap());
        assert_eq!(x * y, n);
        assert!(x <= y && sieve.contains(&x) && sieve.contains(&y));
        assert!((32..64).contains(&n));
        let root = (n as f64).sqrt().floor() as u64;
        assert_eq!(j, pi(root));
        let e: f64 = f[4].parse().unwrap();
        assert!((e - (pi(x) * pi(y)) as f64 / (j * j) as f64).abs() < 1e-15);
        let (p, q): (f64, f64) = (f[5].parse().unwrap(), f[6].parse().unwrap());
        assert!((q * q - p * p - e).abs() < 1e-12);
    }
}

#[test]
fn odd_bits_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = fspec(&["gen", "--bits", "41", "--count", "3", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = fspec(&["unfold", "--records", s(&missing), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"bits": 12, "count": 4, "seed": 3}"#).unwrap();
    ok(&["--config", s(&cfg), "gen", "--seed", "9", "--out", s(dir.path())]);
    let head = fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert!(head.contains("\"seed\":9") && head.contains("\"count\":4"));
}

#[test]
fn single_shell_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["spectrum", "--bits", "40", "--k-max", "1", "--out", s(dir.path())]);
    let v = json(&dir.path().join("spectrum.json"));
    let lines = v["lines"].as_array().unwrap();
    assert_eq!(lines.len(), 1);
    assert_eq!(lines[0]["weight"].as_f64(), Some(1.0));
    assert_eq!(v["config"]["command"], "spectrum");
}

#[test]
fn scaling_round_trips_and_is_identity_at_same_size() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("base");
    let up = dir.path().join("up");
    let down = dir.path().join("down");
    let same = dir.path().join("same");
    ok(&["spectrum", "--bits", "40", "--k-max", "30", "--l-modes", "8", "--out", s(&base)]);
    let spec = base.join("spectrum.json");
    ok(&["scale", "--spectrum", s(&spec), "--bits", "80", "--out", s(&up)]);
    ok(&["scale", "--spectrum", s(&up.join("spectrum_scaled.json")), "--bits", "40", "--out", s(&down)]);
    ok(&["scale", "--spectrum", s(&spec), "--bits", "40", "--out", s(&same)]);
    let a = json(&spec);
    let b = json(&down.join("spectrum_scaled.json"));
    let c = json(&same.join("spectrum_scaled.json"));
    assert_eq!(a["lines"], c["lines"]);
    for (x, y) in a["lines"].as_array().unwrap().iter().zip(b["lines"].as_array().unwrap()) {
        let (ex, ey) = (x["E"].as_f64().unwrap(), y["E"].as_f64().unwrap());
        assert!((ex - ey).abs() <= 1e-12 * ex);
    }
}

#[test]
fn unfold_rejects_oversized_window() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["gen", "--bits", "20", "--count", "50", "--seed", "2", "--out", s(dir.path())]);
    let out =
        fspec(&["unfold", "--records", s(&dir.path().join("records.csv")), "--L", "1000", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("too short"));
}

#[test]
fn unfold_and_kde_consume_gen_output() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(&["gen", "--bits", "24", "--count", "600", "--seed", "5", "--out", s(p)]);
    let records = p.join("records.csv");
    ok(&["unfold", "--records", s(&records), "--L", "100", "--seed", "1", "--out", s(p)]);
    let first = fs::read(p.join("spacings.csv")).unwrap();
    ok(&["unfold", "--records", s(&records), "--L", "100", "--seed", "1", "--out", s(p)]);
    assert_eq!(first, fs::read(p.join("spacings.csv")).unwrap());
    assert_eq!(data_rows(&p.join("spacings.csv")).len(), 600 - 100);
    ok(&["kde", "--records", s(&records), "--out", s(p)]);
    let text = fs::read_to_string(p.join("kde.csv")).unwrap();
    assert_eq!(text.lines().nth(1), Some("grid,kde_density,pe_density"));
    let rows: Vec<Vec<f64>> =
        data_rows(&p.join("kde.csv")).iter().map(|r| r.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    let area: f64 = rows.windows(2).map(|w| 0.5 * (w[1][0] - w[0][0]) * (w[0][1] + w[1][1])).sum();
    assert!((area - 1.0).abs() < 1e-3);
    assert!(rows.iter().all(|r| r[2] >= 0.0 && (r[0] > 0.0 || r[2] == 0.0)));
}

#[test]
fn fit_identifies_gue_spacings() {
    use factoring_spectrum::spacing_stats::{synthetic_sample, Model};
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gue.csv");
    fs::write(&path, synthetic_sample(Model::Gue, 20_000, 4).to_csv()).unwrap();
    let stdout = ok(&["fit", "--spacings", s(&path), "--bins", "40", "--out", s(dir.path())]);
    assert!(stdout.contains("best_model=GUE"), "{stdout}");
    let v = json(&dir.path().join("fit.json"));
    assert_eq!(v["best_model"], "GUE");
    assert_eq!(data_rows(&dir.path().join("histogram.csv")).len(), 40);
}

#[test]
fn invert_small_modulus() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["invert", "--N", "77", "--exact-pi", "--out", s(dir.path())]);
    let v = json(&dir.path().join("invert.json"));
    assert_eq!(v["success"], true);
    assert_eq!(v["x"], "7");
    assert_eq!(v["y"], "11");
    assert_eq!(v["N"], "77");
}

#[test]
fn invert_needs_a_counting_source() {
    let dir = tempfile::tempdir().unwrap();
    let out = fspec(&["invert", "--N", "77", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn locked_modes_echo_frequencies() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&["trap", "modes", "--lock", "--omega-z", "0.5", "--out", s(dir.path())]);
    assert!(stdout.contains("lambda_plus=") && stdout.contains("omega_minus=") && stdout.contains("a="));
    let v = json(&dir.path().join("modes.json"));
    let omega_minus = v["params"]["omega_minus"].as_f64().unwrap();
    assert_eq!(v["params"]["inputs"]["omega_lambda"].as_f64(), Some(omega_minus));
    assert!(v["modes"]["lambda_minus"].as_f64().unwrap().abs() < 1e-8);
}

#[test]
fn scan_has_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "trap",
        "scan",
        "--mu-list",
        "4,16",
        "--phi-min",
        "0",
        "--phi-max",
        "10",
        "--phi-steps",
        "6",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(data_rows(&dir.path().join("stability.csv")).len(), 12);
}

#[test]
fn integrate_and_mathieu_write_series() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(&[
        "trap",
        "integrate",
        "--omega-z",
        "0.4",
        "--lambda",
        "0.02",
        "--omega-lambda",
        "0.02",
        "--radius",
        "4",
        "--dt",
        "0.02",
        "--steps",
        "50",
        "--out",
        s(p),
    ]);
    assert_eq!(data_rows(&p.join("trajectory.csv")).len(), 51);
    ok(&["trap", "mathieu", "--mu", "16", "--phi", "11.2192", "--periods", "2", "--out", s(p)]);
    assert_eq!(data_rows(&p.join("mathieu.csv")).len(), 2 * 3142 + 1);
    assert_eq!(json(&p.join("mathieu.json"))["config"]["command"], "trap mathieu");
}
