use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_billiard-spectra"));
    cmd.env("RUST_LOG", "info");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("the binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_curve(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn circle(dir: &TempDir) -> PathBuf {
    write_curve(dir, "circle.toml", "c0 = 1.3\n")
}

fn perturbed(dir: &TempDir) -> PathBuf {
    write_curve(dir, "perturbed.toml", "c0 = 1.0\n\n[[harmonics]]\nk = 3\na = 0.1\n")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p,q,delta,action_min,action_minimax,bits,flags"));
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn circle_gaps_are_at_the_precision_floor() {
    let dir = TempDir::new().unwrap();
    let curve = circle(&dir);
    for table in ["inner", "outer"] {
        let out = dir.path().join(format!("{table}.csv"));
        let o = run(&[
            "spectrum", "--curve", s(&curve), "--table", table, "--q-min", "5", "--q-max", "9", "--bits", "128",
            "--out", s(&out), "--serial",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let rows = data_rows(&out);
        assert_eq!(rows.len(), 5);
        for row in rows {
            assert!(row[6].contains("precision_floor"), "{row:?}");
        }
    }
}

#[test]
fn repeated_runs_hit_the_cache() {
    let dir = TempDir::new().unwrap();
    let curve = perturbed(&dir);
    let cache = dir.path().join("runs.jsonl");
    let args = |out: &Path| {
        vec![
            "spectrum".to_string(), "--curve".into(), s(&curve).into(), "--q-min".into(), "5".into(),
            "--q-max".into(), "7".into(), "--bits".into(), "128".into(), "--cache".into(), s(&cache).into(),
            "--out".into(), s(out).into(),
        ]
    };
    let first = dir.path().join("a.csv");
    let o = bin().args(args(&first)).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("computing 3 orbit pairs"));

    let second = dir.path().join("b.csv");
    let o = bin().args(args(&second)).output().unwrap();
    assert!(o.status.success());
    let log = stderr(&o);
    assert_eq!(log.matches("cache hit").count(), 3, "{log}");
    assert!(!log.contains("computing"));
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());

    // Re-running into the same output appends nothing.
    let o = bin().args(args(&first)).output().unwrap();
    assert!(stderr(&o).contains("already in the output"));
    assert_eq!(data_rows(&first).len(), 3);
}

#[test]
fn cache_never_serves_fewer_bits() {
    let dir = TempDir::new().unwrap();
    let curve = perturbed(&dir);
    let cache = dir.path().join("runs.jsonl");
    let spectrum = |bits: &str, out: &Path| {
        run(&[
            "spectrum", "--curve", s(&curve), "--q-min", "5", "--q-max", "6", "--bits", bits, "--cache", s(&cache),
            "--out", s(out),
        ])
    };
    let low = dir.path().join("low.csv");
    assert!(spectrum("96", &low).status.success());
    let high = dir.path().join("high.csv");
    let o = spectrum("192", &high);
    assert!(o.status.success());
    assert!(!stderr(&o).contains("cache hit"));
    for row in data_rows(&high) {
        assert!(row[5].parse::<u32>().unwrap() >= 192);
    }
    // The 192-bit rows may serve a later 96-bit request.
    let again = dir.path().join("again.csv");
    let o = spectrum("96", &again);
    assert!(stderr(&o).contains("cache hit"));
}

#[test]
fn csv_output_is_bit_stable() {
    let dir = TempDir::new().unwrap();
    let curve = perturbed(&dir);
    let mut outputs = Vec::new();
    for name in ["x", "y"] {
        let out = dir.path().join(format!("{name}.csv"));
        let cache = dir.path().join(format!("{name}.cache"));
        let o = run(&[
            "spectrum", "--curve", s(&curve), "--table", "outer", "--q-min", "5", "--q-max", "8", "--bits", "128",
            "--out", s(&out), "--cache", s(&cache),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn fit_recovers_a_synthetic_law() {
    // delta = exp(0.5 − 2π·0.3·q) in f64, printed with round-trip digits.
    let dir = TempDir::new().unwrap();
    let mut csv = String::from("p,q,delta,action_min,action_minimax,bits,flags\n");
    for q in 6..14u32 {
        let log_delta = 0.5 - 2.0 * std::f64::consts::PI * 0.3 * f64::from(q);
        let delta = log_delta.exp();
        csv.push_str(&format!("1,{q},{delta:e},0,{delta:e},128,\n"));
    }
    let input = write_curve(&dir, "synthetic.csv", &csv);
    let o = run(&["fit", "--input", s(&input)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((report["alpha"].as_f64().unwrap() - 0.3).abs() < 1e-10);
    assert!((report["log_k"].as_f64().unwrap() - 0.5).abs() < 1e-10);
    assert!(report["r_squared"].as_f64().unwrap() > 1.0 - 1e-12);
    assert_eq!(report["points"], 8);
}

#[test]
fn asymptotics_on_the_circle() {
    let dir = TempDir::new().unwrap();
    let curve = circle(&dir);
    let out = dir.path().join("asym.json");
    let o = run(&["asymptotics", "--curve", s(&curve), "--q", "16,32,64", "--bits", "128", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let want = -(std::f64::consts::PI.powi(3) * 1.3 / 3.0);
    for key in ["analytic", "empirical"] {
        let got: f64 = report["l1"][key].as_str().unwrap().parse().unwrap();
        assert!(((got - want) / want).abs() < 1e-8, "{key}: {got}");
    }
    let a1: f64 = report["a1"]["cubed"].as_str().unwrap().parse().unwrap();
    let want = std::f64::consts::PI.powi(3) * 1.3 * 1.3 / 3.0;
    assert!(((a1 - want) / want).abs() < 1e-8);
}

#[test]
fn normalform_on_the_circle_is_trivial() {
    let dir = TempDir::new().unwrap();
    let curve = circle(&dir);
    let out = dir.path().join("nf.json");
    let o = run(&[
        "normalform", "--curve", s(&curve), "--order", "4", "--kmax", "4", "--jmax", "10", "--bits", "128", "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("rung")).count(), 2, "{text}");
    assert!(!text.contains("non-trivial"), "{text}");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    for rung in report["rungs"].as_array().unwrap() {
        assert_eq!(rung["trivial"], true);
    }
}

#[test]
fn invalid_input_fails_with_a_diagnostic() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("none.toml");
    let o = run(&["spectrum", "--curve", s(&missing), "--q-min", "5", "--q-max", "6"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("error"));

    let concave = write_curve(&dir, "bad.toml", "c0 = 1.0\n\n[[harmonics]]\nk = 2\na = 1.2\n");
    let o = run(&["spectrum", "--curve", s(&concave), "--q-min", "5", "--q-max", "6"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("error"));

    let good = circle(&dir);
    let o = run(&["spectrum", "--curve", s(&good), "--q-min", "9", "--q-max", "5"]);
    assert!(!o.status.success());

    let o = run(&["fit", "--input", s(&dir.path().join("absent.csv"))]);
    assert!(!o.status.success());

    let o = run(&["spectrum", "--curve", s(&good), "--table", "sideways", "--q-min", "5", "--q-max", "6"]);
    assert!(!o.status.success());
}
