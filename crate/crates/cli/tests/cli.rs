use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fusionframe"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const TIGHT2: &str = r#"{"ambient_dim": 2, "components": [
  {"weight": 1.0, "subspace_basis": [[1.0, 0.0]]},
  {"weight": 1.0, "subspace_basis": [[0.0, 1.0]]},
  {"weight": 1.0, "subspace_basis": [[1.0, 0.0], [0.0, 1.0]]}]}"#;

const SKEW: &str = r#"{"ambient_dim": 2, "components": [
  {"weight": 1.0, "subspace_basis": [[1.0, 0.0]]},
  {"weight": 1.0, "subspace_basis": [[1.0, 1.0]]}]}"#;

const LINE: &str = r#"{"ambient_dim": 2, "components": [
  {"weight": 1.0, "subspace_basis": [[1.0, 0.0]]}]}"#;

fn json_field(text: &str, key: &str) -> serde_json::Value {
    let v: serde_json::Value = serde_json::from_str(text).unwrap();
    v[key].clone()
}

fn csv_column(text: &str, row_prefix: &str, col: usize) -> Vec<f64> {
    text.lines()
        .filter(|l| l.starts_with(row_prefix))
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn generated_orthonormal_basis_checks_out() {
    let dir = TempDir::new().unwrap();
    let fx = dir.path().join("onb.json");
    let o = run(&["generate", "--kind", "orthonormal", "--dim", "2", "--subspaces", "2", "--output", s(&fx)]);
    assert!(o.status.success(), "{o:?}");
    let o = run(&["check", "--input", s(&fx)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(json_field(&text, "lower").as_f64().unwrap(), 1.0);
    assert_eq!(json_field(&text, "upper").as_f64().unwrap(), 1.0);
    assert_eq!(json_field(&text, "redundancy").as_f64().unwrap(), 1.0);
    assert_eq!(json_field(&text, "is_orthonormal_fusion_basis"), true);
}

#[test]
fn check_tight_fixture() {
    let dir = TempDir::new().unwrap();
    let fx = write(&dir, "t.json", TIGHT2);
    let text = stdout(&run(&["check", "--input", s(&fx)]));
    assert!((json_field(&text, "lower").as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!((json_field(&text, "upper").as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!((json_field(&text, "redundancy").as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(json_field(&text, "is_tight"), true);
}

#[test]
fn non_frame_exits_with_two_and_still_reports() {
    let dir = TempDir::new().unwrap();
    let fx = write(&dir, "line.json", LINE);
    let o = run(&["check", "--input", s(&fx)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(json_field(&stdout(&o), "lower").as_f64().unwrap().abs() < 1e-12);
    assert!(!o.stderr.is_empty());
    let o = run(&["recon", "--input", s(&fx)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
}

#[test]
fn usage_and_schema_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", r#"{"ambient_dim": 2}"#);
    assert_eq!(run(&["check", "--input", s(&bad)]).status.code(), Some(1));
    assert_eq!(run(&["check", "--input", "/nonexistent/x.json"]).status.code(), Some(1));
    assert_eq!(run(&["check"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["generate", "--kind", "random", "--dim", "3", "--subspaces", "1", "--subspace-dim", "4"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn split_generation_is_a_frame() {
    let dir = TempDir::new().unwrap();
    let fx = dir.path().join("split.json");
    let o = run(&[
        "generate", "--kind", "split", "--dim", "8", "--vectors", "20", "--subspaces", "4", "--overlap", "2",
        "--seed", "9", "--output", s(&fx),
    ]);
    assert!(o.status.success());
    let text = stdout(&run(&["check", "--input", s(&fx)]));
    assert!(json_field(&text, "lower").as_f64().unwrap() > 0.0);
    assert_eq!(json_field(&text, "flattened_within_predicted"), true);
}

#[test]
fn pipeline_is_byte_identical_across_runs() {
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let dir = TempDir::new().unwrap();
        let fx = dir.path().join("r.json");
        let gen = run(&[
            "generate", "--dim", "6", "--subspaces", "4", "--subspace-dim", "2", "--local-size", "3",
            "--random-weights", "--seed", "42", "--output", s(&fx),
        ]);
        assert!(gen.status.success());
        let check = run(&["check", "--input", s(&fx)]);
        let recon = run(&["recon", "--input", s(&fx), "--seed", "42", "--sigma", "0.01"]);
        assert!(check.status.success() && recon.status.success());
        outputs.push((fs::read(&fx).unwrap(), check.stdout, recon.stdout));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn recon_outputs_exact_rows_and_geometric_trace() {
    let dir = TempDir::new().unwrap();
    let fx = write(&dir, "skew.json", SKEW);
    let o = run(&["recon", "--input", s(&fx), "--signal", "1,-2", "--max-iterations", "30", "--tolerance", "0"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("row,method,n,residual,bound,"));
    assert!(!text.contains('\r'));
    for r in csv_column(&text, "method,local-fusion", 3)
        .into_iter()
        .chain(csv_column(&text, "method,fused-dual", 3))
        .chain(csv_column(&text, "method,centralized", 3))
    {
        assert!(r <= 1e-8);
    }
    let bounds = csv_column(&text, "trace,", 4);
    assert_eq!(bounds.len(), 31);
    let ratio = 2f64.sqrt() / 2.0;
    for (n, b) in bounds.iter().enumerate() {
        assert!((b - ratio.powi(n as i32)).abs() <= 1e-15 * 10.0, "n={n} {b}");
    }
    let errors = csv_column(&text, "trace,", 3);
    for (e, b) in errors.iter().zip(&bounds) {
        assert!(*e <= b * (1.0 + 1e-6));
    }
    // wall time column stays empty unless requested
    assert!(text.lines().filter(|l| l.starts_with("method,")).all(|l| l.ends_with(',')));
    let timed = stdout(&run(&["recon", "--input", s(&fx), "--timings"]));
    assert!(timed.lines().filter(|l| l.starts_with("method,")).all(|l| !l.ends_with(',')));
}

#[test]
fn recon_rejects_wrong_signal_length() {
    let dir = TempDir::new().unwrap();
    let fx = write(&dir, "skew.json", SKEW);
    assert_eq!(run(&["recon", "--input", s(&fx), "--signal", "1,2,3"]).status.code(), Some(1));
}

#[test]
fn perturb_without_noise_predicts_exactly() {
    let dir = TempDir::new().unwrap();
    let fx = write(&dir, "t.json", TIGHT2);
    let summary = dir.path().join("summary.json");
    let o = run(&["perturb", "--input", s(&fx), "--noise", "0", "--trials", "4", "--summary", s(&summary)]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 5);
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[4], "true");
        let num = |k: usize| cols[k].parse::<f64>().unwrap();
        assert!((num(5) - num(7)).abs() <= 1e-12 * num(7));
        assert!((num(6) - num(8)).abs() <= 1e-12 * num(8));
        assert_eq!(cols[9], "true");
    }
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(s["containment_rate"], 1.0);
    assert!(String::from_utf8(o.stderr).unwrap().contains("containment 100.0%"));
}

#[test]
fn perturb_large_noise_reports_gate_failures() {
    let dir = TempDir::new().unwrap();
    let fx = write(&dir, "skew.json", SKEW);
    let o = run(&["perturb", "--input", s(&fx), "--noise", "1.5", "--trials", "10", "--seed", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let failed: Vec<&str> = text.lines().skip(1).filter(|l| l.contains(",false,")).collect();
    assert!(!failed.is_empty());
    for line in failed {
        assert!(line.ends_with(','), "no containment claim expected: {line}");
    }
}

#[test]
fn simulate_examples() {
    let dir = TempDir::new().unwrap();
    let fx = write(&dir, "t.json", TIGHT2);
    let o = run(&["simulate", "--input", s(&fx), "--sigma", "0", "--dropout", "0", "--trials", "20"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().next().unwrap(), "sigma,dropout,mode,trials,failures,mean_error,median_error,max_error");
    for line in text.lines().skip(1) {
        let max: f64 = line.split(',').nth(7).unwrap().parse().unwrap();
        assert!(max <= 1e-8);
    }
}

#[test]
fn config_file_supplies_flags_and_command_line_wins() {
    let dir = TempDir::new().unwrap();
    let fx = write(&dir, "t.json", TIGHT2);
    let cfg = write(
        &dir,
        "run.toml",
        &format!("input = {:?}\nsigma = [0.0, 0.1]\ndropout = 0.5\ntrials = 7\nseed = 5\n", s(&fx)),
    );
    let o = run(&["simulate", "--config", s(&cfg)]);
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1 + 2 * 2);
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(3) == Some("7")));

    let o = run(&["simulate", "--config", s(&cfg), "--trials", "3", "--sigma", "0"]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1 + 2);
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(3) == Some("3")));

    let bad = write(&dir, "bad.toml", "no_such_flag = 1\n");
    assert_eq!(run(&["simulate", "--config", s(&bad)]).status.code(), Some(1));
}
