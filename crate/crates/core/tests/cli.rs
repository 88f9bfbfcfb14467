use std::path::Path;
use std::process::{Command, Output};

use modspace::field::gaussian_window;
use modspace::io::load_tf;
use modspace::tfa::stft;
use modspace::Grid;

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modspace"))
        .args(args)
        .env("MODSPACE_OUT_DIR", out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn printed_value(o: &Output) -> f64 {
    let text = stdout(o);
    let after = text.split(" = ").nth(1).expect("value printed");
    after.split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn norm_of_normalized_gaussian_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["norm", "--space", "M", "--phi", "power:2", "--psi", "power:2", "--signal", "gaussian:1"]);
    assert!(o.status.success());
    assert!((printed_value(&o) - 1.0).abs() < 1e-9);
    let record: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("norm.json")).unwrap()).unwrap();
    assert_eq!(record[0]["norm_name"], "M");
}

#[test]
fn norm_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let zero = run(dir.path(), &["norm", "--signal", "zero"]);
    assert!(zero.status.success());
    assert_eq!(printed_value(&zero), 0.0);
    let bad = run(dir.path(), &["norm", "--phi", "nosuch:2"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("nosuch"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("norm.json");
    std::fs::write(&cfg, r#"{"space": "L", "phi": "power:1", "signal": "gaussian:1", "n": 256}"#).unwrap();
    let out = dir.path().join("rec.csv");
    let o = run(
        dir.path(),
        &["norm", "--config", cfg.to_str().unwrap(), "--phi", "power:2", "--output", out.to_str().unwrap()],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    // the flag wins: ‖g‖_{L²} of the unit Gaussian
    assert!((printed_value(&o) - 1.0).abs() < 1e-12);
    assert!(stdout(&o).contains("n=256"));
    assert!(out.exists());
    std::fs::write(&cfg, r#"{"spcae": "L"}"#).unwrap();
    assert!(!run(dir.path(), &["norm", "--config", cfg.to_str().unwrap()]).status.success());
}

#[test]
fn multiplier_condition_tables() {
    let dir = tempfile::tempdir().unwrap();
    let id = run(dir.path(), &["multiplier", "--symbol", "identity", "--check", "mihlin"]);
    assert!(id.status.success());
    for line in stdout(&id).lines().filter(|l| l.starts_with("(1,")) {
        let values: Vec<f64> = line.split_whitespace().skip(1).take(3).map(|v| v.parse().unwrap()).collect();
        assert_eq!(values, vec![0.0; 3]);
    }
    let chirp = run(dir.path(), &["multiplier", "--symbol", "homogeneous_chirp:1,2", "--check", "mihlin"]);
    assert!(chirp.status.success());
    let text = stdout(&chirp);
    let row = text.lines().find(|l| l.starts_with("(1,0)")).unwrap();
    assert!(row.ends_with("Divergent"), "{row}");
    assert!(dir.path().join("mihlin_study.json").exists());
    let missing = run(dir.path(), &["multiplier", "--symbol", "homogeneous_chirp", "--check", "mihlin"]);
    assert!(!missing.status.success());
}

#[test]
fn multiplier_applies_to_a_signal() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["multiplier", "--symbol", "homogeneous_chirp:1,2", "--signal", "bandlimited:4"]);
    assert!(o.status.success());
    let field = modspace::io::load_field(&dir.path().join("multiplied.csv")).unwrap();
    let f = modspace::field::random_bandlimited(Grid::default_1d(), 0.5, 4).unwrap();
    assert!((field.l2_norm() / f.l2_norm() - 1.0).abs() < 1e-11);
}

#[test]
fn stft_file_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["stft", "--signal", "gaussian:2", "--n", "64", "--dx", "0.25"]);
    assert!(o.status.success());
    let tf = load_tf(&dir.path().join("stft.bin")).unwrap();
    let g = Grid::new(1, 64, 0.25).unwrap();
    let expect = stft(&gaussian_window(2.0, g).unwrap(), &gaussian_window(1.0, g).unwrap()).unwrap();
    assert_eq!(tf, expect);
}

#[test]
fn verify_single_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify", "--only", "commutation", "--no-2d"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let reports: Vec<serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("reports.json")).unwrap()).unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0]["verdict"], "identity_pass");
    assert!(reports[0]["max_deviation"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn verify_is_byte_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["verify", "--seed", "7", "--only", "moyal,mtilde,wm_duality", "--emit-plots"];
    assert!(run(a.path(), &args).status.success());
    assert!(run(b.path(), &args).status.success());
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 2);
    for name in names {
        let x = std::fs::read(a.path().join(&name)).unwrap();
        let y = std::fs::read(b.path().join(&name)).unwrap();
        assert_eq!(x, y, "{name:?} differs");
    }
}

#[test]
fn verify_config_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("suite.json");
    std::fs::write(&cfg, r#"{"checks": ["no_such_check"]}"#).unwrap();
    assert!(!run(dir.path(), &["verify", "--config", cfg.to_str().unwrap()]).status.success());
    assert!(!run(dir.path(), &["verify", "--config", "/nonexistent/suite.json"]).status.success());
    assert!(!run(dir.path(), &["verify", "--only", "bogus"]).status.success());
}
