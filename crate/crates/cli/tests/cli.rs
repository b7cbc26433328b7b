use std::path::Path;
use std::process::{Command, Output};

fn nscluster(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nscluster"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) {
    let out = nscluster(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

const QUICK: &str = r#"{"schema_version": 1, "chain": {"iterations": 300, "burn_in": 100},
    "simulation": {"parent_steps": 100000}, "risk": {"cell_size": 300}}"#;

#[test]
fn simulate_fit_riskmap_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("run.json"), QUICK).unwrap();
    ok(
        d,
        &[
            "--config",
            "run.json",
            "--seed",
            "3",
            "simulate",
            "--scenario",
            "1",
            "--out",
            "sim",
        ],
    );
    for f in ["X.csv", "C_true.csv", "truth.json", "manifest.json"] {
        assert!(d.join("sim").join(f).exists(), "{f}");
    }
    ok(
        d,
        &[
            "--config",
            "run.json",
            "--seed",
            "3",
            "fit",
            "--data",
            "sim/X.csv",
            "--out",
            "fit",
        ],
    );
    let samples = std::fs::read_to_string(d.join("fit/samples.csv")).unwrap();
    let mut lines = samples.lines();
    assert_eq!(lines.next(), Some("iter,alpha,omega,kappa,theta1,theta2,m"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 200);
    assert!(rows.iter().all(|r| r.split(',').count() == 7));

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("fit/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "fit");
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);

    ok(d, &["--config", "run.json", "riskmap", "--fit", "fit", "--out", "risk"]);
    let asc = std::fs::read_to_string(d.join("risk/intensity.asc")).unwrap();
    assert!(asc.starts_with("ncols 82\nnrows 82\n"), "{}", &asc[..40]);
    let gj: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("risk/boundaries.geojson")).unwrap()).unwrap();
    assert_eq!(gj["type"], "FeatureCollection");
    assert!(d.join("risk/high_risk.asc").exists());
}

#[test]
fn pcf_writes_three_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("run.json"), QUICK).unwrap();
    ok(
        d,
        &["--config", "run.json", "simulate", "--scenario", "2", "--out", "sim"],
    );
    ok(
        d,
        &[
            "pcf",
            "--data",
            "sim/X.csv",
            "--r-max",
            "1000",
            "--r-step",
            "100",
            "--out",
            "pcf.csv",
        ],
    );
    let text = std::fs::read_to_string(d.join("pcf.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,K,J"));
    assert_eq!(lines.count(), 10);
}

#[test]
fn errors_are_single_line_json() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("X.csv"), "x,y\n1,2\nfoo,3\n").unwrap();
    let out = nscluster(d, &["fit", "--data", "X.csv"]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    let last = err.lines().last().unwrap();
    let v: serde_json::Value = serde_json::from_str(last).unwrap();
    assert_eq!(v["error"], "parse");

    let out = nscluster(d, &["simulate", "--scenario", "9"]);
    assert!(!out.status.success());
    let v: serde_json::Value =
        serde_json::from_str(String::from_utf8(out.stderr).unwrap().lines().last().unwrap()).unwrap();
    assert_eq!(v["error"], "unknown_scenario");
}

#[test]
fn riskmap_can_average_parent_draws() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = QUICK.replace("\"burn_in\": 100}", "\"burn_in\": 100, \"parent_thin\": 50}");
    std::fs::write(d.join("run.json"), cfg).unwrap();
    ok(
        d,
        &["--config", "run.json", "simulate", "--scenario", "3", "--out", "sim"],
    );
    ok(
        d,
        &["--config", "run.json", "fit", "--data", "sim/X.csv", "--out", "fit"],
    );
    let draws = std::fs::read_to_string(d.join("fit/parent_draws.csv")).unwrap();
    assert!(draws.starts_with("iter,alpha,omega,x,y\n"));
    let iters: std::collections::BTreeSet<&str> = draws.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(iters.len(), 4);
    ok(
        d,
        &[
            "--config",
            "run.json",
            "riskmap",
            "--fit",
            "fit",
            "--average",
            "--out",
            "avg",
        ],
    );
    ok(d, &["--config", "run.json", "riskmap", "--fit", "fit", "--out", "last"]);
    let avg = std::fs::read_to_string(d.join("avg/intensity.asc")).unwrap();
    let last = std::fs::read_to_string(d.join("last/intensity.asc")).unwrap();
    assert_ne!(avg, last);
    let manifest = std::fs::read_to_string(d.join("avg/manifest.json")).unwrap();
    assert!(manifest.contains("parent_draws.csv"));
}

#[test]
fn readme_config_example_loads() {
    let readme = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../README.md")).unwrap();
    let toml: String = readme
        .split("```toml\n")
        .nth(1)
        .and_then(|rest| rest.split("```").next())
        .unwrap()
        .to_string();
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("cfg.toml"), toml).unwrap();
    ok(
        d,
        &[
            "--config",
            "cfg.toml",
            "simulate",
            "--parent-steps",
            "1000",
            "--out",
            "sim",
        ],
    );
}
