//! End-to-end runs of the `hopfield` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hopfield_cli::output::TableData;

fn hopfield(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hopfield"))
        .args(args)
        .current_dir(cwd)
        .env("HOPFIELD_SCENARIOS", Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios"))
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const SCHEME1: &str = r#"
name = "probe"
scheme = "I"
backends = ["semiclassical"]
outputs = ["mean_x", "mandel_q_photon"]

[params]
gamma = 1.0
lambda = 0.2

[initial]
x0 = 3.0
w = 0.5

[times]
end = 5.0
samples = 11
"#;

#[test]
fn spectrum_reports_resonant_period() {
    let dir = tempfile::tempdir().unwrap();
    let out = hopfield(&["spectrum", "--gamma", "1", "--lambda", "0.05"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("T           251.327"), "{text}");
}

#[test]
fn fig03a_has_documented_header_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = hopfield(&["scenario", "fig03a", "-o", "out"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/fig03a.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,X_semiclassical,X_fock");
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/fig03a.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["metadata"]["config"]["params"]["lambda"], 0.05);
    assert_eq!(meta["metadata"]["config"]["average"]["periods"], 5);
    assert!(meta["metadata"]["truncations"][0]["n_matter_max"].as_u64().unwrap() > 0);
    let table = TableData::read_csv(csv.as_bytes()).unwrap();
    let (s, f) = (table.column("X_semiclassical").unwrap(), table.column("X_fock").unwrap());
    for (a, b) in s.iter().zip(&f) {
        assert!((a.unwrap() - b.unwrap()).abs() < 1e-6);
    }
}

#[test]
fn undefined_q_is_empty_in_csv_and_null_in_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SCHEME1);
    assert!(hopfield(&["evolve", &cfg, "-o", "csv"], dir.path()).status.success());
    let csv = fs::read_to_string(dir.path().join("csv/probe.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "0,3,");
    assert!(hopfield(&["evolve", &cfg, "-o", "json", "--format", "json"], dir.path()).status.success());
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("json/probe.json")).unwrap()).unwrap();
    assert!(json["rows"][0][2].is_null());
    assert!(json["rows"][1][2].is_f64());
}

#[test]
fn config_errors_exit_2_with_machine_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SCHEME1.replace("w = 0.5", "w = 0.0"));
    let out = hopfield(&["--machine", "evolve", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(report["error"], "config");
    assert!(report["message"].as_str().unwrap().contains("w must be > 0"));

    let cfg = write_config(dir.path(), SCHEME1);
    let out = hopfield(&["evolve", &cfg, "--set", "params.gama=1.1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gama"));
}

#[test]
fn small_cutoffs_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let body = SCHEME1.replace("\"semiclassical\"]", "\"fock\"]") + "\n[truncation]\nmatter = 6\nphoton = 6\n";
    let cfg = write_config(dir.path(), &body);
    let out = hopfield(&["--machine", "evolve", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(report["error"], "truncation");
}

#[test]
fn sweep_keeps_order_and_records_failures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SCHEME1.replace("[\"mean_x\", \"mandel_q_photon\"]", "[\"period\"]"));
    let out = hopfield(
        &["--jobs", "2", "sweep", &cfg, "--field", "params.gamma", "--values", "1.2,-1,0.8"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    let table = TableData::read_csv(fs::read(dir.path().join("probe.csv")).unwrap().as_slice()).unwrap();
    assert_eq!(table.columns, ["gamma", "T"]);
    assert_eq!(table.column("gamma").unwrap(), [Some(1.2), Some(-1.0), Some(0.8)]);
    let errors = table.errors.clone().unwrap();
    assert!(errors[0].is_none() && errors[2].is_none());
    assert!(errors[1].as_ref().unwrap().contains("gamma"));
    let t = table.column("T").unwrap();
    assert!(t[1].is_none());
    assert!((t[0].unwrap() - t[2].unwrap()).abs() / t[0].unwrap() > 0.05);
}

#[test]
fn validate_passes_on_clean_build() {
    let dir = tempfile::tempdir().unwrap();
    let out = hopfield(&["validate"], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{text}");
    assert!(text.contains(" 0 failed"), "{text}");
    assert!(text.contains("fig18.toml"), "{text}");
}
