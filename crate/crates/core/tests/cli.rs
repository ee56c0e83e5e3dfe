//! End-to-end tests of the `trimboot` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_trimboot"));
    c.env_remove("TRIMBOOT_THREADS");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_RHO: &str = r#"
experiment = "rho"
master_seed = 9
p = 3.0
epsilon = 0.02
n_grid = [300, 600]
d_grid = [4]
on_infeasible = "skip"

[distribution.family]
type = "student-t"
dof = 4.0

[adversary.kind]
type = "large-outlier"
magnitude = 100.0

[replications]
r1 = 100
r2 = 100
"#;

#[test]
fn missing_config_is_a_config_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    let o = bin().args(["run", "--config"]).arg(&missing).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.toml"), "{}", stderr(&o));
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{SMALL_RHO}\n[overrides]\nkk = 3\n"));
    let o = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("kk"), "{}", stderr(&o));
}

#[test]
fn infeasible_plan_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL_RHO.replace("on_infeasible = \"skip\"", "").replace("[300, 600]", "[60]");
    let cfg = write(dir.path(), "c.toml", &text);
    let o = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("2k >= n") || stderr(&o).contains("k ="), "{}", stderr(&o));
}

#[test]
fn run_writes_csv_report_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL_RHO);
    let out = dir.path().join("out");
    let o = bin().args(["run", "--threads", "2", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = trimboot::cli::read_csv(&out.join("results.csv")).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.experiment == "rho" && r.seed == 9 && r.runtime_ms == 0));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["overrides"]["c_knob"], 1.0);
    assert_eq!(report["config"]["replications"]["r_boot"], 1000);
    assert!(report["jitter_ladder"].as_array().unwrap().len() > 1);
    assert!(out.join("plots/rho.svg").exists());

    // `plot` redraws from the CSV alone.
    std::fs::remove_dir_all(out.join("plots")).unwrap();
    let o = bin().args(["plot", "--out"]).arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(out.join("plots/rho.svg").exists());
}

#[test]
fn seed_flag_overrides_config_and_reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL_RHO);
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = bin().args(["run", "--no-plots", "--seed", seed, "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        std::fs::read(out.join("results.csv")).unwrap()
    };
    let a = run("a", "5");
    let b = run("b", "5");
    let c = run("c", "6");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn thread_env_var_is_honoured_without_changing_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL_RHO);
    let mut outputs = Vec::new();
    for t in ["1", "3"] {
        let out = dir.path().join(t);
        let o = bin().env("TRIMBOOT_THREADS", t).args(["run", "--no-plots", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        assert_eq!(report["threads"].as_u64().unwrap().to_string(), t);
        outputs.push(std::fs::read(out.join("results.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn check_invariants_scopes() {
    let o = bin().args(["check-invariants", "--scope", ""]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());

    let o = bin().args(["check-invariants", "--scope", "bounding-lemma"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("bounding")).count(), 24);
    assert!(text.lines().all(|l| l.contains("PASS")), "{text}");

    let o = bin().args(["check-invariants", "--scope", "no-such-lemma"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn threshold_config_gives_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    // The repository config with fewer replications.
    let text = std::fs::read_to_string(configs().join("threshold.toml")).unwrap().replace("r1 = 2000", "r1 = 50");
    let cfg = write(dir.path(), "t.toml", &text);
    let out = dir.path().join("out");
    let o = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = trimboot::cli::read_csv(&out.join("results.csv")).unwrap();
    // n = 1000, delta in {-0.5, 0.5}, estimators {empirical, trimmed}.
    assert_eq!(rows.len(), 4);
    let mut cells: Vec<(usize, usize, String)> = rows.iter().map(|r| (r.n, r.d, r.estimator.clone())).collect();
    cells.dedup();
    assert_eq!(cells.len(), 4);
    assert_eq!(rows.iter().map(|r| r.d).collect::<Vec<_>>(), vec![2, 2, 1000, 1000]);
    let header = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(header.lines().next().unwrap(), trimboot::cli::CSV_HEADER.join(","));
}

#[test]
fn every_repository_config_parses() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            trimboot::cli::ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
    }
}
