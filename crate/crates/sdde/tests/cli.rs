use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sdde::{load_config, ScenarioConfig};

fn example() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/paper_cubic.cfg")
}

fn sdde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdde")).args(args).env_remove("SDDE_OUT_DIR").output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_prints_slacks() {
    let out = sdde(&["check", path_str(&example())]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("slack1                 1\n"), "{text}");
    assert!(text.contains("conditions             pass"));
}

#[test]
fn first_jump_run_writes_versioned_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = sdde(&["run", "--probe", "first_jump", "--out", path_str(dir.path()), path_str(&example())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("first_jump_report.json")).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["probe"], "first_jump");
    let csv = fs::read_to_string(dir.path().join("first_jump_trials.csv")).unwrap();
    assert!(csv.starts_with("sample,tau\n"));
    assert_eq!(csv.lines().count(), 10_001);
}

#[test]
fn explosive_drift_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("explode.cfg");
    fs::write(
        &cfg,
        r#"
seed = 1
r = 1.0

[drift]
preset = "polynomial"
local = [0.0, 0.0, 0.0, 1.0]

[levy]
kind = "zero"

[initial]
kind = "constant"
value = 1.0

[probes.decay]
horizons = [10.0]
"#,
    )
    .unwrap();
    let out = sdde(&["run", "--probe", "decay", "--out", path_str(dir.path()), path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("probe decay") && err.contains("blew up"), "{err}");
}

#[test]
fn invalid_config_lists_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    let text = fs::read_to_string(example()).unwrap().replace("weight = 1.0", "weight = 0.9").replace("r = 1.0", "r = 0.0");
    fs::write(&cfg, text).unwrap();
    let out = sdde(&["check", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("measure not normalized") && err.contains("r = 0 must be positive"), "{err}");

    fs::write(&cfg, "seed = 1\nr = [\n").unwrap();
    let err = String::from_utf8(sdde(&["check", path_str(&cfg)]).stderr).unwrap();
    assert!(err.contains("bad.cfg:2:"), "{err}");
}

#[test]
fn output_directory_precedence() {
    let flag = tempfile::tempdir().unwrap();
    let env = tempfile::tempdir().unwrap();
    let run = |with_flag: bool| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_sdde"));
        cmd.args(["run", "--probe", "first_jump", "--trials", "1000"]);
        if with_flag {
            cmd.args(["--out", path_str(flag.path())]);
        }
        cmd.arg(example()).env("SDDE_OUT_DIR", env.path()).output().unwrap()
    };
    assert!(run(false).status.success());
    assert!(env.path().join("first_jump_report.json").exists());
    assert!(run(true).status.success());
    assert!(flag.path().join("first_jump_report.json").exists());
}

#[test]
fn example_round_trips() {
    let cfg = load_config(&example()).unwrap();
    let text = cfg.to_toml();
    let again = ScenarioConfig::from_toml(&text, Path::new("round-trip.cfg")).unwrap();
    assert_eq!(cfg, again);
    assert_eq!(again.to_toml(), text);
}

#[test]
fn same_seed_same_bytes() {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let cfg = example();
    let run = |d: &Path, seed: &str, serial: bool| {
        let mut v = vec!["run", "--probe", "convergence", "--probe", "first_jump", "--trials", "1000", "--seed", seed];
        if serial {
            v.push("--serial");
        }
        v.extend(["--out", path_str(d), path_str(&cfg)]);
        sdde(&v).status.success()
    };
    assert!(run(dirs[0].path(), "5", false));
    assert!(run(dirs[1].path(), "5", true));
    assert!(run(dirs[2].path(), "6", false));
    for f in ["convergence_report.json", "convergence_trials.csv", "first_jump_report.json", "first_jump_trials.csv"] {
        let a = fs::read(dirs[0].path().join(f)).unwrap();
        assert_eq!(a, fs::read(dirs[1].path().join(f)).unwrap(), "{f}");
        assert_ne!(a, fs::read(dirs[2].path().join(f)).unwrap(), "{f}");
    }
}
