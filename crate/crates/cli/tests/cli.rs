use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = r#"
dim = 3
n = 12
t_max = 0.06
dt = 0.001
output_interval = 0.02

[damping]
kind = "log"
alpha = 0.5

[ic]
kind = "random_divfree"
amplitude = 2.0
seed = 7
"#;

fn logdamp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logdamp"))
        .args(args)
        .env("NS_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("case.toml");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn text(out: &Output) -> String {
    format!(
        "{}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    )
}

#[test]
fn solve_then_check_round_trip() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let run = tmp.path().join("run");
    let out = logdamp(&["solve", "--config", &cfg, "--output", run.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", text(&out));

    for f in ["config.toml", "budget.csv", "report.json", "checkpoint.bin", "run_manifest.json"] {
        assert!(run.join(f).exists(), "missing {f}");
    }
    assert!(!run.join(".logdamp.lock").exists());

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("run_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["blowup"], false);
    assert_eq!(manifest["l2_pass"], true);

    let budget = run.join("budget.csv");
    for mode in ["l2", "h1", "both"] {
        let out = logdamp(&["check", "--budget", budget.to_str().unwrap(), "--mode", mode]);
        assert_eq!(code(&out), 0, "{}", text(&out));
        assert!(text(&out).contains("PASS"));
    }
}

#[test]
fn negative_tolerance_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let run = tmp.path().join("run");
    assert_eq!(code(&logdamp(&["solve", "--config", &cfg, "--output", run.to_str().unwrap()])), 0);
    let budget = run.join("budget.csv");
    let out = logdamp(&["check", "--budget", budget.to_str().unwrap(), "--tol", "-1"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn check_without_manifest_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let budget = tmp.path().join("budget.csv");
    fs::write(&budget, "t\n").unwrap();
    let out = logdamp(&["check", "--budget", budget.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(text(&out).contains("run_manifest.json"));
}

#[test]
fn config_errors_exit_3_and_name_the_key() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &format!("{SMALL}\nbogus = 1\n"));
    let out = logdamp(&["solve", "--config", &cfg, "--output", tmp.path().join("r").to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(text(&out).contains("bogus"), "{}", text(&out));

    let cfg = write_config(tmp.path(), SMALL);
    let out = logdamp(&[
        "solve",
        "--config",
        &cfg,
        "--output",
        tmp.path().join("r").to_str().unwrap(),
        "--set",
        "damping.alpha=-1",
    ]);
    assert_eq!(code(&out), 3);
    assert!(text(&out).contains("alpha"), "{}", text(&out));

    assert_eq!(code(&logdamp(&["solve"])), 3);
    assert_eq!(code(&logdamp(&["frobnicate"])), 3);
    assert_eq!(code(&logdamp(&["--help"])), 0);
}

#[test]
fn locked_output_directory_is_refused() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let run = tmp.path().join("run");
    fs::create_dir_all(&run).unwrap();
    fs::write(run.join(".logdamp.lock"), "1\n").unwrap();
    let out = logdamp(&["solve", "--config", &cfg, "--output", run.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(text(&out).contains("locked"));
    assert!(!run.join("budget.csv").exists());
}

#[test]
fn resume_matches_an_uninterrupted_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let full = tmp.path().join("full");
    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    let s = |p: &Path| p.to_str().unwrap().to_string();

    let out = logdamp(&["solve", "--config", &cfg, "--output", &s(&full), "--strict-deterministic"]);
    assert_eq!(code(&out), 0, "{}", text(&out));
    let out = logdamp(&[
        "solve",
        "--config",
        &cfg,
        "--output",
        &s(&first),
        "--strict-deterministic",
        "--set",
        "t_max=0.02",
    ]);
    assert_eq!(code(&out), 0, "{}", text(&out));
    let ckpt = first.join("checkpoint.bin");
    let out = logdamp(&[
        "solve",
        "--config",
        &cfg,
        "--output",
        &s(&second),
        "--strict-deterministic",
        "--resume",
        &s(&ckpt),
    ]);
    assert_eq!(code(&out), 0, "{}", text(&out));

    // identical final state, bit for bit (payload before the checksum trailer too)
    assert_eq!(
        fs::read(full.join("checkpoint.bin")).unwrap(),
        fs::read(second.join("checkpoint.bin")).unwrap()
    );

    // a checkpoint from another grid is rejected
    let out = logdamp(&[
        "solve",
        "--config",
        &cfg,
        "--output",
        &s(&tmp.path().join("bad")),
        "--set",
        "n=16",
        "--resume",
        &s(&ckpt),
    ]);
    assert_eq!(code(&out), 3);
    assert!(text(&out).contains("grid"), "{}", text(&out));
}

#[test]
fn blowup_exits_2_and_is_recorded() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &format!("velocity_ceiling = 1e-3\n{SMALL}"));
    let run = tmp.path().join("run");
    let out = logdamp(&["solve", "--config", &cfg, "--output", run.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "{}", text(&out));
    assert!(text(&out).contains("BLOW-UP"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("run_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["blowup"], true);

    let out = logdamp(&["check", "--budget", run.join("budget.csv").to_str().unwrap()]);
    assert_eq!(code(&out), 2, "{}", text(&out));
}

#[test]
fn sweep_runs_each_point_in_its_own_directory() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let root = tmp.path().join("sweep");
    let out = logdamp(&[
        "sweep",
        "--config",
        &cfg,
        "--vary",
        "alpha=0.25:0.75:0.25",
        "--output",
        root.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", text(&out));
    for v in ["0.25", "0.5", "0.75"] {
        let dir = root.join(format!("alpha={v}"));
        assert!(dir.join("budget.csv").exists(), "missing point {v}");
        let cfg_echo = fs::read_to_string(dir.join("config.toml")).unwrap();
        assert!(cfg_echo.contains(&format!("alpha = {v}")), "{cfg_echo}");
    }
    let summary = fs::read_to_string(root.join("sweep_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);

    let out = logdamp(&["sweep", "--config", &cfg, "--vary", "alpha=1:0:1"]);
    assert_eq!(code(&out), 3);
}
