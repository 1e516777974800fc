use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cruisesim"));
    c.env_remove("CRUISESIM_OUT_DIR");
    c
}

fn scenario() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/cruise_approach.toml")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Value column of the first `name` row in link-budget output.
fn row_value(text: &str, name: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with(name) && l[name.len()..].starts_with(' ')).unwrap();
    line[name.len()..].split_whitespace().next().unwrap().parse().unwrap()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn run_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = bin().args(["run", "--scenario"]).arg(scenario()).arg("--out").arg(&out).args(["--set", "time.duration_s=3600", "--set", "navigation.approach.arrival_s=129600"]).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["telemetry.csv", "tasks.csv", "summary.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let s = summary(&out);
    assert_eq!(s["steps"], 3600);
    let rows = std::fs::read_to_string(out.join("telemetry.csv")).unwrap().lines().count();
    assert_eq!(rows, 3601);
}

#[test]
fn out_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("env_out");
    let o = bin()
        .args(["run", "--scenario"])
        .arg(scenario())
        .args(["--set", "time.duration_s=10", "--set", "navigation.approach.arrival_s=129600"])
        .env("CRUISESIM_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("summary.json").is_file());
}

#[test]
fn missing_scenario_names_path() {
    let o = bin().args(["run", "--scenario", "no/such/scenario.toml"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no/such/scenario.toml"), "{}", stderr(&o));
}

#[test]
fn higher_charge_threshold_charges_earlier() {
    let tmp = tempfile::tempdir().unwrap();
    let first = |name: &str, extra: &[&str]| {
        let out = tmp.path().join(name);
        let o = bin().args(["run", "--scenario"]).arg(scenario()).arg("--out").arg(&out).args(["--set", "time.duration_s=50000", "--set", "navigation.approach.arrival_s=129600"]).args(extra).output().unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        summary(&out)["first_recharge_t_s"].as_f64()
    };
    let default = first("default", &[]).expect("default run charges");
    let raised = first("raised", &["--set", "executive.soc_charge_threshold=0.5"]).expect("raised run charges");
    assert!(raised < default, "{raised} vs {default}");
}

#[test]
fn seed_flag_changes_run() {
    let tmp = tempfile::tempdir().unwrap();
    let final_v = |seed: &str| {
        let out = tmp.path().join(seed);
        let o = bin().args(["run", "--scenario"]).arg(scenario()).arg("--out").arg(&out).args(["--seed", seed, "--set", "time.duration_s=5", "--set", "navigation.approach.arrival_s=129600"]).output().unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(summary(&out)["seed"].as_u64().unwrap().to_string(), seed);
        std::fs::read(out.join("telemetry.csv")).unwrap()
    };
    assert_ne!(final_v("1"), final_v("2"));
}

#[test]
fn validate_agrees_with_run() {
    let ok = bin().args(["validate", "--scenario"]).arg(scenario()).output().unwrap();
    assert!(ok.status.success(), "{}", stderr(&ok));

    let bad = ["executive.soc_charge_threshold=1.5", "time.dt_s=-1", "executive.priorities.recharge=3"];
    let tmp = tempfile::tempdir().unwrap();
    for set in bad {
        let v = bin().args(["validate", "--scenario"]).arg(scenario()).args(["--set", set]).output().unwrap();
        let r = bin().args(["run", "--scenario"]).arg(scenario()).arg("--out").arg(tmp.path()).args(["--set", set]).output().unwrap();
        assert_eq!(v.status.code(), Some(2), "{set}: {}", stderr(&v));
        assert_eq!(r.status.code(), Some(2), "{set}: {}", stderr(&r));
        assert_eq!(stderr(&v), stderr(&r));
    }
    assert!(!tmp.path().join("telemetry.csv").exists());
}

#[test]
fn unknown_key_suggests_nearest() {
    let o = bin().args(["validate", "--scenario"]).arg(scenario()).args(["--set", "executive.soc_charge_treshold=0.5"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("`executive.soc_charge_treshold`"), "{e}");
    assert!(e.contains("did you mean `soc_charge_threshold`"), "{e}");
}

#[test]
fn link_budget_worked_example() {
    let o = bin().args(["link-budget", "--total-loss-db", "265", "--coding-gain-db", "0"]).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!((row_value(&text, "C/N0") - 47.69).abs() < 0.005, "{text}");
    assert!((row_value(&text, "EIRP") - 44.09).abs() < 0.005);
}

#[test]
fn link_budget_error_free_rate() {
    let o = bin().args(["link-budget", "--total-loss-db", "265", "--fer", "0", "--ack-fer", "0"]).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let rb: Vec<&str> = text.lines().filter(|l| l.starts_with("R_b ") && l.ends_with("bps")).collect();
    let reff = text.lines().find(|l| l.starts_with("R_eff")).unwrap();
    assert_eq!(rb[0].split_whitespace().nth(1), reff.split_whitespace().nth(1));
}

#[test]
fn link_budget_window_sweep_monotone() {
    let o = bin().args(["link-budget", "--range-m", "2.0e11", "--g-over-t", "60", "--fer", "0.05", "--ack-fer", "0.02", "--sweep-window", "8"]).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let table: Vec<(u32, f64)> = text
        .lines()
        .skip_while(|l| !l.trim_start().starts_with('N'))
        .skip(1)
        .map(|l| {
            let mut it = l.split_whitespace();
            (it.next().unwrap().parse().unwrap(), it.next().unwrap().parse().unwrap())
        })
        .collect();
    assert_eq!(table.len(), 8);
    assert!(table.windows(2).all(|w| w[1].0 == w[0].0 + 1 && w[1].1 <= w[0].1), "{table:?}");
}

#[test]
fn link_budget_missing_parameter() {
    let o = bin().arg("link-budget").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--range-m or --total-loss-db"));
    assert!(stdout(&o).is_empty());
}

#[test]
fn lambert_half_period() {
    let o = bin()
        .args(["lambert", "--r1", "1", "0", "0", "--r2", "-1", "0", "0", "--mu", "1", "--normal", "0", "0", "1"])
        .args(["--tof", &std::f64::consts::PI.to_string()])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let v1: Vec<f64> = text.lines().find(|l| l.starts_with("v1")).unwrap()[2..].split(',').map(|s| s.trim().parse().unwrap()).collect();
    assert!((v1[0]).abs() < 1e-9 && (v1[1] - 1.0).abs() < 1e-9 && v1[2].abs() < 1e-9, "{text}");
}

#[test]
fn lambert_zero_tof_is_input_error() {
    let o = bin().args(["lambert", "--r1", "1", "0", "0", "--r2", "0", "1", "0", "--tof", "0", "--mu", "1"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_writes_one_directory_per_value() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["sweep", "--scenario"])
        .arg(scenario())
        .arg("--out")
        .arg(tmp.path())
        .args(["--set", "time.duration_s=600", "--set", "navigation.approach.arrival_s=129600"])
        .args(["--param", "executive.soc_charge_threshold", "--values", "0.2,0.4,0.6", "--threads", "2"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    for v in ["0.2", "0.4", "0.6"] {
        assert!(tmp.path().join(format!("executive.soc_charge_threshold={v}")).join("summary.json").is_file());
    }
}
