use std::path::{Path, PathBuf};

use cruisesim::sim::{run, run_to_dir, validate, ConfigError, Scenario, TelemetryRecord};

fn path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/cruise_approach.toml")
}

fn short(extra: &[&str]) -> Scenario {
    let mut sets = vec!["time.duration_s=1200".to_string(), "navigation.approach.arrival_s=129600".to_string()];
    sets.extend(extra.iter().map(|s| s.to_string()));
    Scenario::from_path(&path(), &sets).unwrap()
}

#[test]
fn bundled_scenario_validates() {
    let s = Scenario::from_path(&path(), &[]).unwrap();
    validate(&s).unwrap();
    assert_eq!(s.steps(), 129_600);
}

#[test]
fn unknown_nested_key() {
    let e = Scenario::from_path(&path(), &["spacecraft.wheels.max_torqe=1".into()]).unwrap_err();
    assert_eq!(e, ConfigError::UnknownKey { key: "spacecraft.wheels.max_torqe".into(), suggestion: Some("max_torque".into()) });
}

#[test]
fn unknown_top_level_key_in_file() {
    let text = std::fs::read_to_string(path()).unwrap() + "\n[telemtry]\ndecimation = 2\n";
    match Scenario::parse(&text, &[]) {
        Err(ConfigError::UnknownKey { suggestion, .. }) => assert_eq!(suggestion.as_deref(), Some("telemetry")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn override_errors() {
    let text = std::fs::read_to_string(path()).unwrap();
    assert!(matches!(Scenario::parse(&text, &["no_equals".into()]), Err(ConfigError::Override { .. })));
    assert!(matches!(Scenario::parse(&text, &["time.dt_s=fast".into()]), Err(ConfigError::Type { .. })));
    assert!(matches!(Scenario::parse(&text, &["spacecraft.arrays.9.area_m2=1".into()]), Err(ConfigError::Override { .. })));
}

#[test]
fn array_index_override() {
    let s = short(&["spacecraft.arrays.2.area_m2=2.5", "spacecraft.wheels.initial_rates=[0.0, 0.0, 0.0, 0.0]"]);
    assert_eq!(s.spacecraft.arrays[2].area_m2, 2.5);
    assert_eq!(s.spacecraft.wheels.initial_rates, vec![0.0; 4]);
}

#[test]
fn invalid_values_rejected_before_stepping() {
    for set in ["executive.soc_charge_threshold=-0.1", "power.battery.capacity_wh=0", "executive.charging_weight=1.5"] {
        let r = Scenario::from_path(&path(), &[set.into()]).and_then(|s| validate(&s));
        assert!(r.is_err(), "{set} accepted");
    }
}

#[test]
fn zero_duration_gives_empty_telemetry() {
    let s = Scenario::from_path(&path(), &["time.duration_s=0".into()]).unwrap();
    let mut sink = Vec::new();
    let out = run(&s, &mut sink).unwrap();
    let text = String::from_utf8(sink).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert_eq!(text.trim_end(), TelemetryRecord::header(4).join(","));
    assert_eq!(out.summary.steps, 0);
    assert!(out.tasks.is_empty());
}

#[test]
fn same_seed_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let s = short(&[]);
    run_to_dir(&s, &tmp.path().join("a")).unwrap();
    run_to_dir(&s, &tmp.path().join("b")).unwrap();
    for f in ["telemetry.csv", "tasks.csv", "summary.json"] {
        let a = std::fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
}

#[test]
fn decimation_thins_rows() {
    let s = short(&["telemetry.decimation=10"]);
    let mut sink = Vec::new();
    run(&s, &mut sink).unwrap();
    // steps 10, 20, ..., 1200
    assert_eq!(String::from_utf8(sink).unwrap().lines().count(), 1 + 120);
}

#[test]
fn no_loads_keeps_soc_non_decreasing() {
    let mut s = short(&["executive.tcm.enabled=false", "comms.ground_windows=[]"]);
    s.power.loads.clear();
    let mut sink = Vec::new();
    run(&s, &mut sink).unwrap();
    let mut rd = csv::Reader::from_reader(sink.as_slice());
    let col = rd.headers().unwrap().iter().position(|h| h == "soc").unwrap();
    let soc: Vec<f64> = rd.records().map(|r| r.unwrap()[col].parse().unwrap()).collect();
    assert!(soc.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn soc_follows_net_power() {
    let s = short(&[]);
    let b = &s.power.battery;
    let mut sink = Vec::new();
    let out = run(&s, &mut sink).unwrap();
    let mut rd = csv::Reader::from_reader(sink.as_slice());
    let h = rd.headers().unwrap().clone();
    let col = |n: &str| h.iter().position(|x| x == n).unwrap();
    let (c_soc, c_p) = (col("soc"), col("p_net_w"));
    let mut prev = b.soc;
    for r in rd.records() {
        let r = r.unwrap();
        let (soc, p): (f64, f64) = (r[c_soc].parse().unwrap(), r[c_p].parse().unwrap());
        let e_wh = p * s.time.dt_s / 3600.0;
        let expected = if e_wh > 0.0 { b.charge_efficiency * e_wh / b.capacity_wh } else { e_wh / (b.discharge_efficiency * b.capacity_wh) };
        assert!((soc - prev - expected).abs() < 1e-12, "t={}", &r[0]);
        prev = soc;
    }
    assert!(out.summary.energy_residual_rel < 1e-9);
}
