//! Scenario files: TOML with nested sections, dotted-key overrides and
//! nearest-key suggestions for typos.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attitude::{Gains, RotorSpec, ThrusterSpec};
use crate::comms::{DataBuffer, LinkBudget};
use crate::environment::{CelestialBody, MassGrid, Plate, SolarConstants};
use crate::executive::Priorities;
use crate::power::{Battery, SolarArray};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read `{path}`: {why}")]
    Io { path: String, why: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown key `{key}`{}", suggestion.as_ref().map(|s| format!(", did you mean `{s}`?")).unwrap_or_default())]
    UnknownKey { key: String, suggestion: Option<String> },
    #[error("bad override `{raw}`: {why}")]
    Override { raw: String, why: String },
    #[error("at `{path}`: {why}")]
    Type { path: String, why: String },
    #[error("invalid {what}: {why}")]
    Invalid { what: String, why: String },
}

pub(crate) fn invalid(what: impl Into<String>, why: impl ToString) -> ConfigError {
    ConfigError::Invalid { what: what.into(), why: why.to_string() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub time: TimeConfig,
    #[serde(default)]
    pub seeds: SeedConfig,
    pub environment: EnvironmentConfig,
    pub spacecraft: SpacecraftConfig,
    pub power: PowerConfig,
    pub comms: CommsConfig,
    #[serde(default)]
    pub executive: ExecutiveConfig,
    pub navigation: NavigationConfig,
    #[serde(default)]
    pub telemetry: TelemetryConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(default)]
    pub epoch_s: f64,
    pub duration_s: f64,
    #[serde(default = "one")]
    pub dt_s: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    pub base: u64,
}

impl Default for SeedConfig {
    fn default() -> Self {
        Self { base: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    /// Gravitating bodies, including the Sun.
    pub bodies: Vec<CelestialBody>,
    #[serde(default = "sun_name")]
    pub sun: String,
    /// Approach target.
    pub target: String,
    /// Reference-only body hosting the ground station; exerts no gravity.
    pub ground: CelestialBody,
    #[serde(default)]
    pub solar: SolarConstants,
    #[serde(default = "yes")]
    pub srp: bool,
    #[serde(default = "yes")]
    pub gravity_gradient: bool,
    #[serde(default = "soi_hysteresis")]
    pub soi_hysteresis: f64,
}

fn sun_name() -> String {
    "sun".into()
}

fn yes() -> bool {
    true
}

fn soi_hysteresis() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WheelConfig {
    pub spin_inertia: f64,
    pub transverse_inertia: f64,
    pub max_torque: f64,
    pub max_rate: f64,
    /// Pyramid half-angle from +z.
    pub tilt_deg: f64,
    #[serde(default)]
    pub initial_rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WingRotorConfig {
    pub spin_inertia: f64,
    pub transverse_inertia: f64,
    pub max_torque: f64,
    pub max_rate: f64,
    /// Proportional gain of the wing sun-tracking rate law, 1/s.
    pub tracking_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropulsionConfig {
    pub max_thrust_n: f64,
    /// Cap on the Δv of a single correction.
    pub max_delta_v_m_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacecraftConfig {
    pub mass_kg: f64,
    /// Rows of the total inertia about the center of mass, spacecraft frame.
    pub inertia_kg_m2: [[f64; 3]; 3],
    pub mass_grid: MassGrid,
    pub wheels: WheelConfig,
    /// Rotor properties shared by every gimballed array.
    pub wing_rotor: WingRotorConfig,
    pub arrays: Vec<SolarArray>,
    #[serde(default)]
    pub thrusters: ThrusterSpec,
    #[serde(default)]
    pub plates: Vec<Plate>,
    #[serde(default = "max_rotation")]
    pub max_rotation_per_step_rad: f64,
    pub propulsion: PropulsionConfig,
}

fn max_rotation() -> f64 {
    0.01
}

impl SpacecraftConfig {
    pub fn inertia(&self) -> Matrix3<f64> {
        let r = &self.inertia_kg_m2;
        Matrix3::new(r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2])
    }

    pub fn wheel_specs(&self) -> Vec<RotorSpec> {
        let w = &self.wheels;
        RotorSpec::pyramid(w.spin_inertia, w.transverse_inertia, w.max_torque, w.max_rate, w.tilt_deg.to_radians())
    }

    pub fn wing_specs(&self) -> Vec<RotorSpec> {
        let w = &self.wing_rotor;
        self.arrays
            .iter()
            .filter_map(|a| a.gimbal_axis)
            .map(|axis| RotorSpec {
                axis,
                spin_inertia: w.spin_inertia,
                transverse_inertia: w.transverse_inertia,
                max_torque: w.max_torque,
                max_rate: w.max_rate,
            })
            .collect()
    }
}

/// Attitude modes and activities during which a load draws power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadGate {
    Always,
    Science,
    Downlink,
    Burn,
    Desaturate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadConfig {
    pub id: String,
    pub power_w: f64,
    pub when: LoadGate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerConfig {
    pub battery: Battery,
    #[serde(default)]
    pub loads: Vec<LoadConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub start_s: f64,
    pub stop_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommsConfig {
    #[serde(default)]
    pub link: LinkBudget,
    #[serde(default)]
    pub buffer: DataBuffer,
    #[serde(default = "arq_window")]
    pub arq_window: u32,
    #[serde(default)]
    pub ack_fer: f64,
    /// Width of the logistic FER curve, dB.
    #[serde(default = "fer_width")]
    pub fer_width_db: f64,
    /// Instrument data generation while pointed at the target.
    #[serde(default)]
    pub science_rate_bps: f64,
    #[serde(default)]
    pub ground_windows: Vec<Window>,
}

fn arq_window() -> u32 {
    1
}

fn fer_width() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TcmConfig {
    pub enabled: bool,
    pub first_eval_s: f64,
    pub period_s: f64,
    /// No corrections are scheduled closer than this to arrival.
    pub cutoff_s: f64,
    pub miss_threshold_m: f64,
    pub band_m: f64,
    /// 1σ errors of the onboard state estimate.
    pub sigma_pos_m: f64,
    pub sigma_vel_m_s: f64,
}

impl Default for TcmConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            first_eval_s: 3600.0,
            period_s: 21600.0,
            cutoff_s: 10800.0,
            miss_threshold_m: 200.0,
            band_m: 50.0,
            sigma_pos_m: 20.0,
            sigma_vel_m_s: 2e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExecutiveConfig {
    pub priorities: Priorities,
    pub soc_charge_threshold: f64,
    pub soc_band: f64,
    pub soc_recharge_complete: f64,
    pub charging_weight: f64,
    /// Interval between charging-attitude recomputations while recharging.
    pub charging_refresh_s: f64,
    pub tcm: TcmConfig,
    pub downlink_fill_threshold: f64,
    pub downlink_band: f64,
    pub desat_threshold_rad_s: f64,
    pub desat_band_rad_s: f64,
    pub desat_torque_fraction: f64,
    pub reject_backoff_s: f64,
    pub settle_tolerance_deg: f64,
    pub controller_bandwidth_rad_s: f64,
    pub slew_rate_deg_s: f64,
    pub slew_accel_rad_s2: f64,
}

impl Default for ExecutiveConfig {
    fn default() -> Self {
        Self {
            priorities: Priorities::default(),
            soc_charge_threshold: 0.30,
            soc_band: 0.05,
            soc_recharge_complete: 0.9,
            charging_weight: 0.5,
            charging_refresh_s: 1800.0,
            tcm: TcmConfig::default(),
            downlink_fill_threshold: 0.02,
            downlink_band: 0.01,
            desat_threshold_rad_s: 400.0,
            desat_band_rad_s: 100.0,
            desat_torque_fraction: 0.5,
            reject_backoff_s: 600.0,
            settle_tolerance_deg: 1.0,
            controller_bandwidth_rad_s: 0.1,
            slew_rate_deg_s: 0.4,
            slew_accel_rad_s2: 2e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproachConfig {
    /// Initial offset from the target.
    pub start_distance_m: f64,
    pub start_direction: Vector3<f64>,
    /// Desired arrival offset from the target; sunward when no direction is given.
    pub standoff_m: f64,
    #[serde(default)]
    pub standoff_direction: Option<Vector3<f64>>,
    /// Arrival time after the epoch; defaults to the end of the run.
    #[serde(default)]
    pub arrival_s: Option<f64>,
    /// Magnitude of the seeded initial velocity error.
    #[serde(default)]
    pub velocity_error_m_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NavigationConfig {
    pub approach: ApproachConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TelemetryConfig {
    /// Write every n-th step.
    pub decimation: u64,
}

impl Default for TelemetryConfig {
    fn default() -> Self {
        Self { decimation: 1 }
    }
}

fn unit(v: &Vector3<f64>, what: &str) -> Result<(), ConfigError> {
    if !(v.norm() > 0.0) || !v.iter().all(|x| x.is_finite()) {
        return Err(invalid(what, "must be a finite non-zero vector"));
    }
    Ok(())
}

impl Scenario {
    pub fn from_path(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), why: e.to_string() })?;
        Self::parse(&text, overrides)
    }

    /// Parses `text`, applies `key=value` overrides, then deserializes. Does
    /// not run [`Scenario::validate`].
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        for raw in overrides {
            apply_override(&mut table, raw)?;
        }
        let value = toml::Value::Table(table);
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            let msg = e.into_inner().to_string();
            match unknown_field(&msg) {
                Some((name, candidates)) => {
                    let key = if path == "." || path.is_empty() {
                        name.clone()
                    } else if path == name || path.ends_with(&format!(".{name}")) {
                        path
                    } else {
                        format!("{path}.{name}")
                    };
                    ConfigError::UnknownKey { key, suggestion: nearest(&name, &candidates) }
                }
                None => ConfigError::Type { path, why: msg },
            }
        })
    }

    pub fn end_time(&self) -> f64 {
        self.time.epoch_s + self.time.duration_s
    }

    pub fn steps(&self) -> u64 {
        (self.time.duration_s / self.time.dt_s).round() as u64
    }

    pub fn arrival_time(&self) -> f64 {
        self.time.epoch_s + self.navigation.approach.arrival_s.unwrap_or(self.time.duration_s)
    }

    pub fn gains(&self) -> Result<Gains, ConfigError> {
        let model = crate::attitude::AttitudeModel::new(
            self.spacecraft.inertia(),
            self.spacecraft.wheel_specs(),
            self.spacecraft.wing_specs(),
            self.spacecraft.thrusters.clone(),
            self.spacecraft.max_rotation_per_step_rad,
        )
        .map_err(|e| invalid("spacecraft", e))?;
        Gains::critically_damped(&model, self.executive.controller_bandwidth_rad_s).map_err(|e| invalid("controller", e))
    }

    /// Checks scalar constraints. Model-level checks run when the world is
    /// built; use [`crate::sim::validate`] for both.
    pub fn check(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid("schema_version", format!("expected {SCHEMA_VERSION}, got {}", self.schema_version)));
        }
        let t = &self.time;
        if !(t.dt_s > 0.0) || !t.dt_s.is_finite() {
            return Err(invalid("time.dt_s", "must be positive"));
        }
        if !(t.duration_s >= 0.0) || !t.duration_s.is_finite() {
            return Err(invalid("time.duration_s", "must be non-negative"));
        }
        let n = t.duration_s / t.dt_s;
        if (n - n.round()).abs() > 1e-9 * n.max(1.0) {
            return Err(invalid("time.duration_s", "must be a multiple of dt_s"));
        }
        let env = &self.environment;
        for name in [&env.sun, &env.target] {
            if !env.bodies.iter().any(|b| &b.name == name) {
                return Err(invalid("environment", format!("body `{name}` is not defined")));
            }
        }
        if env.sun == env.target {
            return Err(invalid("environment.target", "must differ from the Sun"));
        }
        let sc = &self.spacecraft;
        if !sc.wheels.initial_rates.is_empty() && sc.wheels.initial_rates.len() != 4 {
            return Err(invalid("spacecraft.wheels.initial_rates", "needs one entry per pyramid wheel (4)"));
        }
        if !(sc.propulsion.max_thrust_n > 0.0) || !(sc.propulsion.max_delta_v_m_s >= 0.0) {
            return Err(invalid("spacecraft.propulsion", "thrust must be positive and Δv cap non-negative"));
        }
        if !(sc.wing_rotor.tracking_gain > 0.0) {
            return Err(invalid("spacecraft.wing_rotor.tracking_gain", "must be positive"));
        }
        for l in &self.power.loads {
            if !(l.power_w >= 0.0) {
                return Err(invalid(format!("load `{}`", l.id), "power must be non-negative"));
            }
        }
        let c = &self.comms;
        if !(c.science_rate_bps >= 0.0) || !(c.fer_width_db > 0.0) {
            return Err(invalid("comms", "science rate must be non-negative and FER width positive"));
        }
        for w in &c.ground_windows {
            if !(w.stop_s > w.start_s) {
                return Err(invalid("comms.ground_windows", "stop must follow start"));
            }
        }
        let e = &self.executive;
        for (what, v) in [
            ("soc_charge_threshold", e.soc_charge_threshold),
            ("soc_recharge_complete", e.soc_recharge_complete),
            ("charging_weight", e.charging_weight),
            ("downlink_fill_threshold", e.downlink_fill_threshold),
            ("desat_torque_fraction", e.desat_torque_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(format!("executive.{what}"), "must lie in [0, 1]"));
            }
        }
        if !(e.soc_recharge_complete > e.soc_charge_threshold) {
            return Err(invalid("executive.soc_recharge_complete", "must exceed soc_charge_threshold"));
        }
        for (what, v) in [
            ("charging_refresh_s", e.charging_refresh_s),
            ("desat_threshold_rad_s", e.desat_threshold_rad_s),
            ("settle_tolerance_deg", e.settle_tolerance_deg),
            ("controller_bandwidth_rad_s", e.controller_bandwidth_rad_s),
            ("slew_rate_deg_s", e.slew_rate_deg_s),
            ("slew_accel_rad_s2", e.slew_accel_rad_s2),
            ("tcm.period_s", e.tcm.period_s),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("executive.{what}"), "must be positive"));
            }
        }
        for (what, v) in [
            ("soc_band", e.soc_band),
            ("downlink_band", e.downlink_band),
            ("desat_band_rad_s", e.desat_band_rad_s),
            ("reject_backoff_s", e.reject_backoff_s),
            ("tcm.band_m", e.tcm.band_m),
            ("tcm.sigma_pos_m", e.tcm.sigma_pos_m),
            ("tcm.sigma_vel_m_s", e.tcm.sigma_vel_m_s),
            ("tcm.cutoff_s", e.tcm.cutoff_s),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(format!("executive.{what}"), "must be non-negative"));
            }
        }
        let a = &self.navigation.approach;
        unit(&a.start_direction, "navigation.approach.start_direction")?;
        if let Some(d) = &a.standoff_direction {
            unit(d, "navigation.approach.standoff_direction")?;
        }
        if !(a.start_distance_m > 0.0) || !(a.standoff_m >= 0.0) || !(a.velocity_error_m_s >= 0.0) {
            return Err(invalid("navigation.approach", "distances and error must be non-negative"));
        }
        if let Some(t) = a.arrival_s {
            if !(t > 0.0) {
                return Err(invalid("navigation.approach.arrival_s", "must be positive"));
            }
        }
        if self.telemetry.decimation == 0 {
            return Err(invalid("telemetry.decimation", "must be at least 1"));
        }
        Ok(())
    }
}

/// Extracts the offending and expected names from serde's unknown-field
/// message.
fn unknown_field(msg: &str) -> Option<(String, Vec<String>)> {
    let rest = msg.split("unknown field ").nth(1)?;
    let mut ticks = rest.split('`').skip(1).step_by(2).map(str::to_string);
    let name = ticks.next()?;
    Some((name, ticks.collect()))
}

fn nearest(name: &str, candidates: &[String]) -> Option<String> {
    candidates
        .iter()
        .map(|c| (strsim::jaro_winkler(name, c), c))
        .filter(|(s, _)| *s > 0.7)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, c)| c.clone())
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Sets `a.b.c=value` in the document; numeric segments index arrays.
pub fn apply_override(table: &mut toml::Table, raw: &str) -> Result<(), ConfigError> {
    let bad = |why: &str| ConfigError::Override { raw: raw.into(), why: why.into() };
    let (key, value) = raw.split_once('=').ok_or_else(|| bad("expected key=value"))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(bad("empty key segment"));
    }
    let value = parse_value(value.trim());
    let mut cur: &mut toml::Value = table
        .entry(parts[0])
        .or_insert_with(|| if parts.len() > 1 { toml::Value::Table(toml::Table::new()) } else { value.clone() });
    for (i, p) in parts.iter().enumerate().skip(1) {
        let last = i + 1 == parts.len();
        cur = match cur {
            toml::Value::Table(t) => t.entry(*p).or_insert_with(|| {
                if last { value.clone() } else { toml::Value::Table(toml::Table::new()) }
            }),
            toml::Value::Array(a) => {
                let idx: usize = p.parse().map_err(|_| bad("array segments must be indices"))?;
                let len = a.len();
                a.get_mut(idx).ok_or_else(|| bad(&format!("index {idx} out of range (len {len})")))?
            }
            _ => return Err(bad(&format!("`{}` is not a table", parts[..i].join(".")))),
        };
    }
    *cur = value;
    Ok(())
}
