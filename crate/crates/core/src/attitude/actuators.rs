use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};

use super::{invalid, AttitudeError, AttitudeModel, AttitudeState};

/// Cold-gas microthrusters mounted as opposed couples, two couples per
/// body axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThrusterSpec {
    pub count: usize,
    pub thrust_n: f64,
    pub moment_arm_m: f64,
    /// Multiplicative 1σ thrust noise; zero disables it.
    #[serde(default)]
    pub noise_fraction: f64,
}

impl Default for ThrusterSpec {
    fn default() -> Self {
        Self { count: 12, thrust_n: 0.01, moment_arm_m: 0.25, noise_fraction: 0.0 }
    }
}

impl ThrusterSpec {
    pub fn validate(&self) -> Result<(), AttitudeError> {
        if !self.count.is_multiple_of(6) {
            return Err(invalid("thruster count", "must be a multiple of 6 (couples on three axes)"));
        }
        if !(self.thrust_n >= 0.0) || !(self.moment_arm_m >= 0.0) || !(self.noise_fraction >= 0.0) {
            return Err(invalid("thruster", "thrust, arm and noise must be non-negative"));
        }
        Ok(())
    }

    /// Torque magnitude available about each body axis in either direction.
    pub fn max_torque_per_axis(&self) -> f64 {
        let couples_per_direction = self.count as f64 / 6.0;
        couples_per_direction * 2.0 * self.thrust_n * self.moment_arm_m
    }
}

/// Wheel accelerations and thruster torque realising a torque demand.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub wheel_accel: DVector<f64>,
    pub thruster_torque: Vector3<f64>,
    /// Fraction of the demand delivered by the wheels.
    pub wheel_fraction: f64,
    /// Wheels currently above their rated speed.
    pub overspeed: bool,
}

impl Allocation {
    pub fn delivered(&self, model: &AttitudeModel) -> Vector3<f64> {
        model.wheel_torque(&self.wheel_accel) + self.thruster_torque
    }
}

/// Minimum-norm wheel accelerations for `u`, with any part exceeding wheel
/// torque limits routed to thrusters.
pub fn allocate_actuators(
    model: &AttitudeModel,
    x: &AttitudeState,
    u: &Vector3<f64>,
) -> Result<Allocation, AttitudeError> {
    let n = model.wheels.len();
    let overspeed = model.wheels.iter().zip(x.wheel_rates.iter()).any(|(w, r)| r.abs() > w.max_rate);
    if u.norm() == 0.0 {
        return Ok(Allocation { wheel_accel: DVector::zeros(n), thruster_torque: Vector3::zeros(), wheel_fraction: 1.0, overspeed });
    }
    let (wheel_accel, k) = if n == 0 || model.wheel_rank() < 3 {
        (DVector::zeros(n), 0.0)
    } else {
        let ud = DVector::from_column_slice(u.as_slice());
        let raw = -(model.wheel_pinv() * ud);
        let mut k: f64 = 1.0;
        for (w, a) in model.wheels.iter().zip(raw.iter()) {
            let t = (w.spin_inertia * a).abs();
            if t > w.max_torque {
                k = k.min(w.max_torque / t);
            }
        }
        (raw * k, k)
    };
    let residual = u * (1.0 - k);
    let limit = model.thrusters.max_torque_per_axis();
    let mut s: f64 = 1.0;
    for r in residual.iter() {
        if r.abs() > limit {
            s = s.min(limit / r.abs());
        }
    }
    let alloc = Allocation { wheel_accel, thruster_torque: residual * s, wheel_fraction: k, overspeed };
    if s < 1.0 {
        return Err(AttitudeError::Saturated { achievable_fraction: k + s * (1.0 - k), best_effort: alloc });
    }
    Ok(alloc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesatStep {
    pub wheel_accel: DVector<f64>,
    pub thruster_torque: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DesatProfile {
    pub steps: Vec<DesatStep>,
    /// Thruster authority limited the dump rate.
    pub authority_limited: bool,
}

/// One step of momentum dumping: wheels decelerate toward zero at up to
/// `torque_fraction` of their rated torque, and thrusters apply the equal
/// and opposite torque so the body sees no net torque.
pub fn desat_command(model: &AttitudeModel, wheel_rates: &DVector<f64>, dt: f64, torque_fraction: f64) -> (DesatStep, bool) {
    let mut accel = DVector::zeros(model.wheels.len());
    for (i, (w, r)) in model.wheels.iter().zip(wheel_rates.iter()).enumerate() {
        let amax = w.max_accel() * torque_fraction;
        accel[i] = (-r / dt).clamp(-amax, amax);
    }
    let mut thr = -model.wheel_torque(&accel);
    let limit = model.thrusters.max_torque_per_axis();
    let peak = thr.amax();
    let mut limited = false;
    if peak > limit {
        let s = limit / peak;
        accel *= s;
        thr *= s;
        limited = true;
    }
    (DesatStep { wheel_accel: accel, thruster_torque: thr }, limited)
}

/// Full dump profile from the current wheel state, sampled every `dt`.
/// Empty when no wheel exceeds `threshold`.
pub fn desaturate(
    model: &AttitudeModel,
    x: &AttitudeState,
    threshold: f64,
    dt: f64,
    torque_fraction: f64,
) -> DesatProfile {
    if x.max_wheel_rate() <= threshold {
        return DesatProfile::default();
    }
    let mut rates = x.wheel_rates.clone();
    let mut out = DesatProfile::default();
    for _ in 0..10_000_000 {
        if rates.iter().all(|r| *r == 0.0) {
            break;
        }
        let (step, limited) = desat_command(model, &rates, dt, torque_fraction);
        out.authority_limited |= limited;
        for (i, r) in rates.iter_mut().enumerate() {
            let next = *r + step.wheel_accel[i] * dt;
            *r = if next.abs() < 1e-12 * (1.0 + r.abs()) { 0.0 } else { next };
        }
        out.steps.push(step);
    }
    out
}
