use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{invalid, AttitudeCommand, AttitudeError, AttitudeModel, AttitudeState};

/// Per-axis proportional and derivative gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub kp: Vector3<f64>,
    pub kd: Vector3<f64>,
}

impl Gains {
    /// Critically damped gains for closed-loop natural frequency `bandwidth`
    /// (rad/s). With `q_v ≈ θ/2` the linearized axis is
    /// `I θ̈ + K_d θ̇ + (K_p/2) θ = 0`, so `K_p = 2 I ωn²` and `K_d = 2 I ωn`.
    pub fn critically_damped(model: &AttitudeModel, bandwidth: f64) -> Result<Self, AttitudeError> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(invalid("controller bandwidth", "must be positive"));
        }
        let d = model.inertia.diagonal();
        Ok(Self { kp: d * (2.0 * bandwidth * bandwidth), kd: d * (2.0 * bandwidth) })
    }

    pub fn validate(&self) -> Result<(), AttitudeError> {
        if self.kp.iter().chain(self.kd.iter()).any(|g| !(*g > 0.0) || !g.is_finite()) {
            return Err(invalid("gains", "must be positive and finite"));
        }
        Ok(())
    }
}

/// `u = −K_p q_e,v − K_d (ω − ω_cmd) + ω × (I ω + h) + I ω̇_cmd` with
/// `q_e = q_cmd⁻¹ ⊗ q` properized.
pub fn tracking_controller(model: &AttitudeModel, x: &AttitudeState, cmd: &AttitudeCommand, gains: &Gains) -> Vector3<f64> {
    let qe = cmd.q.inverse().mul(&x.q).properized();
    // command rate expressed in the current body frame
    let r = qe.inverse();
    let w_cmd = r.rotate(&cmd.omega);
    let w_dot_cmd = r.rotate(&cmd.omega_dot);
    let h = model.inertia * x.omega + model.rotor_momentum(x);
    -gains.kp.component_mul(&qe.v) - gains.kd.component_mul(&(x.omega - w_cmd))
        + x.omega.cross(&h)
        + model.inertia * w_dot_cmd
}
