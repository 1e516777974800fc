use nalgebra::{DVector, Vector3, Vector4};

use super::{AttitudeError, AttitudeModel, AttitudeState};
use crate::math::{omega_matrix, rk4_step, StateVector};

/// Actuator and disturbance inputs held constant over one step.
#[derive(Debug, Clone, PartialEq)]
pub struct AttitudeInputs {
    pub wheel_accel: DVector<f64>,
    pub wing_accel: DVector<f64>,
    /// Thruster torque, spacecraft frame.
    pub thruster_torque: Vector3<f64>,
    /// Environmental disturbance torque, spacecraft frame.
    pub disturbance: Vector3<f64>,
}

impl AttitudeInputs {
    pub fn zero(model: &AttitudeModel) -> Self {
        Self {
            wheel_accel: DVector::zeros(model.wheels.len()),
            wing_accel: DVector::zeros(model.wings.len()),
            thruster_torque: Vector3::zeros(),
            disturbance: Vector3::zeros(),
        }
    }

    /// Net actuator torque on the body.
    pub fn control_torque(&self, model: &AttitudeModel) -> Vector3<f64> {
        let mut u = model.wheel_torque(&self.wheel_accel) + self.thruster_torque;
        for (w, a) in model.wings.iter().zip(self.wing_accel.iter()) {
            u -= w.momentum_axis() * *a;
        }
        u
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateRates {
    pub q_dot: Vector4<f64>,
    pub omega_dot: Vector3<f64>,
    pub wheel_accel: DVector<f64>,
    pub wing_accel: DVector<f64>,
}

/// `q̇ = ½ Ω(ω) q` and `ω̇ = I⁻¹ (T_d + u − ω × (I ω + h))`.
pub fn attitude_derivative(
    model: &AttitudeModel,
    x: &AttitudeState,
    inputs: &AttitudeInputs,
) -> Result<StateRates, AttitudeError> {
    let q_dot = omega_matrix(&x.omega)? * x.q.to_vector4() * 0.5;
    let h = model.rotor_momentum(x);
    let u = inputs.control_torque(model);
    let big_h = model.inertia * x.omega + h;
    let omega_dot = model.inertia_inv * (inputs.disturbance + u - x.omega.cross(&big_h));
    Ok(StateRates {
        q_dot,
        omega_dot,
        wheel_accel: inputs.wheel_accel.clone(),
        wing_accel: inputs.wing_accel.clone(),
    })
}

/// Total angular momentum in the inertial frame, `R(q) (I ω + h)`.
pub fn inertial_momentum(model: &AttitudeModel, x: &AttitudeState) -> Vector3<f64> {
    x.q.rotate(&(model.inertia * x.omega + model.rotor_momentum(x)))
}

/// One RK4 step followed by quaternion normalization and properization.
pub fn step_attitude(
    model: &AttitudeModel,
    x: &AttitudeState,
    inputs: &AttitudeInputs,
    dt: f64,
) -> Result<AttitudeState, AttitudeError> {
    let angle = x.omega.norm() * dt;
    if angle > model.max_rotation_per_step {
        return Err(AttitudeError::StepTooLarge {
            angle,
            limit: model.max_rotation_per_step,
            suggested: model.max_rotation_per_step / x.omega.norm(),
        });
    }
    let (nw, ns) = (model.wheels.len(), model.wings.len());
    let sv = StateVector::pack(model.layout(), x.to_vec())?;
    let next = rk4_step::<AttitudeError, _>(
        |_, y, d| {
            let s = AttitudeState::from_slice(y, nw, ns);
            let r = attitude_derivative(model, &s, inputs)?;
            d[0..4].copy_from_slice(r.q_dot.as_slice());
            d[4..7].copy_from_slice(r.omega_dot.as_slice());
            d[7..7 + nw].copy_from_slice(r.wheel_accel.as_slice());
            d[7 + nw..].copy_from_slice(r.wing_accel.as_slice());
            Ok(())
        },
        &sv,
        0.0,
        dt,
    )?;
    let mut out = AttitudeState::from_slice(next.values(), nw, ns);
    out.q = out.q.normalized()?.properized();
    Ok(out)
}

/// Number of equal substeps needed to keep each within the rotation limit.
pub fn substeps_for(model: &AttitudeModel, x: &AttitudeState, dt: f64) -> usize {
    let ratio = x.omega.norm() * dt / model.max_rotation_per_step;
    // leave head-room for rate growth inside the step
    ((ratio * 1.25).ceil() as usize).max(1)
}
