//! Rigid-body attitude with reaction wheels and gimballed wings, eigen-axis
//! guidance, quaternion PD tracking control, actuator allocation and
//! momentum dumping.

mod actuators;
mod control;
mod dynamics;
mod guidance;

pub use actuators::{allocate_actuators, desat_command, desaturate, Allocation, DesatProfile, DesatStep, ThrusterSpec};
pub use control::{tracking_controller, Gains};
pub use dynamics::{attitude_derivative, inertial_momentum, step_attitude, substeps_for, AttitudeInputs, StateRates};
pub use guidance::{eigen_axis_guidance, EigenAxisSlew};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{MathError, Quaternion, StateLayout, UNIT_TOLERANCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttitudeError {
    #[error("invalid {what}: {why}")]
    Invalid { what: String, why: String },
    #[error("rotation per step {angle:.4} rad exceeds limit {limit} rad; reduce the time step below {suggested:.4} s")]
    StepTooLarge { angle: f64, limit: f64, suggested: f64 },
    #[error("torque demand saturates actuators; achievable fraction {achievable_fraction:.3}")]
    Saturated { achievable_fraction: f64, best_effort: Allocation },
    #[error("need at least three independent actuation directions, got rank {0}")]
    Underactuated(usize),
    #[error(transparent)]
    Math(#[from] MathError),
}

pub(crate) fn invalid(what: impl Into<String>, why: impl Into<String>) -> AttitudeError {
    AttitudeError::Invalid { what: what.into(), why: why.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttitudeMode {
    Recharge,
    SmallBodyPointing,
    Tcm,
    Downlink,
}

impl AttitudeMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttitudeMode::Recharge => "recharge",
            AttitudeMode::SmallBodyPointing => "small_body_pointing",
            AttitudeMode::Tcm => "tcm",
            AttitudeMode::Downlink => "downlink",
        }
    }
}

/// Spinning element: reaction wheel or gimballed wing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotorSpec {
    /// Unit spin axis in the spacecraft frame.
    pub axis: Vector3<f64>,
    /// Inertia about the spin axis, kg m².
    pub spin_inertia: f64,
    /// Inertia about any transverse axis, kg m².
    pub transverse_inertia: f64,
    #[serde(default = "default_max_torque")]
    pub max_torque: f64,
    #[serde(default = "default_max_rate")]
    pub max_rate: f64,
}

fn default_max_torque() -> f64 {
    f64::INFINITY
}

fn default_max_rate() -> f64 {
    f64::INFINITY
}

impl RotorSpec {
    /// `I = I_t 1 + (I_s − I_t) a aᵀ`.
    pub fn inertia(&self) -> Matrix3<f64> {
        Matrix3::identity() * self.transverse_inertia
            + self.axis * self.axis.transpose() * (self.spin_inertia - self.transverse_inertia)
    }

    /// `I a`, the momentum per unit spin rate.
    pub fn momentum_axis(&self) -> Vector3<f64> {
        self.inertia() * self.axis
    }

    pub fn max_accel(&self) -> f64 {
        self.max_torque / self.spin_inertia
    }

    pub fn validate(&self, what: &str) -> Result<(), AttitudeError> {
        if (self.axis.norm() - 1.0).abs() > UNIT_TOLERANCE {
            return Err(invalid(format!("{what} axis"), "must be unit length"));
        }
        if !(self.spin_inertia > 0.0) || !(self.transverse_inertia >= 0.0) {
            return Err(invalid(format!("{what} inertia"), "spin inertia must be positive, transverse non-negative"));
        }
        if !(self.max_torque > 0.0) || !(self.max_rate > 0.0) {
            return Err(invalid(format!("{what} limits"), "must be positive"));
        }
        Ok(())
    }

    /// Four-wheel pyramid with axes tilted `tilt` from +z about the body axes.
    pub fn pyramid(spin: f64, transverse: f64, max_torque: f64, max_rate: f64, tilt: f64) -> Vec<RotorSpec> {
        let (s, c) = tilt.sin_cos();
        [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)]
            .iter()
            .map(|(x, y)| RotorSpec {
                axis: Vector3::new(s * x, s * y, c),
                spin_inertia: spin,
                transverse_inertia: transverse,
                max_torque,
                max_rate,
            })
            .collect()
    }
}

/// Mass properties plus rotor complement.
#[derive(Debug, Clone, PartialEq)]
pub struct AttitudeModel {
    /// Total inertia about the center of mass, rotors included.
    pub inertia: Matrix3<f64>,
    pub inertia_inv: Matrix3<f64>,
    /// Inertia with rotor contributions removed.
    pub body_inertia: Matrix3<f64>,
    pub wheels: Vec<RotorSpec>,
    pub wings: Vec<RotorSpec>,
    pub thrusters: ThrusterSpec,
    pub max_rotation_per_step: f64,
    wheel_matrix: DMatrix<f64>,
    wheel_pinv: DMatrix<f64>,
    layout: Arc<StateLayout>,
}

impl AttitudeModel {
    pub fn new(
        inertia: Matrix3<f64>,
        wheels: Vec<RotorSpec>,
        wings: Vec<RotorSpec>,
        thrusters: ThrusterSpec,
        max_rotation_per_step: f64,
    ) -> Result<Self, AttitudeError> {
        if (inertia - inertia.transpose()).norm() > 1e-9 * inertia.norm() {
            return Err(invalid("inertia", "must be symmetric"));
        }
        if !is_positive_definite(&inertia) {
            return Err(invalid("inertia", "must be positive definite"));
        }
        for (i, w) in wheels.iter().enumerate() {
            w.validate(&format!("wheel {i}"))?;
        }
        for (j, w) in wings.iter().enumerate() {
            w.validate(&format!("wing {j}"))?;
        }
        let rotor_sum: Matrix3<f64> = wheels.iter().chain(wings.iter()).map(|r| r.inertia()).sum();
        let body_inertia = inertia - rotor_sum;
        if !is_positive_definite(&body_inertia) {
            return Err(invalid("inertia", "rotor-free inertia must be positive definite"));
        }
        thrusters.validate()?;
        if !(max_rotation_per_step > 0.0) {
            return Err(invalid("max_rotation_per_step_rad", "must be positive"));
        }
        let inertia_inv = inertia.try_inverse().ok_or_else(|| invalid("inertia", "singular"))?;
        let n = wheels.len();
        let mut a = DMatrix::zeros(3, n);
        for (i, w) in wheels.iter().enumerate() {
            a.set_column(i, &DVector::from_column_slice(w.momentum_axis().as_slice()));
        }
        let rank = if n == 0 { 0 } else { a.clone().svd(false, false).rank(1e-12 * a.norm()) };
        let wheel_pinv = if n == 0 {
            DMatrix::zeros(0, 3)
        } else {
            a.clone().pseudo_inverse(1e-14).map_err(|e| invalid("wheel axes", e))?
        };
        if rank < 3 && thrusters.max_torque_per_axis() <= 0.0 {
            return Err(AttitudeError::Underactuated(rank));
        }
        let layout = Arc::new(
            StateLayout::new()
                .vector("q", "1", 4)
                .vector("omega", "rad/s", 3)
                .vector("wheel_rate", "rad/s", wheels.len())
                .vector("wing_rate", "rad/s", wings.len()),
        );
        Ok(Self {
            layout,
            inertia,
            inertia_inv,
            body_inertia,
            wheels,
            wings,
            thrusters,
            max_rotation_per_step,
            wheel_matrix: a,
            wheel_pinv,
        })
    }

    /// Columns `I_rw,i a_i`.
    pub fn wheel_matrix(&self) -> &DMatrix<f64> {
        &self.wheel_matrix
    }

    pub fn wheel_rank(&self) -> usize {
        if self.wheels.is_empty() {
            0
        } else {
            self.wheel_matrix.clone().svd(false, false).rank(1e-12 * self.wheel_matrix.norm())
        }
    }

    /// Relative rotor momentum `Σ I a ω` over wheels and wings.
    pub fn rotor_momentum(&self, x: &AttitudeState) -> Vector3<f64> {
        let mut h = Vector3::zeros();
        for (w, r) in self.wheels.iter().zip(x.wheel_rates.iter()) {
            h += w.momentum_axis() * *r;
        }
        for (w, r) in self.wings.iter().zip(x.wing_rates.iter()) {
            h += w.momentum_axis() * *r;
        }
        h
    }

    /// Wheel torque on the body for wheel accelerations, `−Σ I a ω̇`.
    pub fn wheel_torque(&self, accel: &DVector<f64>) -> Vector3<f64> {
        let t = &self.wheel_matrix * accel;
        -Vector3::new(t[0], t[1], t[2])
    }

    pub(crate) fn wheel_pinv(&self) -> &DMatrix<f64> {
        &self.wheel_pinv
    }

    pub(crate) fn layout(&self) -> Arc<StateLayout> {
        Arc::clone(&self.layout)
    }

    pub fn state_len(&self) -> usize {
        7 + self.wheels.len() + self.wings.len()
    }
}

fn is_positive_definite(m: &Matrix3<f64>) -> bool {
    m.iter().all(|x| x.is_finite()) && m.symmetric_eigenvalues().iter().all(|e| *e > 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttitudeState {
    pub q: Quaternion,
    /// Body rate in the spacecraft frame.
    pub omega: Vector3<f64>,
    /// Wheel spin rates relative to the body.
    pub wheel_rates: DVector<f64>,
    /// Wing gimbal rates relative to the body.
    pub wing_rates: DVector<f64>,
}

impl AttitudeState {
    pub fn at_rest(q: Quaternion, n_wheels: usize, n_wings: usize) -> Self {
        Self { q, omega: Vector3::zeros(), wheel_rates: DVector::zeros(n_wheels), wing_rates: DVector::zeros(n_wings) }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(7 + self.wheel_rates.len() + self.wing_rates.len());
        v.extend_from_slice(&self.q.to_array());
        v.extend_from_slice(self.omega.as_slice());
        v.extend(self.wheel_rates.iter());
        v.extend(self.wing_rates.iter());
        v
    }

    pub fn from_slice(v: &[f64], n_wheels: usize, n_wings: usize) -> Self {
        Self {
            q: Quaternion::from_slice(&v[0..4]),
            omega: Vector3::new(v[4], v[5], v[6]),
            wheel_rates: DVector::from_column_slice(&v[7..7 + n_wheels]),
            wing_rates: DVector::from_column_slice(&v[7 + n_wheels..7 + n_wheels + n_wings]),
        }
    }

    pub fn max_wheel_rate(&self) -> f64 {
        self.wheel_rates.iter().fold(0.0, |m, w| m.max(w.abs()))
    }
}

/// Target for the tracking controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeCommand {
    pub q: Quaternion,
    /// Commanded body rate, spacecraft frame.
    pub omega: Vector3<f64>,
    /// Commanded body angular acceleration, spacecraft frame.
    pub omega_dot: Vector3<f64>,
    pub mode: AttitudeMode,
}

impl AttitudeCommand {
    pub fn hold(q: Quaternion, mode: AttitudeMode) -> Self {
        Self { q, omega: Vector3::zeros(), omega_dot: Vector3::zeros(), mode }
    }
}
