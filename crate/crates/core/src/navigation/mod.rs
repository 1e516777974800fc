//! Translational dynamics about a switchable center of integration, orbit
//! propagation, Lambert targeting and trajectory correction planning.

mod dynamics;
mod kepler;
mod lambert;
mod tcm;

pub use dynamics::{
    nav_derivative, propagate, select_center, state_transition_jacobian, step_nav, switch_center, NavRates,
    StateTransition,
};
pub use kepler::{kepler_propagate, specific_energy, stumpff_c, stumpff_s};
pub use lambert::{lambert_solve, LambertSolution, TransferDirection};
pub use tcm::{inject_state_error, plan_tcm, predicted_miss, TcmPlan, TcmTarget};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::{CelestialBody, EnvError, Plate, SolarConstants};
use crate::math::MathError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NavError {
    #[error("unknown body index {0}")]
    UnknownBody(usize),
    #[error("integration unstable: energy error {relative_error:.3e} relative at dt = {dt} s; reduce the time step")]
    StepUnstable { relative_error: f64, dt: f64 },
    #[error("degenerate Lambert geometry: {0}")]
    LambertDegenerate(String),
    #[error("Lambert solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    LambertNoConvergence { iterations: usize, residual: f64 },
    #[error("universal Kepler solver did not converge for dt = {dt} s")]
    KeplerNoConvergence { dt: f64 },
    #[error("invalid {what}: {why}")]
    Invalid { what: String, why: String },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Math(#[from] MathError),
}

pub(crate) fn invalid(what: impl Into<String>, why: impl Into<String>) -> NavError {
    NavError::Invalid { what: what.into(), why: why.into() }
}

/// Position and velocity relative to the center of integration, which is an
/// index into [`NavModel::bodies`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NavState {
    pub t: f64,
    pub r: Vector3<f64>,
    pub v: Vector3<f64>,
    pub center: usize,
}

impl NavState {
    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.r.iter().chain(self.v.iter()).all(|x| x.is_finite())
    }
}

/// Bodies, radiation-pressure geometry and mass for translational dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct NavModel {
    pub bodies: Vec<CelestialBody>,
    /// Index of the Sun; also the parent of every Keplerian body.
    pub sun: usize,
    pub solar: SolarConstants,
    pub plates: Vec<Plate>,
    pub mass_kg: f64,
    pub srp: bool,
    /// Fractional band around each sphere of influence.
    pub soi_hysteresis: f64,
}

impl NavModel {
    /// Single fixed body at the origin, no radiation pressure, unit mass.
    pub fn two_body(mu: f64) -> Self {
        Self {
            bodies: vec![CelestialBody::fixed("central", mu, 0.0, Vector3::zeros())],
            sun: 0,
            solar: SolarConstants::default(),
            plates: vec![],
            mass_kg: 1.0,
            srp: false,
            soi_hysteresis: 0.05,
        }
    }

    pub fn validate(&self) -> Result<(), NavError> {
        if self.bodies.is_empty() {
            return Err(invalid("bodies", "at least one body is required"));
        }
        self.body(self.sun)?;
        for b in &self.bodies {
            b.validate()?;
        }
        for p in &self.plates {
            p.validate()?;
        }
        self.solar.validate()?;
        if !(self.mass_kg > 0.0) {
            return Err(invalid("mass", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.soi_hysteresis) {
            return Err(invalid("soi_hysteresis", "must be in [0, 1)"));
        }
        Ok(())
    }

    pub fn body(&self, i: usize) -> Result<&CelestialBody, NavError> {
        self.bodies.get(i).ok_or(NavError::UnknownBody(i))
    }

    pub fn body_index(&self, name: &str) -> Option<usize> {
        self.bodies.iter().position(|b| b.name == name)
    }

    /// Inertial position and velocity of a state.
    pub fn inertial(&self, x: &NavState) -> Result<(Vector3<f64>, Vector3<f64>), NavError> {
        let (rc, vc) = self.body(x.center)?.state(x.t)?;
        Ok((x.r + rc, x.v + vc))
    }
}

/// Finite burn at constant inertial thrust.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropulsionCommand {
    pub thrust_n: Vector3<f64>,
    pub start_s: f64,
    pub stop_s: f64,
    pub mass_flow_kg_s: Option<f64>,
}

impl PropulsionCommand {
    pub fn validate(&self, max_thrust: f64) -> Result<(), NavError> {
        if !(self.stop_s > self.start_s) {
            return Err(invalid("burn", "stop must be after start"));
        }
        if self.thrust_n.norm() > max_thrust * (1.0 + 1e-12) {
            return Err(invalid("burn", format!("thrust {} N exceeds {} N", self.thrust_n.norm(), max_thrust)));
        }
        Ok(())
    }

    /// Mean thrust over `[t, t + dt]`, so the delivered impulse is exact for
    /// burns that start or stop inside a step.
    pub fn mean_thrust(&self, t: f64, dt: f64) -> Vector3<f64> {
        let overlap = (self.stop_s.min(t + dt) - self.start_s.max(t)).max(0.0);
        self.thrust_n * (overlap / dt)
    }

    pub fn delta_v(&self, mass_kg: f64) -> Vector3<f64> {
        self.thrust_n * ((self.stop_s - self.start_s) / mass_kg)
    }
}
