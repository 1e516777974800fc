//! Celestial bodies, sunlight, solar radiation pressure and gravity
//! disturbance models.

mod bodies;
mod gravity;
mod solar;

pub use bodies::{CelestialBody, Ephemeris, KeplerElements, AU, MU_SUN};
pub use gravity::{gravity_force, gravity_torque, MassGrid};
pub use solar::{irradiance, srp_force_torque, srp_pressure, Plate, SolarConstants};

use nalgebra::Vector3;
use thiserror::Error;

use crate::math::{Framed, Inertial, MathError, Quaternion};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("distance {d} m is inside the solar radius {r0} m")]
    InsideSun { d: f64, r0: f64 },
    #[error("spacecraft is {separation} m from {body}, inside its radius {radius} m")]
    InsideBody { body: String, separation: f64, radius: f64 },
    #[error("sun vector has zero length")]
    DegenerateSunVector,
    #[error("invalid {what}: {why}")]
    Invalid { what: String, why: String },
    #[error("Kepler solver did not converge for M = {mean_anomaly}, e = {e}")]
    KeplerDiverged { mean_anomaly: f64, e: f64 },
    #[error(transparent)]
    Math(#[from] MathError),
}

pub(crate) fn invalid(what: impl Into<String>, why: impl Into<String>) -> EnvError {
    EnvError::Invalid { what: what.into(), why: why.into() }
}

/// Position of the spacecraft center of mass in the inertial frame plus
/// the body-to-inertial attitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Framed<Inertial>,
    pub attitude: Quaternion,
}

impl Pose {
    pub fn new(position: Vector3<f64>, attitude: Quaternion) -> Self {
        Self { position: Framed::new(position), attitude }
    }
}
