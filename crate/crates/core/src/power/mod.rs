//! Solar generation, load distribution and battery state of charge.

mod battery;
mod distribution;
mod solar;

pub use battery::{Battery, SocUpdate};
pub use distribution::{active_load, net_energy, net_power, NetPowerModel, PowerLoad};
pub use solar::{
    incidence_angle, mppt_power, solar_power_lf, solar_voltage_hf, HfArrayParams, IvcTable, MpptPoint,
    SolarArray,
};

use thiserror::Error;

use crate::environment::EnvError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PowerError {
    #[error("sun and array positions coincide")]
    ZeroSeparation,
    #[error("load current must be non-negative, got {0} A")]
    NegativeCurrent(f64),
    #[error("energy trace is empty")]
    EmptyTrace,
    #[error("battery capacity must be positive, got {0}")]
    NoCapacity(f64),
    #[error("invalid {what}: {why}")]
    Invalid { what: String, why: String },
    #[error(transparent)]
    Env(#[from] EnvError),
}

pub(crate) fn invalid(what: impl Into<String>, why: impl Into<String>) -> PowerError {
    PowerError::Invalid { what: what.into(), why: why.into() }
}
