use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{invalid, EnvError, Pose, AU};
use crate::math::{Framed, Inertial, Spacecraft, UNIT_TOLERANCE};

pub const SOLAR_CONSTANT_1AU: f64 = 1361.0;
pub const SOLAR_RADIUS: f64 = 6.957e8;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolarConstants {
    /// Power density at the solar surface, W/m².
    pub h0: f64,
    /// Solar radius, m.
    pub r0: f64,
    /// Speed of light, m/s.
    pub c: f64,
}

impl Default for SolarConstants {
    /// Surface density calibrated so that `H(1 AU) = 1361 W/m²`.
    fn default() -> Self {
        Self::calibrated(SOLAR_CONSTANT_1AU, AU)
    }
}

impl SolarConstants {
    pub fn calibrated(h_at_d: f64, d: f64) -> Self {
        Self { h0: h_at_d * (d / SOLAR_RADIUS).powi(2), r0: SOLAR_RADIUS, c: SPEED_OF_LIGHT }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        for (name, v) in [("h0", self.h0), ("r0", self.r0), ("c", self.c)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("solar constant {name}"), "must be positive"));
            }
        }
        Ok(())
    }
}

/// Sunlight power density at distance `d` from the Sun center, W/m².
pub fn irradiance(k: &SolarConstants, d: f64) -> Result<f64, EnvError> {
    if !(d > k.r0) {
        return Err(EnvError::InsideSun { d, r0: k.r0 });
    }
    Ok(k.h0 * (k.r0 / d).powi(2))
}

/// Radiation pressure at distance `d`, N/m².
pub fn srp_pressure(k: &SolarConstants, d: f64) -> Result<f64, EnvError> {
    Ok(irradiance(k, d)? / k.c)
}

/// Flat surface element for the N-plate radiation pressure model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Plate {
    pub area_m2: f64,
    pub reflectivity: f64,
    /// Outward unit normal in the spacecraft frame.
    pub normal: Vector3<f64>,
    /// Center of pressure relative to the center of mass, spacecraft frame.
    pub center_m: Vector3<f64>,
}

impl Plate {
    pub fn validate(&self) -> Result<(), EnvError> {
        if !(self.area_m2 > 0.0) {
            return Err(invalid("plate area", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.reflectivity) {
            return Err(invalid("plate reflectivity", "must be in [0, 1]"));
        }
        if (self.normal.norm() - 1.0).abs() > UNIT_TOLERANCE {
            return Err(invalid("plate normal", "must be unit length"));
        }
        Ok(())
    }
}

/// Total radiation pressure force (inertial frame) and torque about the
/// center of mass (spacecraft frame). Plates facing away from the Sun
/// contribute nothing.
pub fn srp_force_torque(
    k: &SolarConstants,
    plates: &[Plate],
    pose: &Pose,
    sun_position: &Framed<Inertial>,
) -> Result<(Framed<Inertial>, Framed<Spacecraft>), EnvError> {
    let r_sc = pose.position - *sun_position;
    let d = r_sc.norm();
    if d == 0.0 || !d.is_finite() {
        return Err(EnvError::DegenerateSunVector);
    }
    let rho = srp_pressure(k, d)?;
    let rot = pose.attitude.to_rotation_matrix();
    let mut force = Vector3::zeros();
    let mut torque = Vector3::zeros();
    for p in plates {
        let to_plate = r_sc.v + rot * p.center_m;
        let dist = to_plate.norm();
        if dist == 0.0 {
            return Err(EnvError::DegenerateSunVector);
        }
        let away = to_plate / dist;
        let cos_theta = (rot * p.normal).dot(&(-away));
        if cos_theta <= 0.0 {
            continue;
        }
        let f = away * (rho * p.area_m2 * (1.0 + p.reflectivity) * cos_theta);
        force += f;
        torque += p.center_m.cross(&(rot.transpose() * f));
    }
    Ok((Framed::new(force), Framed::new(torque)))
}
