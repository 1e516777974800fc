use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use super::{invalid, EnvError};

pub const AU: f64 = 1.495_978_707e11;
pub const MU_SUN: f64 = 1.327_124_400_18e20;

/// Classical elements of a heliocentric two-body orbit. Angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeplerElements {
    pub semi_major_axis_m: f64,
    pub eccentricity: f64,
    #[serde(default)]
    pub inclination_deg: f64,
    #[serde(default)]
    pub raan_deg: f64,
    #[serde(default)]
    pub arg_periapsis_deg: f64,
    #[serde(default)]
    pub mean_anomaly_deg: f64,
    #[serde(default)]
    pub epoch_s: f64,
    #[serde(default = "default_mu_central")]
    pub mu_central: f64,
}

fn default_mu_central() -> f64 {
    MU_SUN
}

impl KeplerElements {
    pub fn validate(&self) -> Result<(), EnvError> {
        if !(self.semi_major_axis_m > 0.0) {
            return Err(invalid("semi_major_axis_m", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.eccentricity) {
            return Err(invalid("eccentricity", "must be in [0, 1)"));
        }
        if !(self.mu_central > 0.0) {
            return Err(invalid("mu_central", "must be positive"));
        }
        Ok(())
    }

    pub fn mean_motion(&self) -> f64 {
        (self.mu_central / self.semi_major_axis_m.powi(3)).sqrt()
    }

    /// Position and velocity relative to the central body at time `t`.
    pub fn state_at(&self, t: f64) -> Result<(Vector3<f64>, Vector3<f64>), EnvError> {
        let a = self.semi_major_axis_m;
        let e = self.eccentricity;
        let m = self.mean_anomaly_deg.to_radians() + self.mean_motion() * (t - self.epoch_s);
        let ea = solve_kepler(m, e)?;
        let (se, ce) = ea.sin_cos();
        let b = a * (1.0 - e * e).sqrt();
        let r = a * (1.0 - e * ce);
        let e_dot = self.mean_motion() * a / r;
        let pos_pf = Vector3::new(a * (ce - e), b * se, 0.0);
        let vel_pf = Vector3::new(-a * se * e_dot, b * ce * e_dot, 0.0);
        let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), self.raan_deg.to_radians())
            * Rotation3::from_axis_angle(&Vector3::x_axis(), self.inclination_deg.to_radians())
            * Rotation3::from_axis_angle(&Vector3::z_axis(), self.arg_periapsis_deg.to_radians());
        Ok((rot * pos_pf, rot * vel_pf))
    }
}

/// Solves `E − e sin E = M` by Newton iteration.
pub(crate) fn solve_kepler(m: f64, e: f64) -> Result<f64, EnvError> {
    let m = m.rem_euclid(std::f64::consts::TAU);
    let mut ea = if e < 0.8 { m } else { std::f64::consts::PI };
    for _ in 0..50 {
        let f = ea - e * ea.sin() - m;
        let d = f / (1.0 - e * ea.cos());
        ea -= d;
        if d.abs() < 1e-14 {
            return Ok(ea);
        }
    }
    Err(EnvError::KeplerDiverged { mean_anomaly: m, e })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Ephemeris {
    Fixed { position_m: Vector3<f64> },
    Kepler(KeplerElements),
}

/// A gravitating (or reference-only) body with an ephemeris in the
/// heliocentric inertial frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CelestialBody {
    pub name: String,
    pub mu: f64,
    pub radius_m: f64,
    pub ephemeris: Ephemeris,
}

impl CelestialBody {
    pub fn sun() -> Self {
        Self {
            name: "sun".into(),
            mu: MU_SUN,
            radius_m: 6.957e8,
            ephemeris: Ephemeris::Fixed { position_m: Vector3::zeros() },
        }
    }

    pub fn fixed(name: &str, mu: f64, radius_m: f64, position_m: Vector3<f64>) -> Self {
        Self { name: name.into(), mu, radius_m, ephemeris: Ephemeris::Fixed { position_m } }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(invalid(format!("body `{}` mu", self.name), "must be positive"));
        }
        if !(self.radius_m >= 0.0) {
            return Err(invalid(format!("body `{}` radius", self.name), "must be non-negative"));
        }
        match &self.ephemeris {
            Ephemeris::Fixed { position_m } => {
                if !position_m.iter().all(|x| x.is_finite()) {
                    return Err(invalid(format!("body `{}` position", self.name), "must be finite"));
                }
                Ok(())
            }
            Ephemeris::Kepler(k) => k.validate(),
        }
    }

    pub fn position(&self, t: f64) -> Result<Vector3<f64>, EnvError> {
        Ok(self.state(t)?.0)
    }

    pub fn velocity(&self, t: f64) -> Result<Vector3<f64>, EnvError> {
        Ok(self.state(t)?.1)
    }

    pub fn state(&self, t: f64) -> Result<(Vector3<f64>, Vector3<f64>), EnvError> {
        match &self.ephemeris {
            Ephemeris::Fixed { position_m } => Ok((*position_m, Vector3::zeros())),
            Ephemeris::Kepler(k) => k.state_at(t),
        }
    }

    /// Acceleration of this body's ephemeris (two-body about its center).
    pub fn acceleration(&self, t: f64) -> Result<Vector3<f64>, EnvError> {
        match &self.ephemeris {
            Ephemeris::Fixed { .. } => Ok(Vector3::zeros()),
            Ephemeris::Kepler(k) => {
                let (r, _) = k.state_at(t)?;
                Ok(-r * (k.mu_central / r.norm().powi(3)))
            }
        }
    }

    /// Sphere-of-influence radius about the central body, `a (μ/μ_c)^{2/5}`.
    pub fn sphere_of_influence(&self) -> Option<f64> {
        match &self.ephemeris {
            Ephemeris::Fixed { .. } => None,
            Ephemeris::Kepler(k) => Some(k.semi_major_axis_m * (self.mu / k.mu_central).powf(0.4)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn elements(e: f64) -> KeplerElements {
        KeplerElements {
            semi_major_axis_m: 1.4 * AU,
            eccentricity: e,
            inclination_deg: 5.0,
            raan_deg: 30.0,
            arg_periapsis_deg: 60.0,
            mean_anomaly_deg: 10.0,
            epoch_s: 0.0,
            mu_central: MU_SUN,
        }
    }

    #[test]
    fn kepler_equation_residual() {
        for &e in &[0.0, 0.1, 0.5, 0.95] {
            for k in 0..20 {
                let m = k as f64 * 0.3;
                let ea = solve_kepler(m, e).unwrap();
                let resid = ea - e * ea.sin() - m.rem_euclid(std::f64::consts::TAU);
                assert!(resid.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn orbit_energy_and_period() {
        let k = elements(0.1);
        let (r, v) = k.state_at(1e6).unwrap();
        let energy = 0.5 * v.norm_squared() - MU_SUN / r.norm();
        assert!((energy + MU_SUN / (2.0 * k.semi_major_axis_m)).abs() / energy.abs() < 1e-12);
        let period = std::f64::consts::TAU / k.mean_motion();
        let (r2, _) = k.state_at(1e6 + period).unwrap();
        assert!((r2 - r).norm() / r.norm() < 1e-9);
    }

    #[test]
    fn velocity_is_position_derivative() {
        let k = elements(0.3);
        let t = 5e6;
        let h = 10.0;
        let (_, v) = k.state_at(t).unwrap();
        let fd = (k.state_at(t + h).unwrap().0 - k.state_at(t - h).unwrap().0) / (2.0 * h);
        assert!((fd - v).norm() / v.norm() < 1e-9);
    }

    #[test]
    fn soi_of_earth_like_body() {
        let b = CelestialBody {
            name: "earth".into(),
            mu: 3.986e14,
            radius_m: 6.371e6,
            ephemeris: Ephemeris::Kepler(KeplerElements { eccentricity: 0.0, ..elements(0.0) }),
        };
        let mut b = b;
        if let Ephemeris::Kepler(k) = &mut b.ephemeris {
            k.semi_major_axis_m = AU;
        }
        let soi = b.sphere_of_influence().unwrap();
        assert!((soi - 9.25e8).abs() / 9.25e8 < 0.01, "{soi}");
    }
}
