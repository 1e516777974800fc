use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{invalid, CelestialBody, EnvError, Pose};
use crate::math::{Framed, Inertial, Spacecraft};

/// Point-mass gravity on mass `m` at `r_cm`, from a body at `body_pos`.
pub fn gravity_force(
    body: &CelestialBody,
    body_pos: &Framed<Inertial>,
    r_cm: &Framed<Inertial>,
    m: f64,
) -> Result<Framed<Inertial>, EnvError> {
    let r = *r_cm - *body_pos;
    let d = r.norm();
    if d == 0.0 || d <= body.radius_m {
        return Err(EnvError::InsideBody { body: body.name.clone(), separation: d, radius: body.radius_m });
    }
    Ok(r * (-body.mu * m / (d * d * d)))
}

/// Uniform-density cuboid split into `K³` equal partitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassGrid {
    pub partitions: usize,
    pub half_extents_m: Vector3<f64>,
    pub mass_kg: f64,
}

impl MassGrid {
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.partitions == 0 {
            return Err(invalid("mass grid partitions", "must be at least 1"));
        }
        if !self.half_extents_m.iter().all(|h| *h >= 0.0 && h.is_finite()) {
            return Err(invalid("mass grid half extents", "must be non-negative"));
        }
        if !(self.mass_kg > 0.0) {
            return Err(invalid("mass grid mass", "must be positive"));
        }
        Ok(())
    }

    pub fn partition_mass(&self) -> f64 {
        self.mass_kg / (self.partitions.pow(3) as f64)
    }

    /// Partition centers relative to the geometric center, spacecraft frame.
    pub fn centers(&self) -> Vec<Vector3<f64>> {
        let k = self.partitions;
        let coord = |axis: usize, i: usize| {
            let h = self.half_extents_m[axis];
            -h + (2 * i + 1) as f64 * h / k as f64
        };
        let mut out = Vec::with_capacity(k * k * k);
        for i in 0..k {
            for j in 0..k {
                for l in 0..k {
                    out.push(Vector3::new(coord(0, i), coord(1, j), coord(2, l)));
                }
            }
        }
        out
    }
}

/// Gravity-gradient torque about the center of mass, spacecraft frame.
///
/// Equal to `Σ ρ_k × F_k` over the partitions. Because the arms sum to
/// zero only the differential force contributes, and its component along
/// the arm has no moment, so each term reduces to
/// `−μ m_k (1/|d_k|³ − 1/|r|³) ρ_k × r`. The bracket is formed without
/// subtracting nearly equal numbers.
pub fn gravity_torque(
    body: &CelestialBody,
    body_pos: &Framed<Inertial>,
    grid: &MassGrid,
    pose: &Pose,
) -> Result<Framed<Spacecraft>, EnvError> {
    let rot_t = pose.attitude.to_rotation_matrix().transpose();
    let r = rot_t * (pose.position - *body_pos).v;
    let rn = r.norm();
    let mk = grid.partition_mass();
    let mut t = Vector3::zeros();
    for rk in grid.centers() {
        let d = r + rk;
        let dn = d.norm();
        if dn == 0.0 || dn <= body.radius_m {
            return Err(EnvError::InsideBody { body: body.name.clone(), separation: dn, radius: body.radius_m });
        }
        // |r|³ − |d|³ via |r|² − |d|² = −(2 r·ρ + ρ²)
        let sq = -(2.0 * r.dot(&rk) + rk.norm_squared());
        let cubes = sq / (rn + dn) * (rn * rn + rn * dn + dn * dn);
        let bracket = cubes / (rn.powi(3) * dn.powi(3));
        t += rk.cross(&r) * (-body.mu * mk * bracket);
    }
    Ok(Framed::new(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Quaternion;

    fn unit_body() -> CelestialBody {
        CelestialBody::fixed("unit", 1.0, 0.0, Vector3::zeros())
    }

    #[test]
    fn unit_point_mass() {
        let f = gravity_force(&unit_body(), &Framed::zeros(), &Framed::new(Vector3::x()), 1.0).unwrap();
        assert_eq!(f.v, Vector3::new(-1.0, 0.0, 0.0));
    }

    #[test]
    fn inverse_square_scaling() {
        let b = unit_body();
        let r = Vector3::new(3.0, -1.0, 2.0);
        let f1 = gravity_force(&b, &Framed::zeros(), &Framed::new(r), 2.0).unwrap();
        let f2 = gravity_force(&b, &Framed::zeros(), &Framed::new(r * 2f64.sqrt()), 2.0).unwrap();
        assert!((f2.norm() - f1.norm() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn earth_like_magnitude() {
        let b = CelestialBody::fixed("earth", 3.986e14, 6.371e6, Vector3::zeros());
        let f = gravity_force(&b, &Framed::zeros(), &Framed::new(Vector3::new(7e6, 0.0, 0.0)), 178.0).unwrap();
        let expected = 3.986e14 * 178.0 / 7e6f64.powi(2);
        assert!((f.norm() - expected).abs() < 1e-9);
        assert!((f.norm() - 1448.0).abs() < 0.05);
    }

    #[test]
    fn zero_separation_rejected() {
        let r = gravity_force(&unit_body(), &Framed::zeros(), &Framed::zeros(), 1.0);
        assert!(matches!(r, Err(EnvError::InsideBody { .. })));
    }

    #[test]
    fn grid_masses_and_symmetry() {
        let g = MassGrid { partitions: 5, half_extents_m: Vector3::new(0.3, 0.2, 0.1), mass_kg: 178.0 };
        let c = g.centers();
        assert_eq!(c.len(), 125);
        assert!((g.partition_mass() * c.len() as f64 - 178.0).abs() < 1e-9);
        let sum: Vector3<f64> = c.iter().sum();
        assert!(sum.norm() < 1e-12);
    }

    #[test]
    fn single_partition_has_no_torque() {
        let g = MassGrid { partitions: 1, half_extents_m: Vector3::new(0.5, 0.5, 0.5), mass_kg: 10.0 };
        let pose = Pose::new(Vector3::new(1e4, 2e3, -5e3), Quaternion::from_axis_angle(&Vector3::y(), 0.4));
        let body = CelestialBody::fixed("b", 5e5, 100.0, Vector3::zeros());
        let t = gravity_torque(&body, &Framed::zeros(), &g, &pose).unwrap();
        assert_eq!(t.norm(), 0.0);
    }

    #[test]
    fn symmetric_cube_on_principal_axis() {
        let g = MassGrid { partitions: 4, half_extents_m: Vector3::new(0.5, 0.5, 0.5), mass_kg: 100.0 };
        let pose = Pose::new(Vector3::new(0.0, 0.0, 7e6), Quaternion::identity());
        let body = CelestialBody::fixed("earth", 3.986e14, 6.371e6, Vector3::zeros());
        let t = gravity_torque(&body, &Framed::zeros(), &g, &pose).unwrap();
        assert!(t.norm() < 1e-12, "{}", t.norm());
    }
}
