//! Gravity-gradient torque near a small body and SRP torque from offset
//! plates, over a range of attitudes.

use nalgebra::Vector3;

use cruisesim::environment::{gravity_torque, srp_force_torque, CelestialBody, MassGrid, Plate, Pose, SolarConstants, AU};
use cruisesim::math::{Framed, Quaternion};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let body_pos = Vector3::new(1.4 * AU, 0.0, 0.0);
    let body = CelestialBody::fixed("target", 50.0, 400.0, body_pos);
    let grid = MassGrid { partitions: 4, half_extents_m: Vector3::new(0.6, 0.6, 0.8), mass_kg: 178.0 };
    let plates: Vec<Plate> = [Vector3::x(), -Vector3::x(), Vector3::y(), -Vector3::y()]
        .into_iter()
        .map(|n| Plate { area_m2: 1.92, reflectivity: 0.3, normal: n, center_m: n * 0.6 + Vector3::new(0.02, 0.03, 0.05) })
        .collect();
    let k = SolarConstants::default();
    let sun = Framed::zeros();
    let position = body_pos - Vector3::x() * 2000.0;
    for deg in (0..=90).step_by(15) {
        let q = Quaternion::from_axis_angle(&Vector3::new(0.0, 1.0, 1.0), (deg as f64).to_radians());
        let pose = Pose::new(position, q);
        let gg = gravity_torque(&body, &Framed::new(body_pos), &grid, &pose)?;
        let (force, srp) = srp_force_torque(&k, &plates, &pose, &sun)?;
        println!("{deg:>3} deg  GG {:.3e} N m  SRP {:.3e} N m  SRP force {:.3e} N", gg.norm(), srp.norm(), force.norm());
    }
    Ok(())
}
