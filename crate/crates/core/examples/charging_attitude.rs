//! Trading array power against pointing a body axis at a target.

use nalgebra::Vector3;

use cruisesim::environment::{SolarConstants, AU};
use cruisesim::executive::{charging_attitude, ChargingProblem};
use cruisesim::power::{HfArrayParams, SolarArray};

fn array(name: &str, normal: Vector3<f64>, gimbal: Option<Vector3<f64>>) -> SolarArray {
    SolarArray {
        name: name.into(),
        area_m2: 1.0,
        efficiency: 0.28,
        packing: 0.9,
        normal,
        centroid_m: Vector3::zeros(),
        gimbal_axis: gimbal,
        hf: HfArrayParams::default(),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let arrays = [
        array("wing_plus_y", Vector3::x(), Some(Vector3::y())),
        array("wing_minus_y", Vector3::x(), Some(Vector3::y())),
        array("panel_plus_z", Vector3::z(), None),
    ];
    let solar = SolarConstants::default();
    let position = Vector3::new(1.4 * AU, 0.0, 0.0);
    // target 100 degrees away from the Sun as seen from the spacecraft
    let a = 100f64.to_radians();
    let target_direction = Vector3::new(-a.cos(), a.sin(), 0.0);
    for weight in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let problem = ChargingProblem {
            solar: &solar,
            arrays: &arrays,
            position,
            sun_position: Vector3::zeros(),
            target_direction,
            pointing_axis: Vector3::z(),
            weight,
        };
        let s = charging_attitude(&problem)?;
        println!(
            "w {weight:.2}: power {:>6.1} / {:.1} W, pointing error {:>6.2} deg, gimbals {:.1?} deg",
            s.power_w,
            s.power_max_w,
            s.pointing_error_rad.to_degrees(),
            s.gimbal_angles.iter().map(|g| g.to_degrees()).collect::<Vec<_>>()
        );
    }
    Ok(())
}
