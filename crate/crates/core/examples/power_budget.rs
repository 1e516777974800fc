//! A fixed panel turning away from the Sun, with the battery integrating
//! the net power, plus the MPPT operating point of the default IV curve.

use nalgebra::Vector3;

use cruisesim::environment::{Pose, SolarConstants, AU};
use cruisesim::math::{Framed, Quaternion};
use cruisesim::power::{mppt_power, net_power, solar_power_lf, Battery, HfArrayParams, NetPowerModel, PowerLoad, SolarArray};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k = SolarConstants::default();
    let panel = SolarArray {
        name: "panel".into(),
        area_m2: 2.0,
        efficiency: 0.28,
        packing: 0.9,
        normal: Vector3::x(),
        centroid_m: Vector3::zeros(),
        gimbal_axis: None,
        hf: HfArrayParams::default(),
    };
    let loads = [PowerLoad::new("bus", 110.0, true), PowerLoad::new("instruments", 120.0, true)];
    let mut battery = Battery { capacity_wh: 80.0, charge_efficiency: 0.95, discharge_efficiency: 0.9, soc: 0.6, bus_voltage_v: 28.0, fade_per_s: 0.0 };
    let sun = Framed::zeros();
    let position = Vector3::new(-1.4 * AU, 0.0, 0.0);
    for minute in 0..=12 {
        // panel normal sweeps from Sun-facing to edge-on over the hour
        let yaw = (minute as f64 * 7.5).to_radians();
        let pose = Pose::new(position, Quaternion::from_axis_angle(&Vector3::z(), yaw));
        let p = solar_power_lf(&k, std::slice::from_ref(&panel), &[], &pose, &sun)?;
        let net = net_power(p, &loads, NetPowerModel::Lf)?;
        let update = battery.apply(battery.soc_delta_lf(net * 300.0 / 3600.0));
        println!("t {:>4} s  yaw {:>5.1} deg  P {:>6.1} W  net {:>7.1} W  SoC {:.4}{}", minute * 300, yaw.to_degrees(), p, net, battery.soc, if update.clamped { " (clamped)" } else { "" });
    }
    let hf = HfArrayParams::default();
    let mpp = mppt_power(&hf, 1361.0, 0.0, hf.reference_temp_k, 0.0);
    println!("MPPT {:.3} A at {:.3} V = {:.2} W", mpp.current_a, mpp.voltage_v, mpp.power_w);
    Ok(())
}
