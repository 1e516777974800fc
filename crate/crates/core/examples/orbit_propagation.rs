//! One period of a 7000 km circular Earth orbit with RK4, checking closure
//! and energy against the analytic orbit.

use std::f64::consts::PI;

use nalgebra::Vector3;

use cruisesim::math::Quaternion;
use cruisesim::navigation::{propagate, specific_energy, NavModel, NavState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mu = 3.986004418e14;
    let a = 7.0e6;
    let model = NavModel::two_body(mu);
    let x0 = NavState { t: 0.0, r: Vector3::new(a, 0.0, 0.0), v: Vector3::new(0.0, (mu / a).sqrt(), 0.0), center: 0 };
    let period = 2.0 * PI * (a.powi(3) / mu).sqrt();
    let trace = propagate(&model, &x0, &Quaternion::identity(), &[], 1.0, period)?;
    let last = trace.last().unwrap();
    let e0 = specific_energy(mu, &x0.r, &x0.v);
    println!("period      {period:.3} s, {} states", trace.len());
    println!("t end       {:.3} s", last.t);
    println!("closure     {:.4} m", (last.r - x0.r).norm());
    println!("energy rel  {:.3e}", (specific_energy(mu, &last.r, &last.v) - e0).abs() / e0.abs());
    let worst = trace.iter().map(|s| (s.r.norm() - a).abs() / a).fold(0.0, f64::max);
    println!("radius rel  {worst:.3e}");
    Ok(())
}
