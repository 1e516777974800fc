//! Earth-to-Mars style heliocentric transfer, then a correction burn that
//! removes an injected velocity error.

use nalgebra::Vector3;

use cruisesim::environment::{AU, MU_SUN};
use cruisesim::navigation::{inject_state_error, lambert_solve, plan_tcm, predicted_miss, NavModel, NavState, TcmTarget, TransferDirection};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r1 = Vector3::new(AU, 0.0, 0.0);
    let r2 = Vector3::new(-1.2 * AU, 0.9 * AU, 0.02 * AU);
    let tof = 250.0 * 86400.0;
    let sol = lambert_solve(&r1, &r2, tof, MU_SUN, TransferDirection::Prograde, None)?;
    println!("v1 {:.3?} m/s ({:.1} m/s)", sol.v1.as_slice(), sol.v1.norm());
    println!("v2 {:.3?} m/s ({:.1} m/s), {} iterations", sol.v2.as_slice(), sol.v2.norm(), sol.iterations);

    let model = NavModel { mass_kg: 178.0, ..NavModel::two_body(MU_SUN) };
    let target = TcmTarget { r: r2, t_arrive: tof };
    let nominal = NavState { t: 0.0, r: r1, v: sol.v1, center: 0 };
    let off = inject_state_error(&nominal, 0.0, 0.05, 11);
    println!("miss before {:.0} km", predicted_miss(&model, &off, &target)? / 1e3);
    let plan = plan_tcm(&model, &off, &target, 1.0, 1.0)?;
    println!("delta-v {:.4?} m/s, capped {}", plan.delta_v.as_slice(), plan.capped);
    let corrected = NavState { v: off.v + plan.delta_v, ..off };
    println!("miss after  {:.3} m", predicted_miss(&model, &corrected, &target)?);
    Ok(())
}
