//! 60° eigen-axis slew on a four-wheel pyramid with critically damped gains.

use nalgebra::{DVector, Matrix3, Vector3};

use cruisesim::attitude::{
    allocate_actuators, step_attitude, substeps_for, tracking_controller, AttitudeInputs, AttitudeMode, AttitudeModel,
    AttitudeState, EigenAxisSlew, Gains, RotorSpec, ThrusterSpec,
};
use cruisesim::math::Quaternion;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = AttitudeModel::new(
        Matrix3::from_diagonal(&Vector3::new(60.0, 70.0, 50.0)),
        RotorSpec::pyramid(0.01, 0.005, 0.04, 600.0, 54.7356f64.to_radians()),
        vec![],
        ThrusterSpec::default(),
        0.05,
    )?;
    let gains = Gains::critically_damped(&model, 0.1)?;
    let q0 = Quaternion::identity();
    let target = Quaternion::from_axis_angle(&Vector3::new(1.0, 1.0, 0.0), 60f64.to_radians());
    let slew = EigenAxisSlew::new(&q0, &target, 0.4f64.to_radians(), 2e-4, AttitudeMode::SmallBodyPointing)?;
    println!("slew {:.1} deg over {:.0} s", slew.angle.to_degrees(), slew.duration());

    let mut x = AttitudeState::at_rest(q0, 4, 0);
    let end = slew.duration() + 200.0;
    let mut t = 0.0;
    while t < end {
        let cmd = slew.command_at(t);
        let u = tracking_controller(&model, &x, &cmd, &gains);
        let alloc = allocate_actuators(&model, &x, &u)?;
        let inputs = AttitudeInputs {
            wheel_accel: alloc.wheel_accel,
            wing_accel: DVector::zeros(0),
            thruster_torque: alloc.thruster_torque,
            disturbance: Vector3::zeros(),
        };
        let n = substeps_for(&model, &x, 1.0);
        for _ in 0..n {
            x = step_attitude(&model, &x, &inputs, 1.0 / n as f64)?;
        }
        t += 1.0;
        if (t as u64).is_multiple_of(50) {
            println!(
                "t {t:>5.0} s  error {:>9.5} deg  |w| {:.5} rad/s  max wheel {:>6.1} rad/s",
                x.q.angle_to(&target).to_degrees(),
                x.omega.norm(),
                x.max_wheel_rate()
            );
        }
    }
    Ok(())
}
