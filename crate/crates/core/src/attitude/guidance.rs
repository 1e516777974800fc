use nalgebra::Vector3;

use super::{invalid, AttitudeCommand, AttitudeError, AttitudeMode};
use crate::math::Quaternion;

/// Rest-to-rest rotation about the fixed eigen-axis with a trapezoidal
/// rate profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenAxisSlew {
    pub start: Quaternion,
    pub target: Quaternion,
    /// Eigen-axis in the inertial frame.
    pub axis: Vector3<f64>,
    /// Geodesic angle, rad.
    pub angle: f64,
    pub rate_limit: f64,
    pub accel_limit: f64,
    pub mode: AttitudeMode,
    peak_rate: f64,
    t_accel: f64,
    t_coast: f64,
}

impl EigenAxisSlew {
    pub fn new(
        q_current: &Quaternion,
        q_target: &Quaternion,
        rate_limit: f64,
        accel_limit: f64,
        mode: AttitudeMode,
    ) -> Result<Self, AttitudeError> {
        if !(rate_limit > 0.0) || !(accel_limit > 0.0) {
            return Err(invalid("slew limits", "rate and acceleration limits must be positive"));
        }
        let err = q_target.mul(&q_current.inverse()).properized();
        let angle = 2.0 * err.s.clamp(-1.0, 1.0).acos();
        let axis = err.axis().unwrap_or_else(Vector3::z);
        let (peak_rate, t_accel, t_coast) = if angle * accel_limit >= rate_limit * rate_limit {
            let ta = rate_limit / accel_limit;
            (rate_limit, ta, (angle - rate_limit * ta) / rate_limit)
        } else {
            let w = (angle * accel_limit).sqrt();
            (w, w / accel_limit, 0.0)
        };
        Ok(Self { start: *q_current, target: *q_target, axis, angle, rate_limit, accel_limit, mode, peak_rate, t_accel, t_coast })
    }

    pub fn duration(&self) -> f64 {
        2.0 * self.t_accel + self.t_coast
    }

    /// Angle, rate and acceleration along the profile at `t` since start.
    pub fn profile(&self, t: f64) -> (f64, f64, f64) {
        let (a, w, ta, tc) = (self.accel_limit, self.peak_rate, self.t_accel, self.t_coast);
        if t <= 0.0 {
            (0.0, 0.0, 0.0)
        } else if t < ta {
            (0.5 * a * t * t, a * t, a)
        } else if t < ta + tc {
            (0.5 * a * ta * ta + w * (t - ta), w, 0.0)
        } else if t < self.duration() {
            let r = self.duration() - t;
            (self.angle - 0.5 * a * r * r, a * r, -a)
        } else {
            (self.angle, 0.0, 0.0)
        }
    }

    pub fn command_at(&self, t: f64) -> AttitudeCommand {
        if t >= self.duration() {
            return AttitudeCommand::hold(self.target, self.mode);
        }
        let (theta, rate, accel) = self.profile(t);
        let q = Quaternion::from_axis_angle(&self.axis, theta).mul(&self.start).properized();
        // the eigen-axis is fixed in both inertial and commanded body frames
        let e_body = q.inverse_rotate(&self.axis);
        AttitudeCommand { q, omega: e_body * rate, omega_dot: e_body * accel, mode: self.mode }
    }
}

/// Command sequence sampled every `dt`, ending exactly on `q_target`.
pub fn eigen_axis_guidance(
    q_current: &Quaternion,
    q_target: &Quaternion,
    rate_limit: f64,
    accel_limit: f64,
    dt: f64,
    mode: AttitudeMode,
) -> Result<Vec<AttitudeCommand>, AttitudeError> {
    if !(dt > 0.0) {
        return Err(invalid("guidance step", "must be positive"));
    }
    let slew = EigenAxisSlew::new(q_current, q_target, rate_limit, accel_limit, mode)?;
    let n = (slew.duration() / dt).ceil() as usize;
    Ok((0..=n).map(|k| slew.command_at((k as f64 * dt).min(slew.duration()))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn identical_attitudes_single_command() {
        let q = Quaternion::from_axis_angle(&Vector3::new(1.0, 2.0, 3.0), 0.4);
        let cmds = eigen_axis_guidance(&q, &q, 0.01, 0.001, 1.0, AttitudeMode::Recharge).unwrap();
        assert_eq!(cmds.len(), 1);
        assert_eq!(cmds[0].q, q);
        assert_eq!(EigenAxisSlew::new(&q, &q, 0.01, 0.001, AttitudeMode::Recharge).unwrap().angle, 0.0);
    }

    #[test]
    fn quarter_turn_about_z() {
        let t = Quaternion::from_axis_angle(&Vector3::z(), PI / 2.0);
        let s = EigenAxisSlew::new(&Quaternion::identity(), &t, 0.02, 0.002, AttitudeMode::Downlink).unwrap();
        assert!((s.axis - Vector3::z()).norm() < 1e-15);
        assert!((s.angle - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn half_turn_axis_from_tie_break() {
        let n = Vector3::new(-1.0, 2.0, -3.0).normalize();
        let start = Quaternion::from_axis_angle(&Vector3::new(0.2, 0.1, 1.0), 0.3);
        let target = Quaternion::from_axis_angle(&n, PI).mul(&start);
        let s = EigenAxisSlew::new(&start, &target, 0.05, 0.005, AttitudeMode::Tcm).unwrap();
        // geodesic from rotation matrices
        let rel = target.to_rotation_matrix() * start.to_rotation_matrix().transpose();
        let geodesic = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos();
        assert!((s.angle - geodesic).abs() < 1e-7);
        // largest component (z) positive, so the axis is −n
        assert!((s.axis + n).norm() < 1e-9);
        let end = Quaternion::from_axis_angle(&s.axis, s.angle).mul(&start);
        assert!(end.angle_to(&target) < 1e-7);
    }

    #[test]
    fn profile_respects_limits_and_ends_on_target() {
        let start = Quaternion::from_axis_angle(&Vector3::new(0.3, -0.4, 1.0), 0.2);
        let target = Quaternion::from_axis_angle(&Vector3::new(-1.0, 0.5, 0.2), 2.1);
        let (wmax, amax, dt) = (0.01, 0.0005, 0.5);
        let cmds = eigen_axis_guidance(&start, &target, wmax, amax, dt, AttitudeMode::Recharge).unwrap();
        assert_eq!(cmds.last().unwrap().q, target);
        assert!(cmds[0].q.angle_to(&start) < 1e-15);
        let slew = EigenAxisSlew::new(&start, &target, wmax, amax, AttitudeMode::Recharge).unwrap();
        let mut prev = 0.0;
        let mut path = 0.0;
        for k in 0..=((slew.duration() / dt).ceil() as usize) {
            let (th, w, a) = slew.profile((k as f64 * dt).min(slew.duration()));
            assert!(w <= wmax * (1.0 + 1e-12) && a.abs() <= amax);
            assert!(th >= prev - 1e-15);
            path += th - prev;
            prev = th;
        }
        let err = target.mul(&start.inverse()).properized();
        assert!((path - 2.0 * err.s.abs().acos()).abs() < 1e-9);
        for c in &cmds {
            assert!(c.omega.norm() <= wmax * (1.0 + 1e-12));
            assert!((c.q.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn commanded_rate_matches_quaternion_derivative() {
        let start = Quaternion::from_axis_angle(&Vector3::new(0.3, -0.4, 1.0), 0.2);
        let target = Quaternion::from_axis_angle(&Vector3::new(-1.0, 0.5, 0.2), 1.5);
        let s = EigenAxisSlew::new(&start, &target, 0.02, 0.001, AttitudeMode::Recharge).unwrap();
        let t = 0.3 * s.duration();
        let h = 1e-3;
        let a = s.command_at(t - h);
        let b = s.command_at(t + h);
        let c = s.command_at(t);
        // body rate from finite difference of q_c⁻¹ ⊗ q(t+h)
        let fd = a.q.inverse().mul(&b.q).to_rotation_vector() / (2.0 * h);
        assert!((fd - c.omega).norm() < 1e-8, "{fd} vs {}", c.omega);
    }

    #[test]
    fn triangular_profile_for_short_slews() {
        let t = Quaternion::from_axis_angle(&Vector3::x(), 0.01);
        let s = EigenAxisSlew::new(&Quaternion::identity(), &t, 1.0, 0.01, AttitudeMode::Recharge).unwrap();
        let (_, wpk, _) = s.profile(s.duration() / 2.0);
        assert!(wpk < 1.0);
        assert!((s.duration() - 2.0 * (0.01f64 / 0.01).sqrt()).abs() < 1e-12);
    }
}
