use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{invalid, kepler_propagate, lambert_solve, NavError, NavModel, NavState, PropulsionCommand, TransferDirection};

/// Desired inertial position at `t_arrive`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcmTarget {
    pub r: Vector3<f64>,
    pub t_arrive: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcmPlan {
    /// Impulsive correction from the Lambert solution.
    pub delta_v_requested: Vector3<f64>,
    /// Correction actually commanded after the cap.
    pub delta_v: Vector3<f64>,
    pub capped: bool,
    /// `None` when no correction is needed.
    pub burn: Option<PropulsionCommand>,
}

fn target_relative(model: &NavModel, x: &NavState, target: &TcmTarget) -> Result<Vector3<f64>, NavError> {
    Ok(target.r - model.body(x.center)?.position(target.t_arrive)?)
}

/// Two-body arrival miss distance if no further correction is made.
pub fn predicted_miss(model: &NavModel, x: &NavState, target: &TcmTarget) -> Result<f64, NavError> {
    let mu = model.body(x.center)?.mu;
    let (r, _) = kepler_propagate(&x.r, &x.v, target.t_arrive - x.t, mu)?;
    Ok((r - target_relative(model, x, target)?).norm())
}

/// Lambert correction from the current state to the target, executed as a
/// finite burn at `max_thrust` starting now.
pub fn plan_tcm(
    model: &NavModel,
    x: &NavState,
    target: &TcmTarget,
    max_delta_v: f64,
    max_thrust: f64,
) -> Result<TcmPlan, NavError> {
    let tof = target.t_arrive - x.t;
    if !(tof > 0.0) {
        return Err(invalid("TCM target", "arrival time must be in the future"));
    }
    if !(max_delta_v >= 0.0) || !(max_thrust > 0.0) {
        return Err(invalid("TCM limits", "Δv cap must be non-negative and thrust positive"));
    }
    let mu = model.body(x.center)?.mu;
    let r2 = target_relative(model, x, target)?;
    let h = x.r.cross(&x.v);
    let normal = if h.norm() > 0.0 { Some(h) } else { None };
    let sol = lambert_solve(&x.r, &r2, tof, mu, TransferDirection::Prograde, normal.as_ref())?;
    let requested = sol.v1 - x.v;
    let (delta_v, capped) = if requested.norm() > max_delta_v {
        (requested * (max_delta_v / requested.norm()), true)
    } else {
        (requested, false)
    };
    let dv = delta_v.norm();
    let burn = (dv > 0.0).then(|| PropulsionCommand {
        thrust_n: delta_v * (max_thrust / dv),
        start_s: x.t,
        stop_s: x.t + dv * model.mass_kg / max_thrust,
        mass_flow_kg_s: None,
    });
    Ok(TcmPlan { delta_v_requested: requested, delta_v, capped, burn })
}

/// Copy of `x` with seeded Gaussian position and velocity errors, for use by
/// onboard algorithms in place of a measurement model.
pub fn inject_state_error(x: &NavState, sigma_pos: f64, sigma_vel: f64, seed: u64) -> NavState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let dr = Vector3::new(draw(), draw(), draw()) * sigma_pos;
    let dv = Vector3::new(draw(), draw(), draw()) * sigma_vel;
    NavState { r: x.r + dr, v: x.v + dv, ..*x }
}

#[cfg(test)]
mod tests {
    use super::super::propagate;
    use super::*;
    use crate::math::Quaternion;

    const MU: f64 = 3.986004418e14;

    fn nominal() -> (NavModel, NavState, TcmTarget) {
        let mut m = NavModel::two_body(MU);
        m.mass_kg = 178.0;
        let x = NavState { t: 0.0, r: Vector3::new(7.0e6, 0.0, 0.0), v: Vector3::new(0.0, 7.8e3, 500.0), center: 0 };
        let (r, _) = kepler_propagate(&x.r, &x.v, 3000.0, MU).unwrap();
        (m, x, TcmTarget { r, t_arrive: 3000.0 })
    }

    #[test]
    fn on_course_needs_nothing() {
        let (m, x, target) = nominal();
        let plan = plan_tcm(&m, &x, &target, 10.0, 1.0).unwrap();
        assert!(plan.delta_v.norm() < 1e-6, "{}", plan.delta_v.norm());
        assert!(!plan.capped);
        assert!(predicted_miss(&m, &x, &target).unwrap() < 1e-4);
    }

    #[test]
    fn correction_shrinks_miss() {
        let (m, mut x, target) = nominal();
        let h = x.r.cross(&x.v).normalize();
        x.v += h;
        let q = Quaternion::identity();
        let free = propagate(&m, &x, &q, &[], 1.0, 3000.0).unwrap();
        let miss_free = (free.last().unwrap().r - target.r).norm();
        let plan = plan_tcm(&m, &x, &target, 10.0, 5.0).unwrap();
        let burn = plan.burn.unwrap();
        assert!((burn.delta_v(m.mass_kg) - plan.delta_v).norm() < 1e-12);
        let corrected = propagate(&m, &x, &q, &[burn], 1.0, 3000.0).unwrap();
        let miss = (corrected.last().unwrap().r - target.r).norm();
        assert!(miss < 0.1 * miss_free, "{miss} vs {miss_free}");
    }

    #[test]
    fn cap_scales_and_flags() {
        let (m, mut x, target) = nominal();
        x.v.y += 50.0;
        let plan = plan_tcm(&m, &x, &target, 1.0, 1.0).unwrap();
        assert!(plan.capped);
        assert!((plan.delta_v.norm() - 1.0).abs() < 1e-12);
        assert!(plan.delta_v_requested.norm() > 1.0);
        let b = plan.burn.unwrap();
        assert!((b.stop_s - b.start_s - 178.0).abs() < 1e-9);
        assert!(plan_tcm(&m, &NavState { t: 3000.0, ..x }, &target, 1.0, 1.0).is_err());
    }

    #[test]
    fn state_error_is_seeded_and_unbiased() {
        let x = NavState { t: 0.0, r: Vector3::new(1.0, 2.0, 3.0), v: Vector3::zeros(), center: 0 };
        assert_eq!(inject_state_error(&x, 0.0, 0.0, 9), x);
        assert_eq!(inject_state_error(&x, 5.0, 0.1, 9), inject_state_error(&x, 5.0, 0.1, 9));
        assert_ne!(inject_state_error(&x, 5.0, 0.1, 9), inject_state_error(&x, 5.0, 0.1, 10));
        let n = 10_000;
        let sigma = 2.0;
        let mean: Vector3<f64> = (0..n).map(|k| inject_state_error(&x, sigma, 0.0, k).r - x.r).sum::<Vector3<f64>>() / n as f64;
        for i in 0..3 {
            assert!(mean[i].abs() < 3.0 * sigma / (n as f64).sqrt());
        }
    }
}
