use std::sync::{Arc, OnceLock};

use nalgebra::{Matrix3, Matrix6, Vector3};

use super::{invalid, NavError, NavModel, NavState, PropulsionCommand};
use crate::environment::{gravity_force, srp_force_torque, Pose};
use crate::math::{rk4_step, Framed, Quaternion, StateLayout, StateVector};

/// Limit on the per-step two-body energy residual, relative to the orbit's
/// energy scale.
const ENERGY_TOLERANCE: f64 = 1e-3;

fn layout() -> Arc<StateLayout> {
    static LAYOUT: OnceLock<Arc<StateLayout>> = OnceLock::new();
    Arc::clone(LAYOUT.get_or_init(|| Arc::new(StateLayout::new().vector("r", "m", 3).vector("v", "m/s", 3))))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavRates {
    pub v: Vector3<f64>,
    pub a: Vector3<f64>,
    /// Two-body part from the center of integration alone.
    pub a_central: Vector3<f64>,
}

impl NavRates {
    pub fn a_perturbing(&self) -> Vector3<f64> {
        self.a - self.a_central
    }
}

/// `r̈ = (Σ F_g + F_srp + u) / m` minus the acceleration of the center.
pub fn nav_derivative(
    model: &NavModel,
    x: &NavState,
    attitude: &Quaternion,
    thrust: &Vector3<f64>,
) -> Result<NavRates, NavError> {
    let center = model.body(x.center)?;
    let (rc, _) = center.state(x.t)?;
    let r_abs = Framed::new(x.r + rc);
    let m = model.mass_kg;
    let mut force = *thrust;
    for b in &model.bodies {
        let rb = Framed::new(b.position(x.t)?);
        force += gravity_force(b, &rb, &r_abs, m)?.into_inner();
    }
    if model.srp && !model.plates.is_empty() {
        let sun = Framed::new(model.body(model.sun)?.position(x.t)?);
        let (f, _) = srp_force_torque(&model.solar, &model.plates, &Pose { position: r_abs, attitude: *attitude }, &sun)?;
        force += f.into_inner();
    }
    let a = force / m - center.acceleration(x.t)?;
    let d = x.r.norm();
    let a_central = if d > 0.0 { -x.r * (center.mu / (d * d * d)) } else { Vector3::zeros() };
    Ok(NavRates { v: x.v, a, a_central })
}

/// Gravity partials of the dynamics, `F = [[0, I], [G, 0]]` with
/// `G = Σ (3μ r rᵀ / r⁵ − μ I / r³)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateTransition {
    pub f: Matrix6<f64>,
    pub position_partial: Matrix3<f64>,
}

pub fn state_transition_jacobian(model: &NavModel, x: &NavState) -> Result<StateTransition, NavError> {
    let (rc, _) = model.body(x.center)?.state(x.t)?;
    let r_abs = x.r + rc;
    let mut g = Matrix3::zeros();
    for b in &model.bodies {
        let r = r_abs - b.position(x.t)?;
        let d = r.norm();
        if d == 0.0 {
            return Err(NavError::Env(crate::environment::EnvError::InsideBody {
                body: b.name.clone(),
                separation: 0.0,
                radius: b.radius_m,
            }));
        }
        let d3 = d * d * d;
        g += r * r.transpose() * (3.0 * b.mu / (d3 * d * d)) - Matrix3::identity() * (b.mu / d3);
    }
    let mut f = Matrix6::zeros();
    f.fixed_view_mut::<3, 3>(0, 3).copy_from(&Matrix3::identity());
    f.fixed_view_mut::<3, 3>(3, 0).copy_from(&g);
    Ok(StateTransition { f, position_partial: g })
}

/// Re-expresses `x` relative to body `to`, preserving inertial state.
pub fn switch_center(model: &NavModel, x: &NavState, to: usize) -> Result<NavState, NavError> {
    let (r, v) = model.inertial(x)?;
    let (rt, vt) = model.body(to)?.state(x.t)?;
    Ok(NavState { t: x.t, r: r - rt, v: v - vt, center: to })
}

/// Center of integration for `x`: a body is entered inside `(1 − h)` of its
/// sphere of influence and left outside `(1 + h)`.
pub fn select_center(model: &NavModel, x: &NavState) -> Result<usize, NavError> {
    let h = model.soi_hysteresis;
    if x.center != model.sun {
        return match model.body(x.center)?.sphere_of_influence() {
            Some(soi) if x.r.norm() > soi * (1.0 + h) => Ok(model.sun),
            Some(_) => Ok(x.center),
            None => Ok(model.sun),
        };
    }
    let (r_abs, _) = model.inertial(x)?;
    let mut best: Option<(usize, f64)> = None;
    for (i, b) in model.bodies.iter().enumerate() {
        if i == model.sun {
            continue;
        }
        if let Some(soi) = b.sphere_of_influence() {
            let d = (r_abs - b.position(x.t)?).norm();
            if d < soi * (1.0 - h) && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
    }
    Ok(best.map_or(model.sun, |(i, _)| i))
}

fn energy(mu: f64, x: &NavState) -> (f64, f64) {
    let r = x.r.norm();
    let kinetic = 0.5 * x.v.norm_squared();
    (kinetic - mu / r, kinetic + mu / r)
}

/// One RK4 step under constant thrust, with a two-body energy consistency
/// check and a sphere-of-influence switch at the end.
pub fn step_nav(
    model: &NavModel,
    x: &NavState,
    attitude: &Quaternion,
    thrust: &Vector3<f64>,
    dt: f64,
) -> Result<NavState, NavError> {
    let center = x.center;
    let sv = StateVector::pack(layout(), vec![x.r.x, x.r.y, x.r.z, x.v.x, x.v.y, x.v.z])?;
    let t0 = x.t;
    let rates0 = nav_derivative(model, x, attitude, thrust)?;
    let next = rk4_step::<NavError, _>(
        |tau, y, d| {
            let s = NavState { t: t0 + tau, r: Vector3::new(y[0], y[1], y[2]), v: Vector3::new(y[3], y[4], y[5]), center };
            let r = nav_derivative(model, &s, attitude, thrust)?;
            d[..3].copy_from_slice(r.v.as_slice());
            d[3..].copy_from_slice(r.a.as_slice());
            Ok(())
        },
        &sv,
        0.0,
        dt,
    )?;
    let y = next.values();
    let out = NavState { t: t0 + dt, r: Vector3::new(y[0], y[1], y[2]), v: Vector3::new(y[3], y[4], y[5]), center };
    let rates1 = nav_derivative(model, &out, attitude, thrust)?;
    let mu = model.body(center)?.mu;
    let (e0, scale) = energy(mu, x);
    let (e1, _) = energy(mu, &out);
    // work done by non-central forces, trapezoidal
    let work = 0.5 * dt * (x.v.dot(&rates0.a_perturbing()) + out.v.dot(&rates1.a_perturbing()));
    let residual = (e1 - e0 - work).abs() / scale;
    if !(residual <= ENERGY_TOLERANCE) {
        return Err(NavError::StepUnstable { relative_error: residual, dt });
    }
    let to = select_center(model, &out)?;
    if to != center {
        return switch_center(model, &out, to);
    }
    Ok(out)
}

/// Trace from `x0` over `horizon` seconds, including the initial state. The
/// last step is shortened to land exactly on the horizon.
pub fn propagate(
    model: &NavModel,
    x0: &NavState,
    attitude: &Quaternion,
    burns: &[PropulsionCommand],
    dt: f64,
    horizon: f64,
) -> Result<Vec<NavState>, NavError> {
    if !(dt > 0.0) {
        return Err(invalid("dt", "must be positive"));
    }
    if !(horizon >= 0.0) {
        return Err(invalid("horizon", "must be non-negative"));
    }
    let t_end = x0.t + horizon;
    let mut trace = vec![*x0];
    let mut x = *x0;
    let mut k = 0u64;
    while t_end - x.t > 1e-9 * dt {
        k += 1;
        let h = (x0.t + k as f64 * dt).min(t_end) - x.t;
        let thrust: Vector3<f64> = burns.iter().map(|b| b.mean_thrust(x.t, h)).sum();
        x = step_nav(model, &x, attitude, &thrust, h)?;
        trace.push(x);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{CelestialBody, Ephemeris, KeplerElements, Plate, AU, MU_SUN};
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    const MU_EARTH: f64 = 3.986004418e14;

    fn circular(mu: f64, r: f64) -> NavState {
        NavState { t: 0.0, r: Vector3::new(r, 0.0, 0.0), v: Vector3::new(0.0, (mu / r).sqrt(), 0.0), center: 0 }
    }

    #[test]
    fn coasting_without_forces() {
        let mut m = NavModel::two_body(1.0);
        m.bodies[0].mu = 1e-300;
        let x = NavState { t: 0.0, r: Vector3::new(1e12, 0.0, 0.0), v: Vector3::new(1.0, 0.0, 0.0), center: 0 };
        let tr = propagate(&m, &x, &Quaternion::identity(), &[], 1.0, 10.0).unwrap();
        assert_eq!(tr.len(), 11);
        assert!((tr[10].r - x.r - Vector3::new(10.0, 0.0, 0.0)).norm() < 1e-12 * 1e12);
    }

    #[test]
    fn circular_orbit_closes() {
        let m = NavModel::two_body(MU_EARTH);
        let r = 7.0e6;
        let x = circular(MU_EARTH, r);
        let period = 2.0 * PI * (r.powi(3) / MU_EARTH).sqrt();
        let tr = propagate(&m, &x, &Quaternion::identity(), &[], 1.0, period).unwrap();
        let end = tr.last().unwrap();
        assert!((end.t - period).abs() < 1e-6);
        assert!((end.r - x.r).norm() < 1.0, "{}", (end.r - x.r).norm());
        for s in &tr {
            assert!((s.r.norm() - r).abs() / r < 1e-6);
        }
    }

    #[test]
    fn energy_and_momentum_conserved() {
        let m = NavModel::two_body(MU_EARTH);
        let x = NavState { t: 0.0, r: Vector3::new(7.0e6, 1.0e5, 0.0), v: Vector3::new(100.0, 8.2e3, 900.0), center: 0 };
        let tr = propagate(&m, &x, &Quaternion::identity(), &[], 1.0, 1.0e4).unwrap();
        let e = |s: &NavState| 0.5 * s.v.norm_squared() - MU_EARTH / s.r.norm();
        let h = |s: &NavState| s.r.cross(&s.v);
        let end = tr.last().unwrap();
        assert!(((e(end) - e(&x)) / e(&x)).abs() < 1e-9);
        assert!((h(end) - h(&x)).norm() / h(&x).norm() < 1e-9);
    }

    #[test]
    fn coarse_step_rejected() {
        let m = NavModel::two_body(MU_EARTH);
        let x = NavState { v: Vector3::new(0.0, 9.0e3, 0.0), ..circular(MU_EARTH, 7.0e6) };
        let e = propagate(&m, &x, &Quaternion::identity(), &[], 2000.0, 2.0e4).unwrap_err();
        assert!(matches!(e, NavError::StepUnstable { .. }), "{e:?}");
    }

    #[test]
    fn srp_only_acceleration() {
        let mut m = NavModel::two_body(1e-300);
        m.bodies[0].radius_m = 0.0;
        m.srp = true;
        m.mass_kg = 178.0;
        m.solar = crate::environment::SolarConstants::default();
        m.plates = vec![Plate { area_m2: 1.0, reflectivity: 0.0, normal: -Vector3::x(), center_m: Vector3::zeros() }];
        let x = NavState { t: 0.0, r: Vector3::new(AU, 0.0, 0.0), v: Vector3::zeros(), center: 0 };
        let a = nav_derivative(&m, &x, &Quaternion::identity(), &Vector3::zeros()).unwrap().a;
        assert!((a.norm() - 4.540e-6 / 178.0).abs() < 1e-3 * 2.551e-8);
        assert!(a.x > 0.0);
    }

    #[test]
    fn coincident_body_is_error() {
        let m = NavModel::two_body(1.0);
        let x = NavState { t: 0.0, r: Vector3::zeros(), v: Vector3::zeros(), center: 0 };
        assert!(nav_derivative(&m, &x, &Quaternion::identity(), &Vector3::zeros()).is_err());
        assert!(state_transition_jacobian(&m, &x).is_err());
    }

    #[test]
    fn jacobian_on_axis_and_traceless() {
        let m = NavModel::two_body(MU_EARTH);
        let r = 7.0e6;
        let x = circular(MU_EARTH, r);
        let g = state_transition_jacobian(&m, &x).unwrap().position_partial;
        let k = MU_EARTH / r.powi(3);
        assert!((g - Matrix3::from_diagonal(&Vector3::new(2.0 * k, -k, -k))).norm() < 1e-12 * k);
        assert!(g.trace().abs() < 1e-12);
    }

    fn heliocentric_model() -> NavModel {
        let body = CelestialBody {
            name: "target".into(),
            mu: 5.0e8,
            radius_m: 500.0,
            ephemeris: Ephemeris::Kepler(KeplerElements {
                semi_major_axis_m: 1.4 * AU,
                eccentricity: 0.1,
                inclination_deg: 5.0,
                raan_deg: 30.0,
                arg_periapsis_deg: 40.0,
                mean_anomaly_deg: 10.0,
                epoch_s: 0.0,
                mu_central: MU_SUN,
            }),
        };
        NavModel { bodies: vec![CelestialBody::sun(), body], ..NavModel::two_body(1.0) }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let m = heliocentric_model();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let q = Quaternion::identity();
        for _ in 0..50 {
            let rb = m.bodies[1].position(0.0).unwrap();
            let off = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * 2.0e6;
            let x = NavState { t: 0.0, r: rb + off, v: Vector3::zeros(), center: 0 };
            let g = state_transition_jacobian(&m, &x).unwrap().position_partial;
            let mut fd = Matrix3::zeros();
            for j in 0..3 {
                let h = 1.0;
                let mut xp = x;
                let mut xm = x;
                xp.r[j] += h;
                xm.r[j] -= h;
                let ap = nav_derivative(&m, &xp, &q, &Vector3::zeros()).unwrap().a;
                let am = nav_derivative(&m, &xm, &q, &Vector3::zeros()).unwrap().a;
                fd.set_column(j, &((ap - am) / (2.0 * h)));
            }
            assert!((fd - g).norm() <= 1e-6 * g.norm(), "{}", (fd - g).norm() / g.norm());
        }
    }

    #[test]
    fn switch_round_trip_and_inertial_preservation() {
        let m = heliocentric_model();
        let rb = m.bodies[1].state(1.0e5).unwrap();
        let x = NavState { t: 1.0e5, r: rb.0 + Vector3::new(3.0e5, -2.0e5, 1.0e4), v: rb.1 + Vector3::new(1.0, 2.0, -0.5), center: 0 };
        let y = switch_center(&m, &x, 1).unwrap();
        let z = switch_center(&m, &y, 0).unwrap();
        assert!((z.r - x.r).norm() < 1e-9 * x.r.norm());
        assert!((z.v - x.v).norm() < 1e-9 * x.v.norm());
        let (ri, vi) = m.inertial(&y).unwrap();
        assert!((ri - x.r).norm() <= 1e-9 * x.r.norm());
        assert!((vi - x.v).norm() <= 1e-9 * x.v.norm());
        assert!(matches!(switch_center(&m, &x, 7), Err(NavError::UnknownBody(7))));
        let both = NavModel { bodies: vec![CelestialBody::fixed("a", 1.0, 0.0, Vector3::zeros()), CelestialBody::fixed("b", 1.0, 0.0, Vector3::zeros())], ..NavModel::two_body(1.0) };
        let s = NavState { t: 0.0, r: Vector3::new(1.0, 2.0, 3.0), v: Vector3::new(4.0, 5.0, 6.0), center: 0 };
        let u = switch_center(&both, &s, 1).unwrap();
        assert_eq!((u.r, u.v), (s.r, s.v));
    }

    #[test]
    fn center_switches_with_hysteresis() {
        let m = heliocentric_model();
        let soi = m.bodies[1].sphere_of_influence().unwrap();
        let (rb, vb) = m.bodies[1].state(0.0).unwrap();
        let dir = Vector3::new(1.0, 0.0, 0.0);
        let at = |d: f64, c: usize| {
            let helio = NavState { t: 0.0, r: rb + dir * d, v: vb, center: 0 };
            if c == 0 { helio } else { switch_center(&m, &helio, 1).unwrap() }
        };
        assert_eq!(select_center(&m, &at(soi * 0.97, 0)).unwrap(), 0);
        assert_eq!(select_center(&m, &at(soi * 0.94, 0)).unwrap(), 1);
        assert_eq!(select_center(&m, &at(soi * 1.03, 1)).unwrap(), 1);
        assert_eq!(select_center(&m, &at(soi * 1.06, 1)).unwrap(), 0);
        // a step across the boundary switches and keeps the inertial state
        let x = at(soi * 0.9, 0);
        let y = step_nav(&m, &x, &Quaternion::identity(), &Vector3::zeros(), 1.0).unwrap();
        assert_eq!(y.center, 1);
        assert!((y.r.norm() - soi * 0.9).abs() < 1e3);
    }

    #[test]
    fn mean_thrust_is_exact_impulse() {
        let b = PropulsionCommand { thrust_n: Vector3::new(2.0, 0.0, 0.0), start_s: 0.5, stop_s: 2.25, mass_flow_kg_s: None };
        let total: Vector3<f64> = (0..4).map(|k| b.mean_thrust(k as f64, 1.0)).sum();
        assert!((total.x - 3.5).abs() < 1e-15);
        assert!((b.delta_v(2.0).x - 1.75).abs() < 1e-15);
        assert!(b.validate(1.0).is_err());
        assert!(b.validate(2.0).is_ok());
    }
}
