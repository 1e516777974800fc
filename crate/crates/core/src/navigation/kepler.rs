use nalgebra::Vector3;

use super::{invalid, NavError};

pub fn stumpff_c(z: f64) -> f64 {
    if z > 1e-6 {
        (1.0 - z.sqrt().cos()) / z
    } else if z < -1e-6 {
        ((-z).sqrt().cosh() - 1.0) / (-z)
    } else {
        1.0 / 2.0 - z / 24.0 + z * z / 720.0 - z * z * z / 40320.0
    }
}

pub fn stumpff_s(z: f64) -> f64 {
    if z > 1e-6 {
        let s = z.sqrt();
        (s - s.sin()) / (s * s * s)
    } else if z < -1e-6 {
        let s = (-z).sqrt();
        (s.sinh() - s) / (s * s * s)
    } else {
        1.0 / 6.0 - z / 120.0 + z * z / 5040.0 - z * z * z / 362880.0
    }
}

pub fn specific_energy(mu: f64, r: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
    0.5 * v.norm_squared() - mu / r.norm()
}

/// Two-body state after `dt` by the universal-variable Kepler equation,
/// solved with Laguerre iteration.
pub fn kepler_propagate(
    r0: &Vector3<f64>,
    v0: &Vector3<f64>,
    dt: f64,
    mu: f64,
) -> Result<(Vector3<f64>, Vector3<f64>), NavError> {
    let r0n = r0.norm();
    if !(r0n > 0.0) || !(mu > 0.0) {
        return Err(invalid("Kepler propagation", "needs nonzero radius and positive mu"));
    }
    if dt == 0.0 {
        return Ok((*r0, *v0));
    }
    let smu = mu.sqrt();
    let alpha = 2.0 / r0n - v0.norm_squared() / mu;
    let sigma0 = r0.dot(v0) / smu;
    let mut chi = if alpha > 1e-12 {
        smu * dt * alpha
    } else {
        // rough but safe start for parabolic and hyperbolic arcs
        smu * dt / r0n
    };
    let n = 5.0;
    let mut converged = false;
    for _ in 0..200 {
        let z = alpha * chi * chi;
        let (c, s) = (stumpff_c(z), stumpff_s(z));
        let f = sigma0 * chi * chi * c + (1.0 - alpha * r0n) * chi * chi * chi * s + r0n * chi - smu * dt;
        let fp = sigma0 * chi * (1.0 - z * s) + (1.0 - alpha * r0n) * chi * chi * c + r0n;
        let fpp = sigma0 * (1.0 - z * c) + (1.0 - alpha * r0n) * chi * (1.0 - z * s);
        let disc = ((n - 1.0) * (n - 1.0) * fp * fp - n * (n - 1.0) * f * fpp).abs().sqrt();
        let denom = if fp >= 0.0 { fp + disc } else { fp - disc };
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        let delta = n * f / denom;
        chi -= delta;
        if delta.abs() <= 1e-13 * chi.abs().max(1e-300) {
            converged = true;
            break;
        }
    }
    if !converged || !chi.is_finite() {
        return Err(NavError::KeplerNoConvergence { dt });
    }
    let z = alpha * chi * chi;
    let (c, s) = (stumpff_c(z), stumpff_s(z));
    let f = 1.0 - chi * chi / r0n * c;
    let g = dt - chi * chi * chi / smu * s;
    let r = r0 * f + v0 * g;
    let rn = r.norm();
    let fdot = smu / (rn * r0n) * (alpha * chi * chi * chi * s - chi);
    let gdot = 1.0 - chi * chi / rn * c;
    Ok((r, r0 * fdot + v0 * gdot))
}
