//! Zero-revolution Lambert solver in the Lancaster–Blanchard `(λ, x)` form
//! with Householder iteration and a bisection fallback.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{invalid, NavError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferDirection {
    /// Angular momentum along the reference normal (+z unless a plane hint
    /// is given).
    Prograde,
    Retrograde,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambertSolution {
    pub v1: Vector3<f64>,
    pub v2: Vector3<f64>,
    pub iterations: usize,
}

const MAX_HOUSEHOLDER: usize = 25;
const X_TOL: f64 = 1e-14;

fn hypergeometric(z: f64) -> f64 {
    let (mut sj, mut cj) = (1.0, 1.0);
    let mut j = 0.0;
    loop {
        cj *= (3.0 + j) * (1.0 + j) / (2.5 + j) * z / (j + 1.0);
        sj += cj;
        j += 1.0;
        if cj.abs() < 1e-15 || j > 1000.0 {
            return sj;
        }
    }
}

fn tof_lagrange(x: f64, lambda: f64) -> f64 {
    let a = 1.0 / (1.0 - x * x);
    if a > 0.0 {
        let alfa = 2.0 * x.acos();
        let mut beta = 2.0 * (lambda * lambda / a).sqrt().asin();
        if lambda < 0.0 {
            beta = -beta;
        }
        a * a.sqrt() * ((alfa - alfa.sin()) - (beta - beta.sin())) / 2.0
    } else {
        let alfa = 2.0 * x.acosh();
        let mut beta = 2.0 * (-lambda * lambda / a).sqrt().asinh();
        if lambda < 0.0 {
            beta = -beta;
        }
        -a * (-a).sqrt() * ((beta - beta.sinh()) - (alfa - alfa.sinh())) / 2.0
    }
}

/// Non-dimensional time of flight as a function of `x`.
fn tof(x: f64, lambda: f64) -> f64 {
    let dist = (x - 1.0).abs();
    if dist > 0.01 && dist < 0.2 {
        return tof_lagrange(x, lambda);
    }
    let k = lambda * lambda;
    let e = x * x - 1.0;
    let z = (1.0 + k * e).sqrt();
    if dist <= 0.01 {
        let eta = z - lambda * x;
        let s1 = 0.5 * (1.0 - lambda - x * eta);
        let q = 4.0 / 3.0 * hypergeometric(s1);
        return (eta * eta * eta * q + 4.0 * lambda * eta) / 2.0;
    }
    let y = e.abs().sqrt();
    let g = x * z - lambda * e;
    let d = if e < 0.0 { g.clamp(-1.0, 1.0).acos() } else { (y * (z - lambda * x) + g).ln() };
    (x - lambda * z - d / y) / e
}

fn tof_derivatives(x: f64, t: f64, lambda: f64) -> (f64, f64, f64) {
    let l2 = lambda * lambda;
    let l3 = l2 * lambda;
    let umx2 = 1.0 - x * x;
    let y = (1.0 - l2 * umx2).sqrt();
    let (y2, y3) = (y * y, y * y * y);
    let d1 = (3.0 * t * x - 2.0 + 2.0 * l3 * x / y) / umx2;
    let d2 = (3.0 * t + 5.0 * x * d1 + 2.0 * (1.0 - l2) * l3 / y3) / umx2;
    let d3 = (7.0 * x * d2 + 8.0 * d1 - 6.0 * (1.0 - l2) * l2 * l3 * x / y3 / y2) / umx2;
    (d1, d2, d3)
}

fn initial_guess(t: f64, lambda: f64) -> f64 {
    let t0 = lambda.acos() + lambda * (1.0 - lambda * lambda).sqrt();
    let t1 = 2.0 / 3.0 * (1.0 - lambda * lambda * lambda);
    if t >= t0 {
        (t0 / t).powf(2.0 / 3.0) - 1.0
    } else if t < t1 {
        2.5 * t1 / t * (t1 - t) / (1.0 - lambda.powi(5)) + 1.0
    } else {
        (t0 / t).powf((t1 / t0).log2()) - 1.0
    }
}

fn householder(t: f64, lambda: f64) -> Option<(f64, usize)> {
    let mut x = initial_guess(t, lambda);
    for it in 1..=MAX_HOUSEHOLDER {
        let ti = tof(x, lambda);
        let (d1, d2, d3) = tof_derivatives(x, ti, lambda);
        let delta = ti - t;
        let d1s = d1 * d1;
        let next = x - delta * (d1s - delta * d2 / 2.0) / (d1 * (d1s - delta * d2) + d3 * delta * delta / 6.0);
        if !next.is_finite() || next <= -1.0 {
            return None;
        }
        let err = (next - x).abs();
        x = next;
        if err < X_TOL * x.abs().max(1.0) {
            return Some((x, it));
        }
    }
    None
}

/// Bisection on the monotone map `x ↦ T(x)` over `(−1, ∞)`.
fn bisect(t: f64, lambda: f64) -> Option<(f64, usize)> {
    let mut lo = -1.0 + 1e-15;
    let mut hi = 1.0;
    let mut n = 0;
    while tof(hi, lambda) > t {
        hi = 2.0 * hi + 1.0;
        n += 1;
        if n > 200 {
            return None;
        }
    }
    for k in 0..400 {
        let mid = 0.5 * (lo + hi);
        if tof(mid, lambda) > t {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
            return Some((0.5 * (lo + hi), n + k + 1));
        }
    }
    None
}

/// Velocities at `r1` and `r2` of the conic joining them in `tof` seconds.
/// `plane_normal` fixes the transfer plane for collinear geometry and
/// overrides +z as the prograde reference.
pub fn lambert_solve(
    r1: &Vector3<f64>,
    r2: &Vector3<f64>,
    tof_s: f64,
    mu: f64,
    direction: TransferDirection,
    plane_normal: Option<&Vector3<f64>>,
) -> Result<LambertSolution, NavError> {
    if !(tof_s > 0.0) {
        return Err(NavError::LambertDegenerate(format!("time of flight {tof_s} s must be positive")));
    }
    if !(mu > 0.0) {
        return Err(invalid("mu", "must be positive"));
    }
    let (r1n, r2n) = (r1.norm(), r2.norm());
    if !(r1n > 0.0 && r2n > 0.0) {
        return Err(NavError::LambertDegenerate("position at the center".into()));
    }
    let c = (r2 - r1).norm();
    if c <= 1e-14 * r1n.max(r2n) {
        return Err(NavError::LambertDegenerate("identical endpoints".into()));
    }
    let (ir1, ir2) = (r1 / r1n, r2 / r2n);
    let cross = ir1.cross(&ir2);
    let s = (r1n + r2n + c) / 2.0;
    let mut lambda = (1.0 - c / s).max(0.0).sqrt();
    let reference = plane_normal.copied().unwrap_or_else(Vector3::z);
    let want_positive = direction == TransferDirection::Prograde;
    let h = if cross.norm() < 1e-12 {
        if ir1.dot(&ir2) > 0.0 {
            return Err(NavError::LambertDegenerate("zero transfer angle".into()));
        }
        let Some(n) = plane_normal else {
            return Err(NavError::LambertDegenerate("collinear endpoints need a transfer-plane normal".into()));
        };
        let n = n - ir1 * n.dot(&ir1);
        if n.norm() == 0.0 {
            return Err(NavError::LambertDegenerate("plane normal parallel to r1".into()));
        }
        let n = n.normalize();
        if want_positive { n } else { -n }
    } else {
        let ih = cross.normalize();
        if (ih.dot(&reference) >= 0.0) == want_positive {
            ih
        } else {
            lambda = -lambda;
            -ih
        }
    };
    let (it1, it2) = (h.cross(&ir1), h.cross(&ir2));
    let t = (2.0 * mu / (s * s * s)).sqrt() * tof_s;
    let (x, iterations) = match householder(t, lambda).or_else(|| bisect(t, lambda)) {
        Some(v) => v,
        None => {
            let x = initial_guess(t, lambda);
            return Err(NavError::LambertNoConvergence { iterations: MAX_HOUSEHOLDER, residual: (tof(x, lambda) - t).abs() });
        }
    };
    let gamma = (mu * s / 2.0).sqrt();
    let rho = (r1n - r2n) / c;
    let sigma = (1.0 - rho * rho).max(0.0).sqrt();
    let y = (1.0 - lambda * lambda + lambda * lambda * x * x).sqrt();
    let vr1 = gamma * ((lambda * y - x) - rho * (lambda * y + x)) / r1n;
    let vr2 = -gamma * ((lambda * y - x) + rho * (lambda * y + x)) / r2n;
    let vt = gamma * sigma * (y + lambda * x);
    let v1 = ir1 * vr1 + it1 * (vt / r1n);
    let v2 = ir2 * vr2 + it2 * (vt / r2n);
    if !(v1.iter().chain(v2.iter()).all(|v| v.is_finite())) {
        return Err(NavError::LambertNoConvergence { iterations, residual: f64::NAN });
    }
    Ok(LambertSolution { v1, v2, iterations })
}
