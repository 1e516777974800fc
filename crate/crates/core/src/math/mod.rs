//! Shared math: typed reference frames, scalar-last quaternions, skew
//! matrices and a fixed-step RK4 integrator over flat state vectors.

mod frames;
mod integrate;
mod quaternion;

pub use frames::{CenterOfMass, Frame, FrameId, Framed, Inertial, Rotation, SmallBody, Spacecraft, Sun};
pub use integrate::{rk4_step, Slot, StateLayout, StateVector};
pub use quaternion::Quaternion;

use nalgebra::{Matrix3, Matrix4, Matrix4x3, Vector3};
use thiserror::Error;

/// Tolerance used when checking unit-norm quaternions and unit vectors.
pub const UNIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MathError {
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("quaternion is not unit norm (|q| = {0})")]
    NotUnit(f64),
    #[error("cannot normalize a zero-length quaternion")]
    ZeroNorm,
    #[error("state layout has {layout} slots but {values} values were supplied")]
    LayoutMismatch { layout: usize, values: usize },
    #[error("time step must be positive, got {0}")]
    BadStep(f64),
}

pub(crate) fn ensure_finite3(v: &Vector3<f64>, what: &str) -> Result<(), MathError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(MathError::NonFinite(what.to_string()))
    }
}

/// Cross-product matrix `x^×` such that `cross_matrix(x) * y == x.cross(y)`.
pub fn cross_matrix(x: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -x.z, x.y, x.z, 0.0, -x.x, -x.y, x.x, 0.0)
}

/// The 4×4 body-rate matrix `Ω(ω) = [[-ω^×, ω], [-ωᵀ, 0]]` acting on
/// scalar-last quaternions.
pub fn omega_matrix(omega: &Vector3<f64>) -> Result<Matrix4<f64>, MathError> {
    ensure_finite3(omega, "body rate")?;
    let w = cross_matrix(omega);
    let mut m = Matrix4::zeros();
    for i in 0..3 {
        for j in 0..3 {
            m[(i, j)] = -w[(i, j)];
        }
        m[(i, 3)] = omega[i];
        m[(3, i)] = -omega[i];
    }
    Ok(m)
}

/// The 4×3 matrix `Ξ(q) = [[q_s I + q_v^×], [-q_vᵀ]]`.
pub fn xi_matrix(q: &Quaternion) -> Result<Matrix4x3<f64>, MathError> {
    let n = q.norm();
    if !n.is_finite() {
        return Err(MathError::NonFinite("quaternion".into()));
    }
    if (n - 1.0).abs() > UNIT_TOLERANCE {
        return Err(MathError::NotUnit(n));
    }
    let top = Matrix3::identity() * q.s + cross_matrix(&q.v);
    let mut m = Matrix4x3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            m[(i, j)] = top[(i, j)];
        }
        m[(3, i)] = -q.v[i];
    }
    Ok(m)
}
