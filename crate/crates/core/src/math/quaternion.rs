use nalgebra::{Matrix3, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use super::{cross_matrix, MathError};

/// Hamilton quaternion stored scalar-last as `[q_v, q_s]`.
///
/// An attitude quaternion `q` maps body-frame vectors into the inertial
/// frame: `v_i = q ⊗ v_b ⊗ q*`, and its kinematics are `q̇ = ½ q ⊗ ω_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub v: Vector3<f64>,
    pub s: f64,
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::identity()
    }
}

impl Quaternion {
    pub fn new(v: Vector3<f64>, s: f64) -> Self {
        Self { v, s }
    }

    pub fn identity() -> Self {
        Self { v: Vector3::zeros(), s: 1.0 }
    }

    /// `[x, y, z, w]` order.
    pub fn from_slice(q: &[f64]) -> Self {
        Self { v: Vector3::new(q[0], q[1], q[2]), s: q[3] }
    }

    pub fn to_vector4(&self) -> Vector4<f64> {
        Vector4::new(self.v.x, self.v.y, self.v.z, self.s)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.v.x, self.v.y, self.v.z, self.s]
    }

    /// Rotation by `angle` about `axis`. A zero axis yields identity.
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::identity();
        }
        let half = 0.5 * angle;
        Self { v: axis * (half.sin() / n), s: half.cos() }
    }

    /// Exponential map of a rotation vector.
    pub fn from_rotation_vector(phi: &Vector3<f64>) -> Self {
        Self::from_axis_angle(phi, phi.norm())
    }

    pub fn norm(&self) -> f64 {
        (self.v.norm_squared() + self.s * self.s).sqrt()
    }

    pub fn normalized(&self) -> Result<Self, MathError> {
        let n = self.norm();
        if !n.is_finite() {
            return Err(MathError::NonFinite("quaternion".into()));
        }
        if n == 0.0 {
            return Err(MathError::ZeroNorm);
        }
        Ok(Self { v: self.v / n, s: self.s / n })
    }

    /// Flip sign so that `q_s ≥ 0`. When `q_s` is zero the largest-magnitude
    /// vector component is made positive so the antipodal case is unique.
    pub fn properized(&self) -> Self {
        const ZERO: f64 = 1e-15;
        let flip = if self.s.abs() > ZERO {
            self.s < 0.0
        } else {
            let i = self.v.iamax();
            self.v[i] < 0.0
        };
        if flip {
            Self { v: -self.v, s: -self.s }
        } else {
            *self
        }
    }

    pub fn conjugate(&self) -> Self {
        Self { v: -self.v, s: self.s }
    }

    /// Inverse of a unit quaternion.
    pub fn inverse(&self) -> Self {
        self.conjugate()
    }

    /// Hamilton product `self ⊗ rhs`.
    pub fn mul(&self, rhs: &Quaternion) -> Quaternion {
        Quaternion {
            v: rhs.v * self.s + self.v * rhs.s + self.v.cross(&rhs.v),
            s: self.s * rhs.s - self.v.dot(&rhs.v),
        }
    }

    /// Rotate a vector from the body frame into the reference frame.
    pub fn rotate(&self, x: &Vector3<f64>) -> Vector3<f64> {
        let t = self.v.cross(x) * 2.0;
        x + t * self.s + self.v.cross(&t)
    }

    /// Rotate a reference-frame vector into the body frame.
    pub fn inverse_rotate(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.conjugate().rotate(x)
    }

    /// Direction cosine matrix mapping body vectors into the reference frame.
    pub fn to_rotation_matrix(&self) -> Matrix3<f64> {
        let v = self.v;
        let s = self.s;
        Matrix3::identity() * (s * s - v.dot(&v)) + v * v.transpose() * 2.0 + cross_matrix(&v) * (2.0 * s)
    }

    /// Shepperd's method; result is properized.
    pub fn from_rotation_matrix(r: &Matrix3<f64>) -> Self {
        let tr = r.trace();
        let d = [r[(0, 0)], r[(1, 1)], r[(2, 2)]];
        let q = if tr >= d[0] && tr >= d[1] && tr >= d[2] {
            let s = 0.5 * (1.0 + tr).sqrt();
            let f = 0.25 / s;
            Quaternion::new(
                Vector3::new((r[(2, 1)] - r[(1, 2)]) * f, (r[(0, 2)] - r[(2, 0)]) * f, (r[(1, 0)] - r[(0, 1)]) * f),
                s,
            )
        } else if d[0] >= d[1] && d[0] >= d[2] {
            let x = 0.5 * (1.0 + 2.0 * d[0] - tr).sqrt();
            let f = 0.25 / x;
            Quaternion::new(
                Vector3::new(x, (r[(0, 1)] + r[(1, 0)]) * f, (r[(0, 2)] + r[(2, 0)]) * f),
                (r[(2, 1)] - r[(1, 2)]) * f,
            )
        } else if d[1] >= d[2] {
            let y = 0.5 * (1.0 + 2.0 * d[1] - tr).sqrt();
            let f = 0.25 / y;
            Quaternion::new(
                Vector3::new((r[(0, 1)] + r[(1, 0)]) * f, y, (r[(1, 2)] + r[(2, 1)]) * f),
                (r[(0, 2)] - r[(2, 0)]) * f,
            )
        } else {
            let z = 0.5 * (1.0 + 2.0 * d[2] - tr).sqrt();
            let f = 0.25 / z;
            Quaternion::new(
                Vector3::new((r[(0, 2)] + r[(2, 0)]) * f, (r[(1, 2)] + r[(2, 1)]) * f, z),
                (r[(1, 0)] - r[(0, 1)]) * f,
            )
        };
        q.properized()
    }

    /// Rotation angle in `[0, π]` of the (properized) quaternion.
    pub fn angle(&self) -> f64 {
        let p = self.properized();
        2.0 * p.v.norm().atan2(p.s)
    }

    /// Unit rotation axis, or `None` for (numerically) zero rotation.
    pub fn axis(&self) -> Option<Vector3<f64>> {
        let p = self.properized();
        let n = p.v.norm();
        if n < 1e-15 {
            None
        } else {
            Some(p.v / n)
        }
    }

    /// Smallest rotation angle between two attitudes.
    pub fn angle_to(&self, other: &Quaternion) -> f64 {
        self.inverse().mul(other).angle()
    }

    /// Rotation vector (axis × angle) of the properized quaternion.
    pub fn to_rotation_vector(&self) -> Vector3<f64> {
        match self.axis() {
            Some(a) => a * self.angle(),
            None => Vector3::zeros(),
        }
    }

    /// Shortest-arc rotation taking unit vector `from` onto unit vector `to`.
    pub fn shortest_arc(from: &Vector3<f64>, to: &Vector3<f64>) -> Self {
        let a = from.normalize();
        let b = to.normalize();
        let c = a.dot(&b);
        if c < -1.0 + 1e-12 {
            // antiparallel: rotate π about any perpendicular axis
            let trial = if a.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
            let axis = a.cross(&trial).normalize();
            return Quaternion::new(axis, 0.0);
        }
        let axis = a.cross(&b);
        Quaternion::new(axis, 1.0 + c).normalized().unwrap_or_default()
    }

    pub fn is_finite(&self) -> bool {
        self.s.is_finite() && self.v.iter().all(|x| x.is_finite())
    }
}
