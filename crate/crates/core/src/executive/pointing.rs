use nalgebra::{Matrix3, Vector3};

use crate::math::Quaternion;

fn triad(p: &Vector3<f64>, s: &Vector3<f64>) -> Matrix3<f64> {
    let t1 = p.normalize();
    let mut t2 = t1.cross(s);
    if t2.norm() < 1e-9 {
        let trial = if t1.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        t2 = t1.cross(&trial);
    }
    let t2 = t2.normalize();
    Matrix3::from_columns(&[t1, t2, t1.cross(&t2)])
}

/// Body-to-inertial attitude placing `primary_body` exactly on
/// `primary_inertial` and `secondary_body` as close as possible to
/// `secondary_inertial`.
pub fn two_axis_attitude(
    primary_body: &Vector3<f64>,
    primary_inertial: &Vector3<f64>,
    secondary_body: &Vector3<f64>,
    secondary_inertial: &Vector3<f64>,
) -> Quaternion {
    let b = triad(primary_body, secondary_body);
    let i = triad(primary_inertial, secondary_inertial);
    Quaternion::from_rotation_matrix(&(i * b.transpose())).properized()
}
