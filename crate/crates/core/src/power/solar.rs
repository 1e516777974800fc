use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{invalid, PowerError};
use crate::environment::{irradiance, Pose, SolarConstants};
use crate::math::{Framed, Inertial, Quaternion, UNIT_TOLERANCE};

/// Current/voltage samples of a solar array, current strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IvcTable {
    pub current_a: Vec<f64>,
    pub voltage_v: Vec<f64>,
}

impl Default for IvcTable {
    fn default() -> Self {
        Self::single_knee(36.0, 8.0, 1.6, 33)
    }
}

impl IvcTable {
    /// Samples `V = V_oc + V_t ln(1 − I/I_sc)` clamped at zero on `n`
    /// evenly spaced currents from 0 to `I_sc`.
    pub fn single_knee(v_oc: f64, i_sc: f64, v_t: f64, n: usize) -> Self {
        let n = n.max(2);
        let mut current_a = Vec::with_capacity(n);
        let mut voltage_v = Vec::with_capacity(n);
        for k in 0..n {
            let i = i_sc * k as f64 / (n - 1) as f64;
            let v = if k == n - 1 { 0.0 } else { (v_oc + v_t * (1.0 - i / i_sc).ln()).max(0.0) };
            current_a.push(i);
            voltage_v.push(v);
        }
        Self { current_a, voltage_v }
    }

    pub fn validate(&self) -> Result<(), PowerError> {
        if self.current_a.len() < 2 || self.current_a.len() != self.voltage_v.len() {
            return Err(invalid("IV table", "needs at least two rows of equal length"));
        }
        if self.current_a[0] != 0.0 {
            return Err(invalid("IV table", "first row must be at zero current"));
        }
        for w in self.current_a.windows(2) {
            if !(w[1] > w[0]) {
                return Err(invalid("IV table", "currents must be strictly increasing"));
            }
        }
        for w in self.voltage_v.windows(2) {
            if w[1] > w[0] {
                return Err(invalid("IV table", "voltage must be non-increasing in current"));
            }
        }
        if self.voltage_v.iter().any(|v| *v < 0.0) {
            return Err(invalid("IV table", "voltages must be non-negative"));
        }
        Ok(())
    }

    pub fn short_circuit_current(&self) -> f64 {
        *self.current_a.last().unwrap_or(&0.0)
    }

    /// Linearly interpolated voltage; zero beyond the last row.
    pub fn voltage(&self, i: f64) -> f64 {
        let c = &self.current_a;
        if i > self.short_circuit_current() {
            return 0.0;
        }
        let k = c.partition_point(|x| *x <= i).clamp(1, c.len() - 1);
        let (i0, i1) = (c[k - 1], c[k]);
        let (v0, v1) = (self.voltage_v[k - 1], self.voltage_v[k]);
        v0 + (v1 - v0) * (i - i0) / (i1 - i0)
    }
}

/// Extra parameters used by the voltage-current array model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HfArrayParams {
    pub occlusion: f64,
    /// Fractional degradation per second, linear.
    pub degradation_per_s: f64,
    pub temp_coefficient_per_k: f64,
    pub reference_temp_k: f64,
    pub design_factor: f64,
    /// Irradiance at which the table was measured, W/m².
    pub reference_irradiance: f64,
    pub ivc: IvcTable,
}

impl Default for HfArrayParams {
    fn default() -> Self {
        Self {
            occlusion: 1.0,
            degradation_per_s: 0.0,
            temp_coefficient_per_k: 0.004,
            reference_temp_k: 301.15,
            design_factor: 1.0,
            reference_irradiance: 1361.0,
            ivc: IvcTable::default(),
        }
    }
}

impl HfArrayParams {
    pub fn validate(&self) -> Result<(), PowerError> {
        if !(self.occlusion > 0.0 && self.occlusion <= 1.0) {
            return Err(invalid("occlusion", "must be in (0, 1]"));
        }
        if !(self.degradation_per_s >= 0.0) {
            return Err(invalid("degradation_per_s", "must be non-negative"));
        }
        if !(self.design_factor > 0.0) || !(self.reference_irradiance > 0.0) {
            return Err(invalid("design_factor/reference_irradiance", "must be positive"));
        }
        self.ivc.validate()
    }

    pub fn degradation(&self, t: f64) -> f64 {
        (1.0 - self.degradation_per_s * t.max(0.0)).max(0.0)
    }

    pub fn thermal_efficiency(&self, temperature_k: f64) -> f64 {
        (1.0 - self.temp_coefficient_per_k * (temperature_k - self.reference_temp_k)).max(0.0)
    }

    fn scale(&self, h: f64, theta: f64, temperature_k: f64, t: f64) -> f64 {
        let illum = (h * theta.cos().max(0.0)) / self.reference_irradiance;
        self.thermal_efficiency(temperature_k) * self.occlusion * self.degradation(t) * self.design_factor * illum
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolarArray {
    pub name: String,
    pub area_m2: f64,
    pub efficiency: f64,
    pub packing: f64,
    /// Unit normal in the spacecraft frame (at zero gimbal angle for wings).
    pub normal: Vector3<f64>,
    pub centroid_m: Vector3<f64>,
    /// Gimbal axis for sun-tracking wings; `None` for body-fixed panels.
    #[serde(default)]
    pub gimbal_axis: Option<Vector3<f64>>,
    #[serde(default)]
    pub hf: HfArrayParams,
}

impl SolarArray {
    pub fn validate(&self) -> Result<(), PowerError> {
        if !(self.area_m2 > 0.0) {
            return Err(invalid(format!("array `{}` area", self.name), "must be positive"));
        }
        for (what, v) in [("efficiency", self.efficiency), ("packing", self.packing)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(invalid(format!("array `{}` {what}", self.name), "must be in (0, 1]"));
            }
        }
        if (self.normal.norm() - 1.0).abs() > UNIT_TOLERANCE {
            return Err(invalid(format!("array `{}` normal", self.name), "must be unit length"));
        }
        if let Some(a) = self.gimbal_axis {
            if (a.norm() - 1.0).abs() > UNIT_TOLERANCE || a.dot(&self.normal).abs() > 1e-9 {
                return Err(invalid(format!("array `{}` gimbal axis", self.name), "must be unit and normal to the panel"));
            }
        }
        self.hf.validate()
    }

    /// Panel normal in the spacecraft frame at gimbal angle `angle`.
    pub fn normal_at(&self, angle: f64) -> Vector3<f64> {
        match self.gimbal_axis {
            Some(a) => Quaternion::from_axis_angle(&a, angle).rotate(&self.normal),
            None => self.normal,
        }
    }

    /// Gimbal angle that best faces the Sun given the Sun direction in the
    /// spacecraft frame. Zero for fixed panels.
    pub fn tracking_angle(&self, sun_body: &Vector3<f64>) -> f64 {
        let Some(a) = self.gimbal_axis else { return 0.0 };
        let s = sun_body - a * a.dot(sun_body);
        if s.norm() < 1e-12 {
            return 0.0;
        }
        let n = self.normal;
        let b = a.cross(&n);
        s.dot(&b).atan2(s.dot(&n))
    }

    pub fn lf_rating(&self) -> f64 {
        self.area_m2 * self.efficiency * self.packing
    }
}

/// Angle between the rotated panel normal and the direction to the Sun.
pub fn incidence_angle(
    normal_body: &Vector3<f64>,
    centroid_body: &Vector3<f64>,
    pose: &Pose,
    sun_position: &Framed<Inertial>,
) -> Result<f64, PowerError> {
    let to_sun = sun_position.v - (pose.position.v + pose.attitude.rotate(centroid_body));
    let d = to_sun.norm();
    if d == 0.0 || !d.is_finite() {
        return Err(PowerError::ZeroSeparation);
    }
    let c = pose.attitude.rotate(normal_body).dot(&(to_sun / d));
    Ok(c.clamp(-1.0, 1.0).acos())
}

/// Generated power summed over arrays using each array's `normal`, rotated
/// by the matching entry of `gimbal_angles` when supplied.
pub fn solar_power_lf(
    k: &SolarConstants,
    arrays: &[SolarArray],
    gimbal_angles: &[f64],
    pose: &Pose,
    sun_position: &Framed<Inertial>,
) -> Result<f64, PowerError> {
    let h = irradiance(k, (pose.position - *sun_position).norm())?;
    let mut p = 0.0;
    for (j, a) in arrays.iter().enumerate() {
        let n = a.normal_at(gimbal_angles.get(j).copied().unwrap_or(0.0));
        let theta = incidence_angle(&n, &a.centroid_m, pose, sun_position)?;
        p += h * a.lf_rating() * theta.cos().max(0.0);
    }
    Ok(p)
}

/// Array voltage at load current `i_load` with the IV table scaled by
/// temperature, occlusion, degradation, design factor and illumination.
pub fn solar_voltage_hf(
    hf: &HfArrayParams,
    h: f64,
    theta: f64,
    temperature_k: f64,
    i_load: f64,
    t: f64,
) -> Result<f64, PowerError> {
    if i_load < 0.0 || i_load.is_nan() {
        return Err(PowerError::NegativeCurrent(i_load));
    }
    Ok(hf.scale(h, theta, temperature_k, t) * hf.ivc.voltage(i_load))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpptPoint {
    pub current_a: f64,
    pub voltage_v: f64,
    pub power_w: f64,
}

/// Maximum of `V·I` over load current by golden-section search.
pub fn mppt_power(hf: &HfArrayParams, h: f64, theta: f64, temperature_k: f64, t: f64) -> MpptPoint {
    let scale = hf.scale(h, theta, temperature_k, t);
    let p = |i: f64| scale * hf.ivc.voltage(i) * i;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, hf.ivc.short_circuit_current());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (p(c), p(d));
    for _ in 0..200 {
        if (b - a) < 1e-12 * (1.0 + b) {
            break;
        }
        // ties move toward the lower current
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = p(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = p(d);
        }
    }
    let i = 0.5 * (a + b);
    let v = scale * hf.ivc.voltage(i);
    MpptPoint { current_a: i, voltage_v: v, power_w: v * i }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::AU;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

    fn sun_on_x() -> (Pose, Framed<Inertial>) {
        (Pose::new(Vector3::new(AU, 0.0, 0.0), Quaternion::identity()), Framed::zeros())
    }

    fn panel(normal: Vector3<f64>) -> SolarArray {
        SolarArray {
            name: "p".into(),
            area_m2: 1.0,
            efficiency: 0.3,
            packing: 0.9,
            normal,
            centroid_m: Vector3::zeros(),
            gimbal_axis: None,
            hf: HfArrayParams::default(),
        }
    }

    #[test]
    fn incidence_basic_geometry() {
        let (pose, sun) = sun_on_x();
        let n = Vector3::new(-1.0, 0.0, 0.0);
        assert!(incidence_angle(&n, &Vector3::zeros(), &pose, &sun).unwrap().abs() < 1e-12);
        let n = Vector3::y();
        assert!((incidence_angle(&n, &Vector3::zeros(), &pose, &sun).unwrap() - FRAC_PI_2).abs() < 1e-12);
        let q = Quaternion::from_axis_angle(&Vector3::z(), FRAC_PI_3);
        let n = q.rotate(&Vector3::new(-1.0, 0.0, 0.0));
        assert!((incidence_angle(&n, &Vector3::zeros(), &pose, &sun).unwrap() - FRAC_PI_3).abs() < 1e-12);
    }

    #[test]
    fn incidence_zero_separation() {
        let pose = Pose::new(Vector3::zeros(), Quaternion::identity());
        let r = incidence_angle(&Vector3::x(), &Vector3::zeros(), &pose, &Framed::zeros());
        assert_eq!(r, Err(PowerError::ZeroSeparation));
    }

    #[test]
    fn lf_power_worked_value() {
        let k = SolarConstants::default();
        let (pose, sun) = sun_on_x();
        let p = solar_power_lf(&k, &[panel(Vector3::new(-1.0, 0.0, 0.0))], &[], &pose, &sun).unwrap();
        let h = irradiance(&k, AU).unwrap();
        assert!((p - h * 0.27).abs() < 1e-12);
        assert!((p - 367.47).abs() < 1e-9);
    }

    #[test]
    fn lf_power_clamps_back_and_edge() {
        let k = SolarConstants::default();
        let (pose, sun) = sun_on_x();
        let edge = solar_power_lf(&k, &[panel(Vector3::y())], &[], &pose, &sun).unwrap();
        assert!(edge.abs() < 1e-12);
        let n = Quaternion::from_axis_angle(&Vector3::z(), 2.0 * PI / 3.0).rotate(&Vector3::new(-1.0, 0.0, 0.0));
        assert_eq!(solar_power_lf(&k, &[panel(n)], &[], &pose, &sun).unwrap(), 0.0);
    }

    #[test]
    fn gimbal_tracking_faces_sun() {
        let mut a = panel(Vector3::z());
        a.gimbal_axis = Some(Vector3::y());
        let sun = Vector3::new(1.0, 0.3, 1.0).normalize();
        let ang = a.tracking_angle(&sun);
        let n = a.normal_at(ang);
        let proj = (sun - Vector3::y() * sun.y).normalize();
        assert!((n - proj).norm() < 1e-12);
    }

    #[test]
    fn hf_voltage_endpoints_and_interpolation() {
        let hf = HfArrayParams {
            ivc: IvcTable { current_a: vec![0.0, 2.0, 4.0], voltage_v: vec![30.0, 26.0, 0.0] },
            temp_coefficient_per_k: 0.0,
            ..Default::default()
        };
        let v0 = solar_voltage_hf(&hf, 1361.0, 0.0, 300.0, 0.0, 0.0).unwrap();
        assert!((v0 - 30.0).abs() < 1e-12);
        let vm = solar_voltage_hf(&hf, 1361.0, 0.0, 300.0, 1.0, 0.0).unwrap();
        assert!((vm - 28.0).abs() < 1e-12);
        let vm = solar_voltage_hf(&hf, 1361.0, 0.0, 300.0, 3.5, 0.0).unwrap();
        assert!((vm - 6.5).abs() < 1e-12);
        assert_eq!(solar_voltage_hf(&hf, 1361.0, 0.0, 300.0, 4.5, 0.0).unwrap(), 0.0);
        assert!(solar_voltage_hf(&hf, 1361.0, 0.0, 300.0, -0.1, 0.0).is_err());
    }

    #[test]
    fn default_table_midpoint_interpolation() {
        let t = IvcTable::default();
        let (i0, i1) = (t.current_a[10], t.current_a[11]);
        let (v0, v1) = (t.voltage_v[10], t.voltage_v[11]);
        assert!((t.voltage(0.5 * (i0 + i1)) - 0.5 * (v0 + v1)).abs() < 1e-12);
    }

    #[test]
    fn mppt_matches_grid_search() {
        let hf = HfArrayParams::default();
        let best = mppt_power(&hf, 1361.0, 0.0, hf.reference_temp_k, 0.0);
        let isc = hf.ivc.short_circuit_current();
        let n = 100_000;
        let grid = (0..=n)
            .map(|k| {
                let i = isc * k as f64 / n as f64;
                solar_voltage_hf(&hf, 1361.0, 0.0, hf.reference_temp_k, i, 0.0).unwrap() * i
            })
            .fold(0.0, f64::max);
        assert!(best.power_w >= grid * (1.0 - 1e-4), "{} vs {grid}", best.power_w);
        assert!(best.power_w <= grid * (1.0 + 1e-4));
    }

    #[test]
    fn mppt_dark_and_occlusion_scaling() {
        let mut hf = HfArrayParams::default();
        assert!(mppt_power(&hf, 1361.0, FRAC_PI_2, 300.0, 0.0).power_w.abs() < 1e-9);
        hf.occlusion = 0.5;
        let half = mppt_power(&hf, 1361.0, 0.0, 300.0, 0.0).power_w;
        hf.occlusion = 1.0;
        let full = mppt_power(&hf, 1361.0, 0.0, 300.0, 0.0).power_w;
        assert!((full - 2.0 * half).abs() < 1e-9 * full);
    }

    #[test]
    fn table_validation() {
        assert!(IvcTable::default().validate().is_ok());
        let bad = IvcTable { current_a: vec![0.0, 1.0], voltage_v: vec![1.0, 2.0] };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn voltage_non_increasing_in_current(a in 0.0..9.0f64, b in 0.0..9.0f64) {
            let hf = HfArrayParams::default();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let vlo = solar_voltage_hf(&hf, 1000.0, 0.2, 310.0, lo, 0.0).unwrap();
            let vhi = solar_voltage_hf(&hf, 1000.0, 0.2, 310.0, hi, 0.0).unwrap();
            prop_assert!(vhi <= vlo + 1e-12);
        }

        #[test]
        fn mppt_non_decreasing_in_irradiance(h1 in 10.0..3000.0f64, dh in 0.0..1000.0f64) {
            let hf = HfArrayParams::default();
            let p1 = mppt_power(&hf, h1, 0.3, 300.0, 0.0).power_w;
            let p2 = mppt_power(&hf, h1 + dh, 0.3, 300.0, 0.0).power_w;
            prop_assert!(p2 >= p1 * (1.0 - 1e-9));
        }

        #[test]
        fn mppt_dominates_samples(i in 0.0..8.0f64) {
            let hf = HfArrayParams::default();
            let best = mppt_power(&hf, 1361.0, 0.1, 300.0, 0.0).power_w;
            let v = solar_voltage_hf(&hf, 1361.0, 0.1, 300.0, i, 0.0).unwrap();
            prop_assert!(best >= v * i * (1.0 - 1e-9));
        }

        #[test]
        fn roll_about_sunline_preserves_power(roll in 0.0..6.3f64) {
            // four panels arranged symmetrically around the sunline
            let k = SolarConstants::default();
            let (pose0, sun) = sun_on_x();
            let tilt = 0.4f64;
            let arrays: Vec<_> = (0..4)
                .map(|j| {
                    let az = j as f64 * FRAC_PI_2;
                    let n = Vector3::new(-tilt.cos(), tilt.sin() * az.cos(), tilt.sin() * az.sin());
                    panel(n)
                })
                .collect();
            let p0 = solar_power_lf(&k, &arrays, &[], &pose0, &sun).unwrap();
            let pose = Pose::new(pose0.position.v, Quaternion::from_axis_angle(&Vector3::x(), roll));
            let p1 = solar_power_lf(&k, &arrays, &[], &pose, &sun).unwrap();
            prop_assert!((p0 - p1).abs() < 1e-9 * p0);
        }
    }
}
