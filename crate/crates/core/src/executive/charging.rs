use std::collections::HashMap;
use std::sync::OnceLock;

use nalgebra::Vector3;

use super::{invalid, ExecError};
use crate::environment::{irradiance, Pose, SolarConstants};
use crate::math::{Framed, Quaternion};
use crate::power::{solar_power_lf, SolarArray};

const ROLLS: usize = 36;
const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Unit vertices of an icosahedron subdivided `level` times.
pub fn icosphere(level: u32) -> Vec<Vector3<f64>> {
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vector3<f64>> = [
        (-1.0, p, 0.0), (1.0, p, 0.0), (-1.0, -p, 0.0), (1.0, -p, 0.0),
        (0.0, -1.0, p), (0.0, 1.0, p), (0.0, -1.0, -p), (0.0, 1.0, -p),
        (p, 0.0, -1.0), (p, 0.0, 1.0), (-p, 0.0, -1.0), (-p, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vector3<f64>>| {
            *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push((verts[a] + verts[b]).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    verts
}

fn grid() -> &'static [Quaternion] {
    static GRID: OnceLock<Vec<Quaternion>> = OnceLock::new();
    GRID.get_or_init(|| {
        let mut out = Vec::new();
        for d in icosphere(3) {
            let base = Quaternion::shortest_arc(&Vector3::z(), &d);
            for k in 0..ROLLS {
                let roll = Quaternion::from_axis_angle(&Vector3::z(), std::f64::consts::TAU * k as f64 / ROLLS as f64);
                out.push(base.mul(&roll));
            }
        }
        out
    })
}

/// Attitude trade between solar power and pointing `pointing_axis` at the
/// target: `J = w·P/P_max + (1 − w)·cos(error)`. `P_max` is the power with
/// every array normal to the Sun.
#[derive(Debug, Clone, Copy)]
pub struct ChargingProblem<'a> {
    pub solar: &'a SolarConstants,
    pub arrays: &'a [SolarArray],
    pub position: Vector3<f64>,
    pub sun_position: Vector3<f64>,
    /// Inertial unit vector toward the pointing target.
    pub target_direction: Vector3<f64>,
    pub pointing_axis: Vector3<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChargingSolution {
    pub q: Quaternion,
    pub score: f64,
    pub power_w: f64,
    pub power_max_w: f64,
    pub pointing_error_rad: f64,
    pub gimbal_angles: Vec<f64>,
}

struct Eval {
    score: f64,
    power: f64,
    error: f64,
}

impl ChargingProblem<'_> {
    fn validate(&self) -> Result<(), ExecError> {
        if !(0.0..=1.0).contains(&self.weight) {
            return Err(invalid("charging weight", "must lie in [0, 1]"));
        }
        if self.arrays.is_empty() {
            return Err(invalid("charging arrays", "need at least one array"));
        }
        if !(self.target_direction.norm() > 0.0) || !(self.pointing_axis.norm() > 0.0) {
            return Err(invalid("charging pointing", "target and axis must be non-zero"));
        }
        if !((self.sun_position - self.position).norm() > 0.0) {
            return Err(invalid("charging geometry", "spacecraft coincides with the Sun"));
        }
        Ok(())
    }

    fn power_max(&self) -> Result<f64, ExecError> {
        let h = irradiance(self.solar, (self.sun_position - self.position).norm())
            .map_err(|e| invalid("charging irradiance", e.to_string()))?;
        Ok(h * self.arrays.iter().map(SolarArray::lf_rating).sum::<f64>())
    }

    pub fn gimbal_angles(&self, q: &Quaternion) -> Vec<f64> {
        let sun_body = q.inverse_rotate(&(self.sun_position - self.position));
        self.arrays.iter().map(|a| a.tracking_angle(&sun_body)).collect()
    }

    fn eval(&self, q: &Quaternion, p_max: f64) -> Eval {
        let angles = self.gimbal_angles(q);
        let pose = Pose::new(self.position, *q);
        let power = solar_power_lf(self.solar, self.arrays, &angles, &pose, &Framed::new(self.sun_position)).unwrap_or(0.0);
        let c = q
            .rotate(&self.pointing_axis.normalize())
            .dot(&self.target_direction.normalize())
            .clamp(-1.0, 1.0);
        Eval { score: self.weight * power / p_max + (1.0 - self.weight) * c, power, error: c.acos() }
    }
}

fn golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = f(x1);
        }
    }
    if f1 > f2 { (x1, f1) } else { (x2, f2) }
}

/// Grid search over attitudes followed by golden-section refinement of
/// small body-axis rotations from the best few grid points.
pub fn charging_attitude(problem: &ChargingProblem) -> Result<ChargingSolution, ExecError> {
    problem.validate()?;
    let p_max = problem.power_max()?;
    let mut scored: Vec<(f64, usize)> = grid().iter().enumerate().map(|(i, q)| (problem.eval(q, p_max).score, i)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut best: Option<(f64, Quaternion)> = None;
    for &(score0, i) in scored.iter().take(3) {
        let mut q = grid()[i];
        let mut score = score0;
        let mut span = 10f64.to_radians();
        for _ in 0..8 {
            for axis in [Vector3::x(), Vector3::y(), Vector3::z()] {
                let trial = |d: f64| q.mul(&Quaternion::from_axis_angle(&axis, d));
                let (d, s) = golden_max(|d| problem.eval(&trial(d), p_max).score, -span, span, 1e-7);
                if s > score {
                    q = trial(d).normalized().unwrap_or(q);
                    score = s;
                }
            }
            span *= 0.5;
        }
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, q));
        }
    }
    let (_, q) = best.expect("grid is non-empty");
    let q = q.properized();
    let e = problem.eval(&q, p_max);
    Ok(ChargingSolution {
        q,
        score: e.score,
        power_w: e.power,
        power_max_w: p_max,
        pointing_error_rad: e.error,
        gimbal_angles: problem.gimbal_angles(&q),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::power::HfArrayParams;

    const AU: f64 = 1.495978707e11;

    fn array(name: &str, normal: Vector3<f64>, gimbal: Option<Vector3<f64>>, area: f64) -> SolarArray {
        SolarArray {
            name: name.into(),
            area_m2: area,
            efficiency: 0.28,
            packing: 0.9,
            normal,
            centroid_m: Vector3::zeros(),
            gimbal_axis: gimbal,
            hf: HfArrayParams::default(),
        }
    }

    fn problem<'a>(k: &'a SolarConstants, arrays: &'a [SolarArray], w: f64) -> ChargingProblem<'a> {
        ChargingProblem {
            solar: k,
            arrays,
            position: Vector3::new(1.4 * AU, 0.0, 0.0),
            sun_position: Vector3::zeros(),
            target_direction: Vector3::new(0.0, 1.0, 0.3).normalize(),
            pointing_axis: Vector3::z(),
            weight: w,
        }
    }

    #[test]
    fn icosphere_counts() {
        for (level, n) in [(0, 12), (1, 42), (2, 162), (3, 642)] {
            let v = icosphere(level);
            assert_eq!(v.len(), n);
            assert!(v.iter().all(|p| (p.norm() - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn pure_pointing_is_exact() {
        let k = SolarConstants::default();
        let arrays = [array("wing", Vector3::x(), Some(Vector3::y()), 4.0)];
        let p = problem(&k, &arrays, 0.0);
        let s = charging_attitude(&p).unwrap();
        assert!(s.pointing_error_rad.to_degrees() < 0.1, "{}", s.pointing_error_rad.to_degrees());
    }

    #[test]
    fn pure_power_reaches_the_bound() {
        // A y-gimballed +x wing and a +x panel can both face the Sun at once,
        // so the optimum equals H times the total rating.
        let k = SolarConstants::default();
        let arrays = [
            array("wing", Vector3::x(), Some(Vector3::y()), 4.0),
            array("panel", Vector3::x(), None, 1.0),
        ];
        let p = problem(&k, &arrays, 1.0);
        let s = charging_attitude(&p).unwrap();
        let h = k.h0 * (k.r0 / (1.4 * AU)).powi(2);
        let bound = h * (4.0 + 1.0) * 0.28 * 0.9;
        assert!((s.power_max_w - bound).abs() < 1e-9 * bound);
        assert!(s.power_w > (1.0 - 1e-4) * bound, "{} vs {bound}", s.power_w);
    }

    #[test]
    fn trade_sits_between_extremes() {
        let k = SolarConstants::default();
        let arrays = [array("panel", Vector3::x(), None, 2.0)];
        let power = charging_attitude(&problem(&k, &arrays, 1.0)).unwrap();
        let point = charging_attitude(&problem(&k, &arrays, 0.0)).unwrap();
        let mid = charging_attitude(&problem(&k, &arrays, 0.5)).unwrap();
        assert!(mid.power_w <= power.power_w + 1e-6 && mid.power_w >= point.power_w - 1e-6);
        assert!(mid.pointing_error_rad <= power.pointing_error_rad + 1e-6);
        assert!(charging_attitude(&problem(&k, &arrays, 1.5)).is_err());
    }
}
