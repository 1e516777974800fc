//! Deep-space link budget, supportable data rate, Go-Back-N ARQ throughput
//! and the onboard data buffer.

mod buffer;

pub use buffer::{DataBuffer, DrainReport, IngestReport};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const BOLTZMANN_DBW: f64 = -228.6;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CommsError {
    #[error("range must be positive, got {0} m")]
    BadRange(f64),
    #[error("link unusable: frame success probability {0} leaves zero throughput")]
    LinkUnusable(f64),
    #[error("invalid {what}: {why}")]
    Invalid { what: String, why: String },
}

pub(crate) fn invalid(what: impl Into<String>, why: impl Into<String>) -> CommsError {
    CommsError::Invalid { what: what.into(), why: why.into() }
}

pub fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedLoss {
    pub name: String,
    pub db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBudget {
    pub tx_power_w: f64,
    pub tx_gain_db: f64,
    pub line_loss_db: f64,
    pub g_over_t_db_k: f64,
    pub frequency_hz: f64,
    pub beamwidth_deg: f64,
    /// Atmospheric, polarization, implementation and similar fixed losses.
    #[serde(default)]
    pub other_losses: Vec<NamedLoss>,
    pub margin_db: f64,
    pub required_ebn0_db: f64,
    #[serde(default)]
    pub coding_gain_db: f64,
    pub max_rate_bps: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            tx_power_w: 50.0,
            tx_gain_db: 28.1,
            line_loss_db: 1.0,
            g_over_t_db_k: 40.0,
            frequency_hz: 8.45e9,
            beamwidth_deg: 0.1,
            other_losses: vec![
                NamedLoss { name: "atmospheric".into(), db: 0.3 },
                NamedLoss { name: "polarization".into(), db: 0.2 },
                NamedLoss { name: "implementation".into(), db: 1.0 },
            ],
            margin_db: 3.0,
            required_ebn0_db: 4.2,
            coding_gain_db: 7.3,
            max_rate_bps: 8.0e6,
        }
    }
}

impl LinkBudget {
    pub fn validate(&self) -> Result<(), CommsError> {
        if !(self.tx_power_w > 0.0) {
            return Err(invalid("tx_power_w", "must be positive"));
        }
        if !(self.frequency_hz > 0.0) || !(self.beamwidth_deg > 0.0) {
            return Err(invalid("frequency/beamwidth", "must be positive"));
        }
        if !(self.margin_db >= 0.0) {
            return Err(invalid("margin_db", "must be non-negative"));
        }
        if !(self.max_rate_bps > 0.0) {
            return Err(invalid("max_rate_bps", "must be positive"));
        }
        if self.other_losses.iter().any(|l| !(l.db >= 0.0)) {
            return Err(invalid("other_losses", "losses must be non-negative dB"));
        }
        Ok(())
    }

    pub fn eirp_dbw(&self) -> f64 {
        db(self.tx_power_w) + self.tx_gain_db - self.line_loss_db
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency_hz
    }
}

/// `C/N0 = EIRP + G/T − L − k`, all in dB.
pub fn cn0_db(eirp_dbw: f64, g_over_t: f64, total_loss_db: f64) -> f64 {
    eirp_dbw + g_over_t - total_loss_db - BOLTZMANN_DBW
}

pub fn free_space_loss_db(range_m: f64, wavelength_m: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * range_m / wavelength_m).log10()
}

/// Gaussian-beam pointing loss, `12 (θ / θ_3dB)²` dB.
pub fn pointing_loss_db(error_rad: f64, beamwidth_deg: f64) -> f64 {
    12.0 * (error_rad.to_degrees() / beamwidth_deg).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkReport {
    pub eirp_dbw: f64,
    pub free_space_loss_db: f64,
    pub pointing_loss_db: f64,
    pub other_loss_db: f64,
    pub total_loss_db: f64,
    pub cn0_db_hz: f64,
}

pub fn carrier_to_noise(budget: &LinkBudget, range_m: f64, pointing_error_rad: f64) -> Result<LinkReport, CommsError> {
    if !(range_m > 0.0) {
        return Err(CommsError::BadRange(range_m));
    }
    let fsl = free_space_loss_db(range_m, budget.wavelength_m());
    let pl = pointing_loss_db(pointing_error_rad, budget.beamwidth_deg);
    let other: f64 = budget.other_losses.iter().map(|l| l.db).sum();
    let total = fsl + pl + other;
    let eirp = budget.eirp_dbw();
    Ok(LinkReport {
        eirp_dbw: eirp,
        free_space_loss_db: fsl,
        pointing_loss_db: pl,
        other_loss_db: other,
        total_loss_db: total,
        cn0_db_hz: cn0_db(eirp, budget.g_over_t_db_k, total),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateReport {
    pub rate_db_hz: f64,
    pub rate_bps: f64,
    pub clamped: bool,
}

/// `R_b = C/N0 − Eb/N0 + G_c − M` in dB-Hz, converted and clamped.
pub fn supportable_data_rate(cn0_db_hz: f64, budget: &LinkBudget) -> RateReport {
    let rate_db = cn0_db_hz - budget.required_ebn0_db + budget.coding_gain_db - budget.margin_db;
    let raw = from_db(rate_db);
    RateReport { rate_db_hz: rate_db, rate_bps: raw.min(budget.max_rate_bps), clamped: raw > budget.max_rate_bps }
}

/// Frame error rate versus Eb/N0, linearly interpolated and held flat
/// beyond the table ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FerTable {
    pub ebn0_db: Vec<f64>,
    pub fer: Vec<f64>,
}

impl FerTable {
    /// Waterfall `1 / (1 + exp((x − x50)/w))` sampled every 0.25 dB, with
    /// `x50` placed so the curve passes through `fer_at_op` at `op_db`.
    pub fn sigmoid(op_db: f64, fer_at_op: f64, width_db: f64) -> Self {
        let x50 = op_db - width_db * (1.0 / fer_at_op - 1.0).ln();
        let xs: Vec<f64> = (-32..=32).map(|k| op_db + 0.25 * k as f64).collect();
        let fer = xs.iter().map(|x| 1.0 / (1.0 + ((x - x50) / width_db).exp())).collect();
        Self { ebn0_db: xs, fer }
    }

    pub fn error_free() -> Self {
        Self { ebn0_db: vec![0.0], fer: vec![0.0] }
    }

    pub fn validate(&self) -> Result<(), CommsError> {
        if self.ebn0_db.is_empty() || self.ebn0_db.len() != self.fer.len() {
            return Err(invalid("FER table", "needs equal, non-zero numbers of points"));
        }
        if self.ebn0_db.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("FER table", "Eb/N0 points must increase"));
        }
        if self.fer.windows(2).any(|w| w[1] > w[0]) {
            return Err(invalid("FER table", "FER must be non-increasing"));
        }
        if self.fer.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(invalid("FER table", "FER values must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (xs, fs) = (&self.ebn0_db, &self.fer);
        if x.is_nan() || x <= xs[0] {
            return fs[0];
        }
        let n = xs.len();
        if x >= xs[n - 1] {
            return fs[n - 1];
        }
        let i = xs.partition_point(|v| *v <= x) - 1;
        let u = (x - xs[i]) / (xs[i + 1] - xs[i]);
        fs[i] + u * (fs[i + 1] - fs[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArqConfig {
    pub window: u32,
    pub ack_fer: f64,
    pub fer: FerTable,
}

impl ArqConfig {
    pub fn validate(&self) -> Result<(), CommsError> {
        if self.window < 1 {
            return Err(invalid("ARQ window", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.ack_fer) {
            return Err(invalid("ack_fer", "must lie in [0, 1)"));
        }
        self.fer.validate()
    }
}

/// Go-Back-N throughput with frame error rate evaluated at the achieved
/// Eb/N0, `C/N0 − R_b` in dB.
pub fn arq_effective_rate(rate_bps: f64, cn0_db_hz: f64, cfg: &ArqConfig) -> Result<f64, CommsError> {
    let f = cfg.fer.eval(cn0_db_hz - db(rate_bps));
    let p = (1.0 - f) * (1.0 - cfg.ack_fer);
    if !(p > 0.0) {
        return Err(CommsError::LinkUnusable(p));
    }
    Ok(rate_bps / (1.0 + cfg.window as f64 * (1.0 - p) / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn worked_budget() -> LinkBudget {
        LinkBudget { coding_gain_db: 0.0, ..LinkBudget::default() }
    }

    #[test]
    fn worked_cn0() {
        let b = worked_budget();
        assert!((b.eirp_dbw() - 44.09).abs() < 0.005);
        let cn0 = cn0_db(b.eirp_dbw(), 40.0, 265.0);
        assert!((cn0 - 47.69).abs() < 0.01);
    }

    #[test]
    fn worked_rate() {
        let b = worked_budget();
        let r = supportable_data_rate(47.69, &b);
        assert!((r.rate_db_hz - 40.49).abs() < 1e-12);
        assert!((r.rate_bps - 11_194.0).abs() < 1.0);
        let coded = supportable_data_rate(47.69, &LinkBudget::default());
        assert!((coded.rate_bps / r.rate_bps - 10f64.powf(0.73)).abs() < 1e-9);
        let hot = supportable_data_rate(120.0, &b);
        assert!(hot.clamped);
        assert_eq!(hot.rate_bps, 8.0e6);
    }

    #[test]
    fn range_and_pointing_losses() {
        let b = LinkBudget::default();
        let a = carrier_to_noise(&b, 1.0e11, 0.0).unwrap();
        let c = carrier_to_noise(&b, 2.0e11, 0.0).unwrap();
        assert!((c.free_space_loss_db - a.free_space_loss_db - 20.0 * 2f64.log10()).abs() < 1e-9);
        assert_eq!(a.pointing_loss_db, 0.0);
        let p = carrier_to_noise(&b, 1.0e11, 0.05f64.to_radians()).unwrap();
        assert!((p.pointing_loss_db - 3.0).abs() < 1e-9);
        assert!(p.cn0_db_hz < a.cn0_db_hz);
        assert!(matches!(carrier_to_noise(&b, 0.0, 0.0), Err(CommsError::BadRange(_))));
    }

    #[test]
    fn margin_scales_rate_exactly() {
        let b = worked_budget();
        let r0 = supportable_data_rate(47.69, &b).rate_bps;
        let r1 = supportable_data_rate(47.69, &LinkBudget { margin_db: 5.5, ..b }).rate_bps;
        assert!((r0 / r1 - 10f64.powf(0.25)).abs() < 1e-12);
    }

    #[test]
    fn arq_examples() {
        let clean = ArqConfig { window: 7, ack_fer: 0.0, fer: FerTable::error_free() };
        assert_eq!(arq_effective_rate(1.0e4, 50.0, &clean).unwrap(), 1.0e4);
        let half = ArqConfig { window: 1, ack_fer: 0.5, fer: FerTable::error_free() };
        assert_eq!(arq_effective_rate(1.0e4, 50.0, &half).unwrap(), 5.0e3);
        let dead = ArqConfig { window: 1, ack_fer: 0.0, fer: FerTable { ebn0_db: vec![0.0], fer: vec![1.0] } };
        assert!(matches!(arq_effective_rate(1.0e4, 50.0, &dead), Err(CommsError::LinkUnusable(_))));
        let mut prev = f64::INFINITY;
        for n in 1..=64 {
            let cfg = ArqConfig { window: n, ack_fer: 0.01, fer: FerTable::sigmoid(-3.1, 1e-5, 0.25) };
            let r = arq_effective_rate(1.0e4, 38.0, &cfg).unwrap();
            assert!(r <= prev);
            prev = r;
        }
    }

    #[test]
    fn sigmoid_calibration() {
        let t = FerTable::sigmoid(4.2, 1e-5, 0.25);
        t.validate().unwrap();
        assert!((t.eval(4.2) - 1e-5).abs() < 1e-12);
        assert!(t.eval(3.0) > t.eval(4.0));
    }

    proptest! {
        #[test]
        fn cn0_decreasing_in_range(d in 1.0e6..1.0e12f64, k in 1.01..10.0f64) {
            let b = LinkBudget::default();
            prop_assert!(carrier_to_noise(&b, d * k, 0.0).unwrap().cn0_db_hz < carrier_to_noise(&b, d, 0.0).unwrap().cn0_db_hz);
        }

        #[test]
        fn effective_rate_bounded(rb in 1.0..1.0e7f64, cn0 in 20.0..80.0f64, n in 1u32..64, pack in 0.0..0.99f64) {
            let cfg = ArqConfig { window: n, ack_fer: pack, fer: FerTable::sigmoid(1.0, 1e-5, 0.3) };
            if let Ok(r) = arq_effective_rate(rb, cn0, &cfg) {
                prop_assert!(r <= rb);
                prop_assert!(r >= 0.0);
            }
        }
    }
}
