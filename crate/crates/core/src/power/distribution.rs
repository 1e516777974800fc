use serde::{Deserialize, Serialize};

use super::{invalid, PowerError};

/// Constant-power consumer with its activity flag at the current instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLoad {
    pub id: String,
    pub power_w: f64,
    pub active: bool,
}

impl PowerLoad {
    pub fn new(id: &str, power_w: f64, active: bool) -> Self {
        Self { id: id.into(), power_w, active }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NetPowerModel {
    /// Generated power delivered to the bus without loss.
    Lf,
    /// Generated (MPPT) power scaled by a converter efficiency.
    Hf { bus_efficiency: f64 },
}

pub fn active_load(loads: &[PowerLoad]) -> f64 {
    loads.iter().filter(|l| l.active).map(|l| l.power_w).sum()
}

pub fn net_power(p_solar: f64, loads: &[PowerLoad], model: NetPowerModel) -> Result<f64, PowerError> {
    if let Some(l) = loads.iter().find(|l| !(l.power_w >= 0.0)) {
        return Err(invalid(format!("load `{}`", l.id), "power rating must be non-negative"));
    }
    let generated = match model {
        NetPowerModel::Lf => p_solar,
        NetPowerModel::Hf { bus_efficiency } => {
            if !(bus_efficiency > 0.0 && bus_efficiency <= 1.0) {
                return Err(invalid("bus efficiency", "must be in (0, 1]"));
            }
            bus_efficiency * p_solar
        }
    };
    Ok(generated - active_load(loads))
}

/// Trapezoidal energy of `(t [s], P [W])` samples in watt-hours.
pub fn net_energy(samples: &[(f64, f64)]) -> Result<f64, PowerError> {
    if samples.is_empty() {
        return Err(PowerError::EmptyTrace);
    }
    let joules: f64 = samples.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum();
    Ok(joules / 3600.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lf_net_power() {
        let loads = [PowerLoad::new("a", 30.0, true), PowerLoad::new("b", 30.0, true), PowerLoad::new("c", 50.0, false)];
        assert_eq!(net_power(100.0, &loads, NetPowerModel::Lf).unwrap(), 40.0);
        let idle = [PowerLoad::new("c", 50.0, false)];
        assert_eq!(net_power(77.0, &idle, NetPowerModel::Lf).unwrap(), 77.0);
    }

    #[test]
    fn hf_net_power() {
        let loads = [PowerLoad::new("a", 40.0, true)];
        let p = net_power(100.0, &loads, NetPowerModel::Hf { bus_efficiency: 0.9 }).unwrap();
        assert!((p - 50.0).abs() < 1e-12);
        assert!(net_power(100.0, &loads, NetPowerModel::Hf { bus_efficiency: 0.0 }).is_err());
    }

    #[test]
    fn energy_examples() {
        assert!((net_energy(&[(0.0, 36.0), (100.0, 36.0)]).unwrap() - 1.0).abs() < 1e-12);
        assert!((net_energy(&[(0.0, -72.0), (50.0, -72.0)]).unwrap() + 1.0).abs() < 1e-12);
        let ramp: Vec<_> = (0..=60).map(|k| (k as f64, k as f64)).collect();
        assert!((net_energy(&ramp).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(net_energy(&[]), Err(PowerError::EmptyTrace));
        assert_eq!(net_energy(&[(3.0, 10.0)]).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn hf_never_exceeds_lf(p in 0.0..1000.0f64, mu in 0.01..1.0f64, l in 0.0..500.0f64) {
            let loads = [PowerLoad::new("x", l, true)];
            let hf = net_power(p, &loads, NetPowerModel::Hf { bus_efficiency: mu }).unwrap();
            let lf = net_power(p, &loads, NetPowerModel::Lf).unwrap();
            prop_assert!(hf <= lf);
        }
    }
}
