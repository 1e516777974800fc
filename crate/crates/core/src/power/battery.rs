use serde::{Deserialize, Serialize};

use super::{invalid, PowerError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Battery {
    pub capacity_wh: f64,
    pub charge_efficiency: f64,
    pub discharge_efficiency: f64,
    pub soc: f64,
    /// Nominal bus voltage used to convert net power to battery current.
    #[serde(default = "default_bus_voltage")]
    pub bus_voltage_v: f64,
    /// Linear capacity fade, fraction of initial capacity per second.
    #[serde(default)]
    pub fade_per_s: f64,
}

fn default_bus_voltage() -> f64 {
    28.0
}

/// Result of applying a state-of-charge change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocUpdate {
    pub requested: f64,
    pub applied: f64,
    pub clamped: bool,
}

impl Battery {
    pub fn validate(&self) -> Result<(), PowerError> {
        if !(self.capacity_wh > 0.0) {
            return Err(PowerError::NoCapacity(self.capacity_wh));
        }
        for (what, v) in [("charge_efficiency", self.charge_efficiency), ("discharge_efficiency", self.discharge_efficiency)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(invalid(what, "must be in (0, 1]"));
            }
        }
        if !(0.0..=1.0).contains(&self.soc) {
            return Err(invalid("soc", "must be in [0, 1]"));
        }
        if !(self.bus_voltage_v > 0.0) {
            return Err(invalid("bus_voltage_v", "must be positive"));
        }
        if !(self.fade_per_s >= 0.0) {
            return Err(invalid("fade_per_s", "must be non-negative"));
        }
        Ok(())
    }

    /// State-of-charge change for a net energy surplus or deficit in Wh.
    pub fn soc_delta_lf(&self, e_net_wh: f64) -> f64 {
        if e_net_wh > 0.0 {
            self.charge_efficiency * e_net_wh / self.capacity_wh
        } else {
            e_net_wh / (self.discharge_efficiency * self.capacity_wh)
        }
    }

    /// Time-varying capacity in amp-hours.
    pub fn capacity_ah(&self, t: f64) -> f64 {
        self.capacity_wh * (1.0 - self.fade_per_s * t.max(0.0)) / self.bus_voltage_v
    }

    /// Coulomb-counted change from `(t, I_b)` samples, positive into the
    /// battery, with capacity evaluated at the last sample time.
    pub fn soc_delta_coulomb(&self, current: &[(f64, f64)]) -> Result<f64, PowerError> {
        let Some(&(t_end, _)) = current.last() else {
            return Err(PowerError::EmptyTrace);
        };
        self.soc_delta_coulomb_with_capacity(current, self.capacity_ah(t_end))
    }

    pub fn soc_delta_coulomb_with_capacity(&self, current: &[(f64, f64)], e_max_ah: f64) -> Result<f64, PowerError> {
        if !(e_max_ah > 0.0) {
            return Err(PowerError::NoCapacity(e_max_ah));
        }
        let amp_s: f64 = current.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum();
        Ok(amp_s / (3600.0 * e_max_ah))
    }

    /// Applies `delta`, clamping the result into `[0, 1]`.
    pub fn apply(&mut self, delta: f64) -> SocUpdate {
        let target = self.soc + delta;
        let new = target.clamp(0.0, 1.0);
        let applied = new - self.soc;
        self.soc = new;
        SocUpdate { requested: delta, applied, clamped: new != target }
    }

    pub fn stored_energy_wh(&self) -> f64 {
        self.soc * self.capacity_wh
    }
}
