use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::MathError;

/// Name and unit of one scalar slot in a [`StateVector`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub name: String,
    pub unit: String,
}

/// Ordered slot descriptors. Built group by group, e.g. `vector("r", "m", 3)`
/// yields slots `r[0]`, `r[1]`, `r[2]`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateLayout {
    slots: Vec<Slot>,
}

impl StateLayout {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn scalar(mut self, name: &str, unit: &str) -> Self {
        self.slots.push(Slot { name: name.into(), unit: unit.into() });
        self
    }

    pub fn vector(mut self, name: &str, unit: &str, n: usize) -> Self {
        for i in 0..n {
            self.slots.push(Slot { name: format!("{name}[{i}]"), unit: unit.into() });
        }
        self
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    /// Index of the first slot of a named group (`name` or `name[0]`).
    pub fn offset_of(&self, name: &str) -> Option<usize> {
        let first = format!("{name}[0]");
        self.slots.iter().position(|s| s.name == name || s.name == first)
    }
}

/// Flat array of scalars paired with a shared layout descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: Arc<StateLayout>,
    values: Vec<f64>,
}

impl StateVector {
    pub fn pack(layout: Arc<StateLayout>, values: Vec<f64>) -> Result<Self, MathError> {
        if layout.len() != values.len() {
            return Err(MathError::LayoutMismatch { layout: layout.len(), values: values.len() });
        }
        Ok(Self { layout, values })
    }

    pub fn unpack(self) -> (Arc<StateLayout>, Vec<f64>) {
        (self.layout, self.values)
    }

    pub fn layout(&self) -> &StateLayout {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn with_values(&self, values: Vec<f64>) -> Self {
        Self { layout: Arc::clone(&self.layout), values }
    }
}

fn check_finite(layout: &StateLayout, d: &[f64], t: f64) -> Result<(), MathError> {
    match d.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(i) => Err(MathError::NonFinite(format!(
            "derivative slot `{}` [{}] at t = {t}",
            layout.slots[i].name, layout.slots[i].unit
        ))),
    }
}

/// One classical fourth-order Runge-Kutta step. `f(t, x, dx)` is called
/// exactly four times and must fill `dx` with the time derivative.
pub fn rk4_step<E, F>(mut f: F, x: &StateVector, t: f64, dt: f64) -> Result<StateVector, E>
where
    E: From<MathError>,
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
{
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(MathError::BadStep(dt).into());
    }
    let n = x.len();
    let y = x.values();
    let layout = x.layout();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let h2 = 0.5 * dt;

    f(t, y, &mut k1)?;
    check_finite(layout, &k1, t)?;
    for i in 0..n {
        tmp[i] = y[i] + h2 * k1[i];
    }
    f(t + h2, &tmp, &mut k2)?;
    check_finite(layout, &k2, t + h2)?;
    for i in 0..n {
        tmp[i] = y[i] + h2 * k2[i];
    }
    f(t + h2, &tmp, &mut k3)?;
    check_finite(layout, &k3, t + h2)?;
    for i in 0..n {
        tmp[i] = y[i] + dt * k3[i];
    }
    f(t + dt, &tmp, &mut k4)?;
    check_finite(layout, &k4, t + dt)?;

    let out = (0..n)
        .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    Ok(x.with_values(out))
}
