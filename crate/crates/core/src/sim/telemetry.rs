use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::SimError;
use crate::executive::TaskLogEntry;

pub const TELEMETRY_VERSION: u32 = 1;

/// One row per step, sampled at the end of the step.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryRecord {
    pub t: f64,
    pub step: u64,
    pub center: String,
    pub r: [f64; 3],
    pub v: [f64; 3],
    pub distance_to_body_m: f64,
    pub delta_v_total_m_s: f64,
    /// Scalar-last.
    pub q: [f64; 4],
    pub omega: [f64; 3],
    pub wheel_rates: Vec<f64>,
    pub pointing_error_deg: f64,
    pub mode: &'static str,
    pub p_solar_w: f64,
    pub p_load_w: f64,
    pub p_net_w: f64,
    pub soc: f64,
    pub cn0_db_hz: f64,
    pub rb_bps: f64,
    pub r_eff_bps: f64,
    pub buffer_fill_bytes: f64,
    pub downlinked_bytes: f64,
    pub active_task: &'static str,
    /// Eligible open task kinds, `|`-separated.
    pub queue: String,
    pub queue_depth: usize,
    pub flags: Vec<&'static str>,
}

impl TelemetryRecord {
    pub fn header(n_wheels: usize) -> Vec<String> {
        let mut h: Vec<String> = ["t_s", "step", "center", "r_x_m", "r_y_m", "r_z_m", "v_x_m_s", "v_y_m_s", "v_z_m_s"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend(["distance_to_body_m", "delta_v_total_m_s", "q_x", "q_y", "q_z", "q_s", "w_x_rad_s", "w_y_rad_s", "w_z_rad_s"].map(String::from));
        h.extend((0..n_wheels).map(|i| format!("wheel_{i}_rad_s")));
        h.extend(
            [
                "pointing_error_deg",
                "mode",
                "p_solar_w",
                "p_load_w",
                "p_net_w",
                "soc",
                "cn0_db_hz",
                "rb_bps",
                "r_eff_bps",
                "buffer_fill_bytes",
                "downlinked_bytes",
                "active_task",
                "queue",
                "queue_depth",
                "flags",
            ]
            .map(String::from),
        );
        h
    }

    pub fn fields(&self) -> Vec<String> {
        let f = |x: f64| x.to_string();
        let mut out = vec![f(self.t), self.step.to_string(), self.center.clone()];
        out.extend(self.r.iter().chain(self.v.iter()).map(|x| f(*x)));
        out.push(f(self.distance_to_body_m));
        out.push(f(self.delta_v_total_m_s));
        out.extend(self.q.iter().chain(self.omega.iter()).chain(self.wheel_rates.iter()).map(|x| f(*x)));
        out.push(f(self.pointing_error_deg));
        out.push(self.mode.into());
        for x in [self.p_solar_w, self.p_load_w, self.p_net_w, self.soc, self.cn0_db_hz, self.rb_bps, self.r_eff_bps, self.buffer_fill_bytes, self.downlinked_bytes] {
            out.push(f(x));
        }
        out.push(self.active_task.into());
        out.push(self.queue.clone());
        out.push(self.queue_depth.to_string());
        out.push(self.flags.join("|"));
        out
    }
}

pub struct TelemetryWriter<W: Write> {
    csv: csv::Writer<W>,
    decimation: u64,
}

impl<W: Write> TelemetryWriter<W> {
    pub fn new(sink: W, n_wheels: usize, decimation: u64) -> Result<Self, SimError> {
        let mut csv = csv::Writer::from_writer(sink);
        csv.write_record(TelemetryRecord::header(n_wheels))?;
        Ok(Self { csv, decimation: decimation.max(1) })
    }

    pub fn write(&mut self, rec: &TelemetryRecord) -> Result<(), SimError> {
        if rec.step.is_multiple_of(self.decimation) {
            self.csv.write_record(rec.fields())?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, SimError> {
        self.csv.flush()?;
        self.csv.into_inner().map_err(|e| SimError::Io(e.to_string()))
    }
}

pub fn write_task_log<W: Write>(sink: W, log: &[TaskLogEntry]) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["t_s", "task_id", "kind", "transition"])?;
    for e in log {
        w.serialize((e.t, e.task_id, e.kind, e.transition))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TaskCounts {
    pub enqueued: u64,
    pub activated: u64,
    pub preempted: u64,
    pub completed: u64,
    pub rejected: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FlagCounts {
    pub wheel_saturation: u64,
    pub wheel_overspeed: u64,
    pub desat_authority_limited: u64,
    pub soc_clamped: u64,
    pub rate_clamped: u64,
    pub buffer_overflow: u64,
    pub tcm_capped: u64,
    pub priority_violation: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub steps: u64,
    pub duration_s: f64,
    pub tcm_enabled: bool,
    pub initial_distance_m: f64,
    pub final_distance_m: f64,
    pub min_distance_m: f64,
    pub total_delta_v_m_s: f64,
    pub min_soc: f64,
    pub final_soc: f64,
    pub first_recharge_t_s: Option<f64>,
    pub bytes_generated: f64,
    pub bytes_downlinked: f64,
    pub bytes_dropped: f64,
    /// Mismatch between the battery energy change and the integrated net
    /// power after charge/discharge efficiencies, relative.
    pub energy_residual_rel: f64,
    pub task_counts: BTreeMap<String, TaskCounts>,
    pub flags: FlagCounts,
    pub telemetry_columns: Vec<String>,
}
