//! Deterministic fixed-step mission loop and its file outputs.

pub mod config;
mod telemetry;
mod world;

pub use config::{ConfigError, Scenario, SCHEMA_VERSION};
pub use telemetry::{write_task_log, FlagCounts, Summary, TaskCounts, TelemetryRecord, TelemetryWriter, TELEMETRY_VERSION};
pub use world::World;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::attitude::AttitudeError;
use crate::comms::CommsError;
use crate::environment::EnvError;
use crate::executive::{ExecError, TaskLogEntry};
use crate::navigation::NavError;
use crate::power::PowerError;

#[derive(Debug, Error)]
pub enum StepError {
    #[error(transparent)]
    Nav(#[from] NavError),
    #[error(transparent)]
    Attitude(#[from] AttitudeError),
    #[error(transparent)]
    Power(#[from] PowerError),
    #[error(transparent)]
    Comms(#[from] CommsError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error("dispatch: {0}")]
    Dispatch(String),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("step {step} (t = {t} s): {cause}")]
    Step { step: u64, t: f64, cause: StepError },
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for SimError {
    fn from(e: std::io::Error) -> Self {
        SimError::Io(e.to_string())
    }
}

impl From<csv::Error> for SimError {
    fn from(e: csv::Error) -> Self {
        SimError::Io(e.to_string())
    }
}

/// The check `run` performs before stepping.
pub fn validate(scenario: &Scenario) -> Result<(), ConfigError> {
    World::new(scenario).map(|_| ())
}

pub struct RunOutput {
    pub summary: Summary,
    pub tasks: Vec<TaskLogEntry>,
}

/// Steps the scenario to completion, streaming telemetry CSV to `sink`.
pub fn run<W: Write>(scenario: &Scenario, sink: W) -> Result<RunOutput, SimError> {
    let mut world = World::new(scenario)?;
    let columns = TelemetryRecord::header(world.n_wheels());
    let mut out = TelemetryWriter::new(sink, world.n_wheels(), scenario.telemetry.decimation)?;
    while !world.finished() {
        let rec = world.step()?;
        out.write(&rec)?;
    }
    out.finish()?;
    Ok(RunOutput { summary: world.summary(columns), tasks: world.executive().log().to_vec() })
}

/// Writes `telemetry.csv`, `tasks.csv` and `summary.json` into `dir`.
pub fn run_to_dir(scenario: &Scenario, dir: &Path) -> Result<RunOutput, SimError> {
    std::fs::create_dir_all(dir)?;
    let file = BufWriter::new(File::create(dir.join("telemetry.csv"))?);
    let out = run(scenario, file)?;
    write_task_log(BufWriter::new(File::create(dir.join("tasks.csv"))?), &out.tasks)?;
    let json = serde_json::to_string_pretty(&out.summary).map_err(|e| SimError::Io(e.to_string()))?;
    std::fs::write(dir.join("summary.json"), json + "\n")?;
    Ok(out)
}
