//! Command-line front end. Exit codes: 0 success, 2 invalid input, 3 runtime failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::Vector3;

use crate::comms::{
    arq_effective_rate, carrier_to_noise, cn0_db, supportable_data_rate, ArqConfig, CommsError, FerTable, LinkBudget, NamedLoss,
};
use crate::navigation::{kepler_propagate, lambert_solve, NavError, TransferDirection};
use crate::sim::{self, Scenario, SimError};

pub const OUT_DIR_ENV: &str = "CRUISESIM_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "cruisesim", version, about = "Small-body cruise and approach mission simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write telemetry.csv, tasks.csv and summary.json.
    Run(RunArgs),
    /// Check a scenario (with overrides) without running it.
    Validate(ScenarioArgs),
    /// Evaluate a single link budget.
    LinkBudget(LinkArgs),
    /// Solve a single Lambert problem.
    Lambert(LambertArgs),
    /// Run a scenario once per value of one parameter, in parallel.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Override a scenario value, e.g. `executive.soc_charge_threshold=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Replaces `seeds.base`.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ScenarioArgs {
    fn all_overrides(&self) -> Vec<String> {
        let mut o = self.overrides.clone();
        if let Some(s) = self.seed {
            o.push(format!("seeds.base={s}"));
        }
        o
    }

    fn load(&self) -> Result<Scenario, sim::ConfigError> {
        let s = Scenario::from_path(&self.scenario, &self.all_overrides())?;
        sim::validate(&s)?;
        Ok(s)
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    pub out: PathBuf,
    /// Dotted key to vary.
    #[arg(long)]
    pub param: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<String>,
    #[arg(long, default_value_t = 4)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct LinkArgs {
    /// Transmitter-to-receiver range.
    #[arg(long)]
    pub range_m: Option<f64>,
    /// Use this total path loss instead of computing it from range.
    #[arg(long)]
    pub total_loss_db: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub pointing_error_deg: f64,
    #[arg(long, default_value_t = 50.0)]
    pub tx_power_w: f64,
    #[arg(long, default_value_t = 28.1)]
    pub tx_gain_db: f64,
    #[arg(long, default_value_t = 1.0)]
    pub line_loss_db: f64,
    #[arg(long, default_value_t = 40.0)]
    pub g_over_t: f64,
    #[arg(long, default_value_t = 8.45e9)]
    pub frequency_hz: f64,
    #[arg(long, default_value_t = 0.1)]
    pub beamwidth_deg: f64,
    /// Sum of atmospheric, polarization and implementation losses.
    #[arg(long, default_value_t = 1.5)]
    pub other_loss_db: f64,
    #[arg(long, default_value_t = 3.0)]
    pub margin_db: f64,
    #[arg(long, default_value_t = 4.2)]
    pub required_ebn0_db: f64,
    #[arg(long, default_value_t = 7.3)]
    pub coding_gain_db: f64,
    #[arg(long, default_value_t = 8.0e6)]
    pub max_rate_bps: f64,
    /// Constant frame error rate.
    #[arg(long, default_value_t = 0.0)]
    pub fer: f64,
    #[arg(long, default_value_t = 0.0)]
    pub ack_fer: f64,
    #[arg(long, default_value_t = 1)]
    pub window: u32,
    /// Also tabulate R_eff for windows 1..=N.
    #[arg(long)]
    pub sweep_window: Option<u32>,
}

#[derive(Debug, Args)]
pub struct LambertArgs {
    #[arg(long, value_delimiter = ',', num_args = 3, allow_negative_numbers = true)]
    pub r1: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 3, allow_negative_numbers = true)]
    pub r2: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub tof: f64,
    #[arg(long)]
    pub mu: f64,
    #[arg(long)]
    pub retrograde: bool,
    /// Orbit-plane normal, needed when r1 and r2 are collinear.
    #[arg(long, value_delimiter = ',', num_args = 3, allow_negative_numbers = true)]
    pub normal: Option<Vec<f64>>,
}

/// Input problems map to 2, failures while computing to 3.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<sim::ConfigError> for CliError {
    fn from(e: sim::ConfigError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(c) => CliError::Input(c.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub fn main_with(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Run(a) => cmd_run(&a, out),
        Command::Validate(a) => {
            let s = a.load()?;
            writeln!(out, "ok: `{}` ({} steps of {} s)", s.name, s.steps(), s.time.dt_s)?;
            Ok(())
        }
        Command::LinkBudget(a) => cmd_link_budget(&a, out),
        Command::Lambert(a) => cmd_lambert(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    match main_with(cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn cmd_run(a: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let s = a.scenario.load()?;
    let res = sim::run_to_dir(&s, &a.out)?;
    let m = &res.summary;
    writeln!(out, "scenario        {}", m.scenario)?;
    writeln!(out, "steps           {}", m.steps)?;
    writeln!(out, "distance        {:.1} m -> {:.1} m", m.initial_distance_m, m.final_distance_m)?;
    writeln!(out, "delta-v         {:.6} m/s", m.total_delta_v_m_s)?;
    writeln!(out, "min soc         {:.4}", m.min_soc)?;
    writeln!(out, "downlinked      {:.0} bytes", m.bytes_downlinked)?;
    for (k, c) in &m.task_counts {
        writeln!(out, "task {k:<12} enqueued {} completed {} preempted {}", c.enqueued, c.completed, c.preempted)?;
    }
    writeln!(out, "wrote           {}", a.out.display())?;
    Ok(())
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut scenarios = Vec::new();
    for v in &a.values {
        let mut o = a.scenario.all_overrides();
        o.push(format!("{}={}", a.param, v));
        let s = Scenario::from_path(&a.scenario.scenario, &o)?;
        sim::validate(&s)?;
        scenarios.push((v.clone(), s));
    }
    let threads = a.threads.max(1);
    let dirs: Vec<PathBuf> = scenarios.iter().map(|(v, _)| a.out.join(format!("{}={}", a.param, v))).collect();
    let mut results: Vec<Option<Result<sim::Summary, String>>> = vec![None; scenarios.len()];
    for (chunk_idx, chunk) in scenarios.chunks(threads).enumerate() {
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .enumerate()
                .map(|(i, (_, s))| {
                    let dir: &Path = &dirs[chunk_idx * threads + i];
                    scope.spawn(move || sim::run_to_dir(s, dir).map(|r| r.summary).map_err(|e| e.to_string()))
                })
                .collect();
            for (i, h) in handles.into_iter().enumerate() {
                results[chunk_idx * threads + i] = Some(h.join().unwrap_or_else(|_| Err("worker panicked".into())));
            }
        });
    }
    writeln!(out, "{:<24} {:>14} {:>12} {:>8} {:>10}", a.param, "final_dist_m", "delta_v_m_s", "min_soc", "recharges")?;
    let mut failed = None;
    for ((v, _), r) in scenarios.iter().zip(results) {
        match r.expect("every run joined") {
            Ok(m) => writeln!(
                out,
                "{:<24} {:>14.1} {:>12.6} {:>8.4} {:>10}",
                v, m.final_distance_m, m.total_delta_v_m_s, m.min_soc, m.task_counts["recharge"].enqueued
            )?,
            Err(e) => {
                writeln!(out, "{v:<24} failed: {e}")?;
                failed.get_or_insert(e);
            }
        }
    }
    match failed {
        Some(e) => Err(CliError::Runtime(e)),
        None => Ok(()),
    }
}

fn link_budget(a: &LinkArgs) -> LinkBudget {
    LinkBudget {
        tx_power_w: a.tx_power_w,
        tx_gain_db: a.tx_gain_db,
        line_loss_db: a.line_loss_db,
        g_over_t_db_k: a.g_over_t,
        frequency_hz: a.frequency_hz,
        beamwidth_deg: a.beamwidth_deg,
        other_losses: vec![NamedLoss { name: "other".into(), db: a.other_loss_db }],
        margin_db: a.margin_db,
        required_ebn0_db: a.required_ebn0_db,
        coding_gain_db: a.coding_gain_db,
        max_rate_bps: a.max_rate_bps,
    }
}

fn comms_err(e: CommsError) -> CliError {
    match e {
        CommsError::LinkUnusable(_) => CliError::Runtime(e.to_string()),
        other => CliError::Input(other.to_string()),
    }
}

fn cmd_link_budget(a: &LinkArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let b = link_budget(a);
    b.validate().map_err(comms_err)?;
    let arq = ArqConfig { window: a.window, ack_fer: a.ack_fer, fer: FerTable { ebn0_db: vec![0.0], fer: vec![a.fer] } };
    arq.validate().map_err(comms_err)?;
    match (a.range_m, a.total_loss_db) {
        (Some(_), Some(_)) => return Err(CliError::Input("give only one of --range-m and --total-loss-db".into())),
        (None, None) => return Err(CliError::Input("missing parameter: --range-m or --total-loss-db".into())),
        _ => {}
    }
    let row = |out: &mut dyn Write, name: &str, v: f64, unit: &str| writeln!(out, "{name:<22} {v:>14.2} {unit}");
    row(out, "tx power", crate::comms::db(b.tx_power_w), "dBW")?;
    row(out, "tx gain", b.tx_gain_db, "dB")?;
    row(out, "line loss", b.line_loss_db, "dB")?;
    row(out, "EIRP", b.eirp_dbw(), "dBW")?;
    row(out, "G/T", b.g_over_t_db_k, "dB/K")?;
    let cn0 = match (a.range_m, a.total_loss_db) {
        (None, Some(l)) => {
            row(out, "total loss", l, "dB")?;
            cn0_db(b.eirp_dbw(), b.g_over_t_db_k, l)
        }
        (Some(range), None) => {
            let r = carrier_to_noise(&b, range, a.pointing_error_deg.to_radians()).map_err(comms_err)?;
            row(out, "free-space loss", r.free_space_loss_db, "dB")?;
            row(out, "pointing loss", r.pointing_loss_db, "dB")?;
            row(out, "other losses", r.other_loss_db, "dB")?;
            row(out, "total loss", r.total_loss_db, "dB")?;
            r.cn0_db_hz
        }
        _ => unreachable!("checked above"),
    };
    row(out, "C/N0", cn0, "dB-Hz")?;
    row(out, "required Eb/N0", b.required_ebn0_db, "dB")?;
    row(out, "coding gain", b.coding_gain_db, "dB")?;
    row(out, "margin", b.margin_db, "dB")?;
    let rate = supportable_data_rate(cn0, &b);
    row(out, "R_b", rate.rate_db_hz, "dB-Hz")?;
    writeln!(out, "{:<22} {:>14.1} bps{}", "R_b", rate.rate_bps, if rate.clamped { " (clamped)" } else { "" })?;
    let r_eff = arq_effective_rate(rate.rate_bps, cn0, &arq).map_err(comms_err)?;
    writeln!(out, "{:<22} {:>14.1} bps", "R_eff", r_eff)?;
    if let Some(n) = a.sweep_window {
        writeln!(out, "{:>6} {:>14}", "N", "R_eff_bps")?;
        for w in 1..=n.max(1) {
            let r = arq_effective_rate(rate.rate_bps, cn0, &ArqConfig { window: w, ..arq.clone() }).map_err(comms_err)?;
            writeln!(out, "{w:>6} {r:>14.1}")?;
        }
    }
    Ok(())
}

fn vec3(v: &[f64], what: &str) -> Result<Vector3<f64>, CliError> {
    match v {
        [x, y, z] => Ok(Vector3::new(*x, *y, *z)),
        _ => Err(CliError::Input(format!("{what} needs three components"))),
    }
}

fn cmd_lambert(a: &LambertArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let r1 = vec3(&a.r1, "--r1")?;
    let r2 = vec3(&a.r2, "--r2")?;
    let normal = a.normal.as_deref().map(|n| vec3(n, "--normal")).transpose()?;
    let dir = if a.retrograde { TransferDirection::Retrograde } else { TransferDirection::Prograde };
    let sol = lambert_solve(&r1, &r2, a.tof, a.mu, dir, normal.as_ref()).map_err(|e| match e {
        NavError::LambertNoConvergence { .. } => CliError::Runtime(e.to_string()),
        other => CliError::Input(other.to_string()),
    })?;
    let (r, _) = kepler_propagate(&r1, &sol.v1, a.tof, a.mu).map_err(|e| CliError::Runtime(e.to_string()))?;
    let residual = (r - r2).norm() / r2.norm();
    let fmt = |v: &Vector3<f64>| format!("{:.12e}, {:.12e}, {:.12e}", v.x, v.y, v.z);
    writeln!(out, "v1          {}", fmt(&sol.v1))?;
    writeln!(out, "v2          {}", fmt(&sol.v2))?;
    writeln!(out, "iterations  {}", sol.iterations)?;
    writeln!(out, "residual    {residual:.3e}")?;
    if !(residual < 1e-6) {
        return Err(CliError::Runtime(format!("round-trip residual {residual:.3e} exceeds 1e-6")));
    }
    Ok(())
}
