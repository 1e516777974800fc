use std::collections::BTreeMap;
#[cfg(debug_assertions)]
use std::hash::{Hash, Hasher};

use nalgebra::{DVector, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::{invalid, ConfigError, LoadGate, Scenario};
use super::telemetry::{FlagCounts, Summary, TaskCounts, TelemetryRecord};
use super::{SimError, StepError};
use crate::attitude::{
    allocate_actuators, desat_command, step_attitude, substeps_for, tracking_controller, AttitudeCommand, AttitudeError,
    AttitudeInputs, AttitudeMode, AttitudeModel, AttitudeState, EigenAxisSlew, Gains,
};
use crate::comms::{arq_effective_rate, carrier_to_noise, supportable_data_rate, ArqConfig, DataBuffer, FerTable, LinkBudget};
use crate::environment::{gravity_torque, srp_force_torque, CelestialBody, MassGrid, Pose};
use crate::executive::{
    charging_attitude, two_axis_attitude, ChargingProblem, Comparison, Event, ExecInputs, Executive, TaskKind,
    TaskState, Transition,
};
use crate::math::{Framed, Quaternion};
use crate::navigation::{
    inject_state_error, lambert_solve, plan_tcm, predicted_miss, step_nav, NavModel, NavState, PropulsionCommand,
    TcmTarget, TransferDirection,
};
use crate::power::{Battery, PowerLoad, SolarArray};

/// Retargets smaller than this leave the current slew alone.
const RETARGET_TOLERANCE: f64 = 0.01 * std::f64::consts::PI / 180.0;
/// Rate error allowed when declaring a slew settled.
const SETTLE_RATE: f64 = 1e-3;
/// Corrections below this are treated as already on course.
const MIN_TCM_DV: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
enum TcmPhase {
    Idle,
    Pointing { dir: Vector3<f64> },
    Burning { burn: PropulsionCommand },
}

/// What the active task asks of the subsystems this step.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Directive {
    mode: AttitudeMode,
    target: Quaternion,
    thrust: Option<PropulsionCommand>,
    desat: bool,
    downlink: bool,
}

#[derive(Debug, Clone, Copy)]
struct Snapshot {
    t: f64,
    sun: Vector3<f64>,
    body: Vector3<f64>,
    ground: Vector3<f64>,
    r_sc: Vector3<f64>,
}

impl Snapshot {
    fn sun_dir(&self) -> Vector3<f64> {
        (self.sun - self.r_sc).normalize()
    }

    fn body_dir(&self) -> Vector3<f64> {
        (self.body - self.r_sc).normalize()
    }

    fn ground_dir(&self) -> Vector3<f64> {
        (self.ground - self.r_sc).normalize()
    }
}

pub struct World {
    scenario: Scenario,
    nav_model: NavModel,
    att_model: AttitudeModel,
    gains: Gains,
    ground: CelestialBody,
    target: usize,
    grid: MassGrid,
    arrays: Vec<SolarArray>,
    wing_arrays: Vec<usize>,
    link: LinkBudget,
    arq: ArqConfig,
    exec: Executive,
    tcm_target: TcmTarget,
    pub nav: NavState,
    pub att: AttitudeState,
    pub battery: Battery,
    pub buffer: DataBuffer,
    wing_angles: Vec<f64>,
    t: f64,
    step: u64,
    slew: Option<(f64, EigenAxisSlew)>,
    dispatched: Option<u64>,
    tcm_phase: TcmPhase,
    charging: Option<(f64, Quaternion)>,
    next_tcm_eval: f64,
    // accounting
    initial_distance: f64,
    min_distance: f64,
    delta_v_total: f64,
    downlinked: f64,
    generated: f64,
    dropped: f64,
    min_soc: f64,
    soc0: f64,
    expected_energy_wh: f64,
    energy_scale_wh: f64,
    first_recharge: Option<f64>,
    flags: FlagCounts,
}

fn model_err(what: &str) -> impl Fn(String) -> ConfigError + '_ {
    move |e| invalid(what, e)
}

impl World {
    pub fn new(scenario: &Scenario) -> Result<Self, ConfigError> {
        scenario.check()?;
        let s = scenario.clone();
        let env = &s.environment;
        let sc = &s.spacecraft;
        let sun = env.bodies.iter().position(|b| b.name == env.sun).expect("checked");
        let target = env.bodies.iter().position(|b| b.name == env.target).expect("checked");
        env.ground.validate().map_err(|e| model_err("environment.ground")(e.to_string()))?;
        let nav_model = NavModel {
            bodies: env.bodies.clone(),
            sun,
            solar: env.solar,
            plates: sc.plates.clone(),
            mass_kg: sc.mass_kg,
            srp: env.srp,
            soi_hysteresis: env.soi_hysteresis,
        };
        nav_model.validate().map_err(|e| model_err("environment")(e.to_string()))?;
        if nav_model.bodies[sun].position(0.0).map(|p| p.norm()).unwrap_or(1.0) != 0.0 {
            return Err(invalid("environment", "the Sun must sit at the origin"));
        }
        sc.mass_grid.validate().map_err(|e| model_err("spacecraft.mass_grid")(e.to_string()))?;
        for a in &sc.arrays {
            a.validate().map_err(|e| model_err("spacecraft.arrays")(e.to_string()))?;
        }
        let att_model = AttitudeModel::new(
            sc.inertia(),
            sc.wheel_specs(),
            sc.wing_specs(),
            sc.thrusters.clone(),
            sc.max_rotation_per_step_rad,
        )
        .map_err(|e| model_err("spacecraft")(e.to_string()))?;
        let gains = s.gains()?;
        s.power.battery.validate().map_err(|e| model_err("power.battery")(e.to_string()))?;
        s.comms.link.validate().map_err(|e| model_err("comms.link")(e.to_string()))?;
        s.comms.buffer.validate().map_err(|e| model_err("comms.buffer")(e.to_string()))?;
        let link = s.comms.link.clone();
        let arq = ArqConfig {
            window: s.comms.arq_window,
            ack_fer: s.comms.ack_fer,
            fer: FerTable::sigmoid(link.required_ebn0_db - link.coding_gain_db, 1e-5, s.comms.fer_width_db),
        };
        arq.validate().map_err(|e| model_err("comms")(e.to_string()))?;

        let e = &s.executive;
        let events = vec![
            Event::new(TaskKind::Recharge, Comparison::Below, e.soc_charge_threshold, e.soc_band),
            Event::new(TaskKind::Desaturate, Comparison::Above, e.desat_threshold_rad_s, e.desat_band_rad_s),
            Event::new(TaskKind::ExecuteTcm, Comparison::Above, e.tcm.miss_threshold_m, e.tcm.band_m),
            Event::new(TaskKind::Downlink, Comparison::Above, e.downlink_fill_threshold, e.downlink_band),
        ];
        let exec = Executive::new(e.priorities, events).map_err(|e| model_err("executive")(e.to_string()))?;

        let t0 = s.time.epoch_s;
        let (nav, tcm_target) = initial_nav(&s, &nav_model, target).map_err(|e| invalid("navigation.approach", e))?;
        let body0 = nav_model.bodies[target].position(t0).map_err(|e| invalid("environment", e))?;
        let sun0 = nav_model.bodies[sun].position(t0).map_err(|e| invalid("environment", e))?;
        let (r0, _) = nav_model.inertial(&nav).map_err(|e| invalid("navigation", e))?;
        let q0 = science_attitude(&(body0 - r0).normalize(), &(sun0 - r0).normalize());
        let mut att = AttitudeState::at_rest(q0, att_model.wheels.len(), att_model.wings.len());
        if !sc.wheels.initial_rates.is_empty() {
            att.wheel_rates = DVector::from_vec(sc.wheels.initial_rates.clone());
        }
        let wing_arrays: Vec<usize> = sc.arrays.iter().enumerate().filter(|(_, a)| a.gimbal_axis.is_some()).map(|(i, _)| i).collect();
        let sun_body = q0.inverse_rotate(&(sun0 - r0));
        let wing_angles = wing_arrays.iter().map(|&i| sc.arrays[i].tracking_angle(&sun_body)).collect();
        let initial_distance = (r0 - body0).norm();
        let battery = s.power.battery.clone();
        let soc0 = battery.soc;
        Ok(Self {
            grid: sc.mass_grid.clone(),
            arrays: sc.arrays.clone(),
            ground: env.ground.clone(),
            wing_arrays,
            link,
            arq,
            exec,
            tcm_target,
            nav,
            att,
            battery,
            buffer: s.comms.buffer.clone(),
            wing_angles,
            t: t0,
            step: 0,
            slew: None,
            dispatched: None,
            tcm_phase: TcmPhase::Idle,
            charging: None,
            next_tcm_eval: t0 + e.tcm.first_eval_s,
            initial_distance,
            min_distance: initial_distance,
            delta_v_total: 0.0,
            downlinked: 0.0,
            generated: 0.0,
            dropped: 0.0,
            min_soc: soc0,
            soc0,
            expected_energy_wh: 0.0,
            energy_scale_wh: 0.0,
            first_recharge: None,
            flags: FlagCounts::default(),
            nav_model,
            att_model,
            gains,
            target,
            scenario: s,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn finished(&self) -> bool {
        self.step >= self.scenario.steps()
    }

    pub fn executive(&self) -> &Executive {
        &self.exec
    }

    pub fn attitude_model(&self) -> &AttitudeModel {
        &self.att_model
    }

    pub fn nav_model(&self) -> &NavModel {
        &self.nav_model
    }

    pub fn tcm_target(&self) -> &TcmTarget {
        &self.tcm_target
    }

    pub fn n_wheels(&self) -> usize {
        self.att_model.wheels.len()
    }

    #[cfg(debug_assertions)]
    fn checksum(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        let mut feed = |x: f64| x.to_bits().hash(&mut h);
        self.nav.r.iter().chain(self.nav.v.iter()).for_each(|x| feed(*x));
        self.att.to_vec().into_iter().for_each(&mut feed);
        self.wing_angles.iter().for_each(|x| feed(*x));
        self.nav.center.hash(&mut h);
        h.finish()
    }

    fn snapshot(&self, t: f64) -> Result<Snapshot, StepError> {
        let b = &self.nav_model.bodies;
        let (r_sc, _) = self.nav_model.inertial(&self.nav)?;
        Ok(Snapshot {
            t,
            sun: b[self.nav_model.sun].position(t)?,
            body: b[self.target].position(t)?,
            ground: self.ground.position(t)?,
            r_sc,
        })
    }

    fn window_open(&self, t: f64) -> Option<f64> {
        self.scenario.comms.ground_windows.iter().find(|w| w.start_s <= t && t < w.stop_s).map(|w| w.stop_s)
    }

    fn estimate_seed(&self, salt: u64) -> u64 {
        (self.scenario.seeds.base ^ self.step.wrapping_mul(0x9E37_79B9_7F4A_7C15)).wrapping_add(salt)
    }

    fn estimate(&self, salt: u64) -> NavState {
        let tc = &self.scenario.executive.tcm;
        inject_state_error(&self.nav, tc.sigma_pos_m, tc.sigma_vel_m_s, self.estimate_seed(salt))
    }

    fn inputs(&self, t: f64) -> Result<ExecInputs, StepError> {
        let tc = &self.scenario.executive.tcm;
        let mut miss = None;
        if tc.enabled && t >= self.next_tcm_eval && t < self.tcm_target.t_arrive - tc.cutoff_s {
            miss = Some(predicted_miss(&self.nav_model, &self.estimate(0), &self.tcm_target)?);
        }
        let buffer_fill = self.window_open(t).map(|_| self.buffer.fraction());
        Ok(ExecInputs {
            soc: Some(self.battery.soc),
            wheel_rate: Some(self.att.max_wheel_rate()),
            miss_distance: miss,
            buffer_fill,
        })
    }

    fn settled(&self, target: &Quaternion, t: f64) -> bool {
        let tol = self.scenario.executive.settle_tolerance_deg.to_radians();
        let slew_done = self.slew.as_ref().is_some_and(|(t0, s)| t - t0 >= s.duration() && s.target.angle_to(target) <= RETARGET_TOLERANCE);
        slew_done && self.att.q.angle_to(target) < tol && self.att.omega.norm() < SETTLE_RATE
    }

    fn tcm_attitude(dir: &Vector3<f64>, snap: &Snapshot) -> Quaternion {
        two_axis_attitude(&Vector3::y(), dir, &Vector3::x(), &snap.sun_dir())
    }

    /// Runs the active task's logic, completing or rejecting tasks and
    /// rescheduling until a task accepts the step.
    fn dispatch(&mut self, snap: &Snapshot) -> Result<Directive, StepError> {
        let t = snap.t;
        let e = self.scenario.executive.clone();
        let science = Directive {
            mode: AttitudeMode::SmallBodyPointing,
            target: science_attitude(&snap.body_dir(), &snap.sun_dir()),
            thrust: None,
            desat: false,
            downlink: false,
        };
        for _ in 0..16 {
            let Some(task) = self.exec.schedule(t) else {
                self.dispatched = None;
                return Ok(science);
            };
            if self.dispatched != Some(task.id) {
                self.dispatched = Some(task.id);
                self.tcm_phase = TcmPhase::Idle;
                self.charging = None;
            }
            match task.kind {
                TaskKind::Recharge => {
                    if self.first_recharge.is_none() {
                        self.first_recharge = Some(t);
                    }
                    if self.battery.soc >= e.soc_recharge_complete {
                        self.exec.complete(t, task.id)?;
                        continue;
                    }
                    let stale = self.charging.is_none_or(|(t0, _)| t - t0 >= e.charging_refresh_s);
                    if stale {
                        let problem = ChargingProblem {
                            solar: &self.nav_model.solar,
                            arrays: &self.arrays,
                            position: snap.r_sc,
                            sun_position: snap.sun,
                            target_direction: snap.body_dir(),
                            pointing_axis: Vector3::z(),
                            weight: e.charging_weight,
                        };
                        self.charging = Some((t, charging_attitude(&problem)?.q));
                    }
                    let q = self.charging.expect("set above").1;
                    return Ok(Directive { mode: AttitudeMode::Recharge, target: q, ..science });
                }
                TaskKind::Desaturate => {
                    if self.att.max_wheel_rate() < 0.5 * e.desat_threshold_rad_s {
                        self.exec.complete(t, task.id)?;
                        continue;
                    }
                    return Ok(Directive { desat: true, ..science });
                }
                TaskKind::Downlink => {
                    if self.buffer.fill_bytes <= 0.0 || self.window_open(t).is_none() {
                        self.exec.complete(t, task.id)?;
                        continue;
                    }
                    let q = two_axis_attitude(&Vector3::x(), &snap.ground_dir(), &Vector3::z(), &snap.sun_dir());
                    return Ok(Directive { mode: AttitudeMode::Downlink, target: q, downlink: true, ..science });
                }
                TaskKind::ExecuteTcm => {
                    let max_dv = self.scenario.spacecraft.propulsion.max_delta_v_m_s;
                    let max_thrust = self.scenario.spacecraft.propulsion.max_thrust_n;
                    match self.tcm_phase {
                        TcmPhase::Idle => match plan_tcm(&self.nav_model, &self.estimate(1), &self.tcm_target, max_dv, max_thrust) {
                            Err(_) => {
                                self.exec.reject(t, task.id, e.reject_backoff_s)?;
                                continue;
                            }
                            Ok(plan) if plan.delta_v.norm() < MIN_TCM_DV => {
                                self.finish_tcm(t, task.id)?;
                                continue;
                            }
                            Ok(plan) => {
                                let dir = plan.delta_v.normalize();
                                self.tcm_phase = TcmPhase::Pointing { dir };
                                return Ok(Directive { mode: AttitudeMode::Tcm, target: Self::tcm_attitude(&dir, snap), ..science });
                            }
                        },
                        TcmPhase::Pointing { dir } => {
                            let q = Self::tcm_attitude(&dir, snap);
                            if !self.settled(&q, t) {
                                return Ok(Directive { mode: AttitudeMode::Tcm, target: q, ..science });
                            }
                            match plan_tcm(&self.nav_model, &self.estimate(2), &self.tcm_target, max_dv, max_thrust) {
                                Err(_) => {
                                    self.exec.reject(t, task.id, e.reject_backoff_s)?;
                                    continue;
                                }
                                Ok(plan) => match plan.burn {
                                    Some(burn) if plan.delta_v.norm() >= MIN_TCM_DV => {
                                        if plan.capped {
                                            self.flags.tcm_capped += 1;
                                        }
                                        self.tcm_phase = TcmPhase::Burning { burn };
                                        let q = Self::tcm_attitude(&burn.thrust_n.normalize(), snap);
                                        return Ok(Directive { mode: AttitudeMode::Tcm, target: q, thrust: Some(burn), ..science });
                                    }
                                    _ => {
                                        self.finish_tcm(t, task.id)?;
                                        continue;
                                    }
                                },
                            }
                        }
                        TcmPhase::Burning { burn } => {
                            if t >= burn.stop_s {
                                self.finish_tcm(t, task.id)?;
                                continue;
                            }
                            let q = Self::tcm_attitude(&burn.thrust_n.normalize(), snap);
                            return Ok(Directive { mode: AttitudeMode::Tcm, target: q, thrust: Some(burn), ..science });
                        }
                    }
                }
            }
        }
        Err(StepError::Dispatch("task completion did not settle".into()))
    }

    fn finish_tcm(&mut self, t: f64, id: u64) -> Result<(), StepError> {
        self.exec.complete(t, id)?;
        self.tcm_phase = TcmPhase::Idle;
        self.next_tcm_eval = t + self.scenario.executive.tcm.period_s;
        Ok(())
    }

    fn guidance(&mut self, d: &Directive, t: f64) -> Result<AttitudeCommand, StepError> {
        let e = &self.scenario.executive;
        let replan = match &self.slew {
            None => Some(self.att.q),
            Some((t0, s)) if s.mode != d.mode => {
                let _ = t0;
                Some(self.att.q)
            }
            Some((t0, s)) if s.target.angle_to(&d.target) > RETARGET_TOLERANCE => Some(s.command_at(t - t0).q),
            Some(_) => None,
        };
        if let Some(start) = replan {
            let slew = EigenAxisSlew::new(&start, &d.target, e.slew_rate_deg_s.to_radians(), e.slew_accel_rad_s2, d.mode)?;
            self.slew = Some((t, slew));
        }
        let (t0, s) = self.slew.as_ref().expect("set above");
        Ok(s.command_at(t - t0))
    }

    fn wing_accels(&self, snap: &Snapshot, dt: f64) -> DVector<f64> {
        let gain = self.scenario.spacecraft.wing_rotor.tracking_gain;
        let sun_body = self.att.q.inverse_rotate(&(snap.sun - snap.r_sc));
        let mut acc = DVector::zeros(self.att_model.wings.len());
        for (j, (&ai, w)) in self.wing_arrays.iter().zip(self.att_model.wings.iter()).enumerate() {
            let want = self.arrays[ai].tracking_angle(&sun_body);
            let err = wrap(want - self.wing_angles[j]);
            let rate_cmd = (gain * err).clamp(-w.max_rate, w.max_rate);
            acc[j] = ((rate_cmd - self.att.wing_rates[j]) / dt).clamp(-w.max_accel(), w.max_accel());
        }
        acc
    }

    fn gimbal_angles(&self) -> Vec<f64> {
        let mut g = vec![0.0; self.arrays.len()];
        for (j, &ai) in self.wing_arrays.iter().enumerate() {
            g[ai] = self.wing_angles[j];
        }
        g
    }

    fn disturbance(&self, snap: &Snapshot) -> Result<Vector3<f64>, StepError> {
        let env = &self.scenario.environment;
        let pose = Pose::new(snap.r_sc, self.att.q);
        let mut tau = Vector3::zeros();
        if env.gravity_gradient {
            for (b, p) in [(&self.nav_model.bodies[self.nav_model.sun], snap.sun), (&self.nav_model.bodies[self.target], snap.body)] {
                tau += gravity_torque(b, &Framed::new(p), &self.grid, &pose)?.into_inner();
            }
        }
        if env.srp && !self.nav_model.plates.is_empty() {
            tau += srp_force_torque(&self.nav_model.solar, &self.nav_model.plates, &pose, &Framed::new(snap.sun))?.1.into_inner();
        }
        Ok(tau)
    }

    fn loads(&self, d: &Directive, burning: bool) -> Vec<PowerLoad> {
        self.scenario
            .power
            .loads
            .iter()
            .map(|l| {
                let on = match l.when {
                    LoadGate::Always => true,
                    LoadGate::Science => d.mode == AttitudeMode::SmallBodyPointing,
                    LoadGate::Downlink => d.downlink,
                    LoadGate::Burn => burning,
                    LoadGate::Desaturate => d.desat,
                };
                PowerLoad::new(&l.id, l.power_w, on)
            })
            .collect()
    }

    /// Advances one step through the fixed phase order.
    pub fn step(&mut self) -> Result<TelemetryRecord, SimError> {
        let (step, t) = (self.step, self.t);
        self.step_inner().map_err(|cause| SimError::Step { step, t, cause })
    }

    fn step_inner(&mut self) -> Result<TelemetryRecord, StepError> {
        let dt = self.scenario.time.dt_s;
        let t = self.t;
        let mut flags: Vec<&'static str> = Vec::new();

        // (1) environment
        let snap = self.snapshot(t)?;
        let disturbance = self.disturbance(&snap)?;

        // (2) executive
        #[cfg(debug_assertions)]
        let before = self.checksum();
        let inputs = self.inputs(t)?;
        if inputs.miss_distance.is_some() {
            self.next_tcm_eval = t + self.scenario.executive.tcm.period_s;
        }
        self.exec.evaluate_events(t, &inputs);
        let directive = self.dispatch(&snap)?;
        if !self.exec.priority_invariant_holds(t) {
            self.flags.priority_violation += 1;
            flags.push("priority_violation");
        }
        #[cfg(debug_assertions)]
        debug_assert_eq!(before, self.checksum(), "executive phase mutated truth state");

        // (3) guidance, control, allocation
        let cmd = self.guidance(&directive, t)?;
        let u = tracking_controller(&self.att_model, &self.att, &cmd, &self.gains);
        let wing_accel = self.wing_accels(&snap, dt);
        let mut demand = u;
        for (w, a) in self.att_model.wings.iter().zip(wing_accel.iter()) {
            demand += w.momentum_axis() * *a;
        }
        let mut alloc = match allocate_actuators(&self.att_model, &self.att, &demand) {
            Ok(a) => a,
            Err(AttitudeError::Saturated { best_effort, .. }) => {
                self.flags.wheel_saturation += 1;
                flags.push("saturated");
                best_effort
            }
            Err(e) => return Err(e.into()),
        };
        if alloc.overspeed {
            self.flags.wheel_overspeed += 1;
            flags.push("overspeed");
        }
        if directive.desat {
            let (d, limited) =
                desat_command(&self.att_model, &self.att.wheel_rates, dt, self.scenario.executive.desat_torque_fraction);
            alloc.wheel_accel += d.wheel_accel;
            alloc.thruster_torque += d.thruster_torque;
            if limited {
                self.flags.desat_authority_limited += 1;
                flags.push("desat_limited");
            }
        }
        let noise = self.att_model.thrusters.noise_fraction;
        if noise > 0.0 && alloc.thruster_torque.norm() > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.estimate_seed(3));
            for c in alloc.thruster_torque.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *c *= 1.0 + noise * z;
            }
        }
        let att_inputs = AttitudeInputs {
            wheel_accel: alloc.wheel_accel,
            wing_accel,
            thruster_torque: alloc.thruster_torque,
            disturbance,
        };

        // (4) integration
        let n = substeps_for(&self.att_model, &self.att, dt);
        let h = dt / n as f64;
        let wing0 = self.att.wing_rates.clone();
        let mut att = self.att.clone();
        for _ in 0..n {
            att = step_attitude(&self.att_model, &att, &att_inputs, h)?;
        }
        for (j, a) in self.wing_angles.iter_mut().enumerate() {
            *a = wrap(*a + 0.5 * (wing0[j] + att.wing_rates[j]) * dt);
        }
        let thrust = directive.thrust.map(|b| b.mean_thrust(t, dt)).unwrap_or_else(Vector3::zeros);
        let q_mid = self.att.q;
        self.nav = step_nav(&self.nav_model, &self.nav, &q_mid, &thrust, dt)?;
        self.att = att;
        self.delta_v_total += thrust.norm() * dt / self.nav_model.mass_kg;
        self.t = self.scenario.time.epoch_s + (self.step + 1) as f64 * dt;
        let t1 = self.t;
        let snap1 = self.snapshot(t1)?;
        let distance = (snap1.r_sc - snap1.body).norm();
        self.min_distance = self.min_distance.min(distance);

        // (5) power
        let pose = Pose::new(snap1.r_sc, self.att.q);
        let p_solar = crate::power::solar_power_lf(&self.nav_model.solar, &self.arrays, &self.gimbal_angles(), &pose, &Framed::new(snap1.sun))?;
        let loads = self.loads(&directive, thrust.norm() > 0.0);
        let p_load = crate::power::active_load(&loads);
        let p_net = crate::power::net_power(p_solar, &loads, crate::power::NetPowerModel::Lf)?;
        let e_net_wh = p_net * dt / 3600.0;
        let delta = self.battery.soc_delta_lf(e_net_wh);
        let upd = self.battery.apply(delta);
        let adjusted = upd.requested * self.battery.capacity_wh;
        self.energy_scale_wh += adjusted.abs();
        self.expected_energy_wh += if upd.clamped { upd.applied * self.battery.capacity_wh } else { adjusted };
        if upd.clamped {
            self.flags.soc_clamped += 1;
            flags.push("soc_clamped");
        }
        self.min_soc = self.min_soc.min(self.battery.soc);

        // (6) comms
        #[cfg(debug_assertions)]
        let before = self.checksum();
        let to_ground = snap1.ground - snap1.r_sc;
        let boresight = self.att.q.rotate(&Vector3::x());
        let pointing = boresight.dot(&to_ground.normalize()).clamp(-1.0, 1.0).acos();
        let link = carrier_to_noise(&self.link, to_ground.norm(), pointing)?;
        let rate = supportable_data_rate(link.cn0_db_hz, &self.link);
        if rate.clamped {
            self.flags.rate_clamped += 1;
            flags.push("rate_clamped");
        }
        let r_eff = arq_effective_rate(rate.rate_bps, link.cn0_db_hz, &self.arq).unwrap_or(0.0);
        if directive.downlink {
            self.downlinked += self.buffer.downlink_session(r_eff, dt).drained;
        }
        if directive.mode == AttitudeMode::SmallBodyPointing {
            let bytes = self.scenario.comms.science_rate_bps * dt / 8.0;
            let rep = self.buffer.ingest(bytes);
            self.generated += bytes;
            self.dropped += rep.dropped;
            if rep.dropped > 0.0 {
                self.flags.buffer_overflow += 1;
                flags.push("buffer_overflow");
            }
        }
        #[cfg(debug_assertions)]
        debug_assert_eq!(before, self.checksum(), "comms phase mutated truth state");

        // (7) telemetry
        let active = self.exec.active();
        let active_task = active.map(|a| a.kind.as_str()).unwrap_or("none");
        let queue: Vec<&str> = self
            .exec
            .tasks()
            .iter()
            .filter(|q| q.state == TaskState::Active || (q.state == TaskState::Pending && q.not_before <= t))
            .map(|q| q.kind.as_str())
            .collect();
        let target_err = self.att.q.angle_to(&directive.target).to_degrees();
        let rec = TelemetryRecord {
            t: t1,
            step: self.step,
            center: self.nav_model.bodies[self.nav.center].name.clone(),
            r: self.nav.r.into(),
            v: self.nav.v.into(),
            distance_to_body_m: distance,
            delta_v_total_m_s: self.delta_v_total,
            q: self.att.q.to_array(),
            omega: self.att.omega.into(),
            wheel_rates: self.att.wheel_rates.iter().copied().collect(),
            pointing_error_deg: target_err,
            mode: directive.mode.as_str(),
            p_solar_w: p_solar,
            p_load_w: p_load,
            p_net_w: p_net,
            soc: self.battery.soc,
            cn0_db_hz: link.cn0_db_hz,
            rb_bps: rate.rate_bps,
            r_eff_bps: r_eff,
            buffer_fill_bytes: self.buffer.fill_bytes,
            downlinked_bytes: self.downlinked,
            active_task,
            queue: queue.join("|"),
            queue_depth: self.exec.depth(),
            flags,
        };
        self.step += 1;
        Ok(rec)
    }

    pub fn summary(&self, columns: Vec<String>) -> Summary {
        let mut counts: BTreeMap<String, TaskCounts> =
            TaskKind::ALL.iter().map(|k| (k.as_str().to_string(), TaskCounts::default())).collect();
        for e in self.exec.log() {
            let c = counts.get_mut(e.kind.as_str()).expect("all kinds present");
            match e.transition {
                Transition::Enqueued => c.enqueued += 1,
                Transition::Activated => c.activated += 1,
                Transition::Preempted => c.preempted += 1,
                Transition::Completed => c.completed += 1,
                Transition::Rejected => c.rejected += 1,
            }
        }
        let stored = (self.battery.soc - self.soc0) * self.battery.capacity_wh;
        let energy_residual_rel = if self.energy_scale_wh > 0.0 {
            (stored - self.expected_energy_wh).abs() / self.energy_scale_wh
        } else {
            0.0
        };
        let final_distance = self
            .snapshot(self.t)
            .map(|s| (s.r_sc - s.body).norm())
            .unwrap_or(f64::NAN);
        Summary {
            schema_version: super::config::SCHEMA_VERSION,
            scenario: self.scenario.name.clone(),
            seed: self.scenario.seeds.base,
            steps: self.step,
            duration_s: self.t - self.scenario.time.epoch_s,
            tcm_enabled: self.scenario.executive.tcm.enabled,
            initial_distance_m: self.initial_distance,
            final_distance_m: final_distance,
            min_distance_m: self.min_distance,
            total_delta_v_m_s: self.delta_v_total,
            min_soc: self.min_soc,
            final_soc: self.battery.soc,
            first_recharge_t_s: self.first_recharge,
            bytes_generated: self.generated,
            bytes_downlinked: self.downlinked,
            bytes_dropped: self.dropped,
            energy_residual_rel,
            task_counts: counts,
            flags: self.flags.clone(),
            telemetry_columns: columns,
        }
    }
}

fn wrap(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut x = a.rem_euclid(tau);
    if x > std::f64::consts::PI {
        x -= tau;
    }
    x
}

/// +z on the target, +x as close to the Sun as the constraint allows.
fn science_attitude(to_body: &Vector3<f64>, to_sun: &Vector3<f64>) -> Quaternion {
    two_axis_attitude(&Vector3::z(), to_body, &Vector3::x(), to_sun)
}

/// Start state from the approach geometry and the matching arrival target.
fn initial_nav(s: &Scenario, model: &NavModel, target: usize) -> Result<(NavState, TcmTarget), String> {
    let a = &s.navigation.approach;
    let t0 = s.time.epoch_s;
    let t_arrive = s.arrival_time();
    let body = &model.bodies[target];
    let sun = &model.bodies[model.sun];
    let (pb0, vb0) = body.state(t0).map_err(|e| e.to_string())?;
    let pb1 = body.position(t_arrive).map_err(|e| e.to_string())?;
    let r0 = pb0 + a.start_direction.normalize() * a.start_distance_m;
    let standoff_dir = match a.standoff_direction {
        Some(d) => d.normalize(),
        None => (sun.position(t_arrive).map_err(|e| e.to_string())? - pb1).normalize(),
    };
    let r1 = pb1 + standoff_dir * a.standoff_m;
    let normal = pb0.cross(&vb0);
    // arrival at the epoch leaves no transfer to plan; start co-moving
    let v1 = if t_arrive > t0 {
        lambert_solve(&r0, &r1, t_arrive - t0, sun.mu, TransferDirection::Prograde, Some(&normal))
            .map_err(|e| e.to_string())?
            .v1
    } else {
        vb0
    };
    let mut rng = ChaCha8Rng::seed_from_u64(s.seeds.base);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let dir = Vector3::new(draw(), draw(), draw());
    let dv = if dir.norm() > 0.0 { dir.normalize() * a.velocity_error_m_s } else { Vector3::zeros() };
    // the Sun sits at the origin, so heliocentric and inertial coincide
    let x = NavState { t: t0, r: r0, v: v1 + dv, center: model.sun };
    Ok((x, TcmTarget { r: r1, t_arrive }))
}
