//! Event-triggered priority executive: latching threshold events, a
//! preemptive single-active-task queue and the charging-attitude search.

mod charging;
mod pointing;

pub use charging::{charging_attitude, icosphere, ChargingProblem, ChargingSolution};
pub use pointing::two_axis_attitude;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attitude::AttitudeCommand;
use crate::navigation::PropulsionCommand;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExecError {
    #[error("invalid {what}: {why}")]
    Invalid { what: String, why: String },
    #[error("unknown task id {0}")]
    UnknownTask(u64),
}

fn invalid(what: impl Into<String>, why: impl Into<String>) -> ExecError {
    ExecError::Invalid { what: what.into(), why: why.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Recharge,
    Desaturate,
    ExecuteTcm,
    Downlink,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [TaskKind::Recharge, TaskKind::Desaturate, TaskKind::ExecuteTcm, TaskKind::Downlink];

    pub fn as_str(&self) -> &'static str {
        match self {
            TaskKind::Recharge => "recharge",
            TaskKind::Desaturate => "desaturate",
            TaskKind::ExecuteTcm => "execute_tcm",
            TaskKind::Downlink => "downlink",
        }
    }
}

/// Lower value is more urgent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Priorities {
    pub recharge: u32,
    pub desaturate: u32,
    pub execute_tcm: u32,
    pub downlink: u32,
}

impl Default for Priorities {
    fn default() -> Self {
        Self { recharge: 0, desaturate: 1, execute_tcm: 2, downlink: 3 }
    }
}

impl Priorities {
    pub fn validate(&self) -> Result<(), ExecError> {
        if !(self.recharge < self.desaturate && self.desaturate < self.execute_tcm && self.execute_tcm < self.downlink) {
            return Err(invalid("priorities", "must order recharge < desaturate < execute_tcm < downlink"));
        }
        Ok(())
    }

    pub fn of(&self, kind: TaskKind) -> u32 {
        match kind {
            TaskKind::Recharge => self.recharge,
            TaskKind::Desaturate => self.desaturate,
            TaskKind::ExecuteTcm => self.execute_tcm,
            TaskKind::Downlink => self.downlink,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskState {
    Pending,
    Active,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Payload {
    None,
    Attitude(AttitudeCommand),
    Propulsion(PropulsionCommand),
    /// Downlink session lasting until the given time.
    Session { until: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Task {
    pub id: u64,
    pub kind: TaskKind,
    pub priority: u32,
    pub state: TaskState,
    pub payload: Payload,
    pub enqueued_at: f64,
    /// Earliest time the task may (re)activate after a rejection.
    pub not_before: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Below,
    Above,
}

/// Threshold event that latches after firing. It re-arms when the signal
/// clears the threshold by `band`, or when the task it spawned completes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub task: TaskKind,
    pub comparison: Comparison,
    pub threshold: f64,
    pub band: f64,
    #[serde(skip)]
    pub armed: bool,
    #[serde(skip)]
    pub last_fired: Option<f64>,
}

impl Event {
    pub fn new(task: TaskKind, comparison: Comparison, threshold: f64, band: f64) -> Self {
        Self { task, comparison, threshold, band, armed: true, last_fired: None }
    }

    fn triggered(&self, v: f64) -> bool {
        match self.comparison {
            Comparison::Below => v < self.threshold,
            Comparison::Above => v > self.threshold,
        }
    }

    fn cleared(&self, v: f64) -> bool {
        match self.comparison {
            Comparison::Below => v > self.threshold + self.band,
            Comparison::Above => v < self.threshold - self.band,
        }
    }

    /// Updates the latch with a new sample; true when the event fires.
    pub fn sample(&mut self, t: f64, value: Option<f64>) -> bool {
        let Some(v) = value else { return false };
        if !self.armed {
            if self.cleared(v) {
                self.armed = true;
            }
            return false;
        }
        if self.triggered(v) {
            self.armed = false;
            self.last_fired = Some(t);
            return true;
        }
        false
    }
}

/// Monitored signals for one evaluation; `None` means not observable now
/// (e.g. no ground window, or outside the TCM evaluation cadence).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExecInputs {
    pub soc: Option<f64>,
    pub wheel_rate: Option<f64>,
    pub miss_distance: Option<f64>,
    pub buffer_fill: Option<f64>,
}

impl ExecInputs {
    fn get(&self, kind: TaskKind) -> Option<f64> {
        match kind {
            TaskKind::Recharge => self.soc,
            TaskKind::Desaturate => self.wheel_rate,
            TaskKind::ExecuteTcm => self.miss_distance,
            TaskKind::Downlink => self.buffer_fill,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    Enqueued,
    Activated,
    Preempted,
    Completed,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaskLogEntry {
    pub t: f64,
    pub task_id: u64,
    pub kind: TaskKind,
    pub transition: Transition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Executive {
    pub priorities: Priorities,
    pub events: Vec<Event>,
    queue: Vec<Task>,
    next_id: u64,
    log: Vec<TaskLogEntry>,
}

impl Executive {
    pub fn new(priorities: Priorities, events: Vec<Event>) -> Result<Self, ExecError> {
        priorities.validate()?;
        for e in &events {
            if !(e.band >= 0.0) || !e.threshold.is_finite() {
                return Err(invalid(format!("{} event", e.task.as_str()), "needs a finite threshold and non-negative band"));
            }
        }
        Ok(Self { priorities, events, queue: Vec::new(), next_id: 0, log: Vec::new() })
    }

    pub fn tasks(&self) -> &[Task] {
        &self.queue
    }

    pub fn log(&self) -> &[TaskLogEntry] {
        &self.log
    }

    pub fn take_log(&mut self) -> Vec<TaskLogEntry> {
        std::mem::take(&mut self.log)
    }

    /// Tasks not yet done.
    pub fn depth(&self) -> usize {
        self.queue.iter().filter(|t| t.state != TaskState::Done).count()
    }

    pub fn active(&self) -> Option<&Task> {
        self.queue.iter().find(|t| t.state == TaskState::Active)
    }

    pub fn active_mut(&mut self) -> Option<&mut Task> {
        self.queue.iter_mut().find(|t| t.state == TaskState::Active)
    }

    fn record(&mut self, t: f64, task_id: u64, kind: TaskKind, transition: Transition) {
        self.log.push(TaskLogEntry { t, task_id, kind, transition });
    }

    /// Enqueues one task per firing event, skipping kinds already queued.
    pub fn evaluate_events(&mut self, t: f64, inputs: &ExecInputs) -> Vec<TaskKind> {
        let mut fired = Vec::new();
        for i in 0..self.events.len() {
            let kind = self.events[i].task;
            if self.events[i].sample(t, inputs.get(kind)) && self.enqueue(t, kind, Payload::None).is_some() {
                fired.push(kind);
            }
        }
        fired
    }

    /// Adds a task unless one of the same kind is still open.
    pub fn enqueue(&mut self, t: f64, kind: TaskKind, payload: Payload) -> Option<u64> {
        if self.queue.iter().any(|q| q.kind == kind && q.state != TaskState::Done) {
            return None;
        }
        let id = self.next_id;
        self.next_id += 1;
        self.queue.push(Task {
            id,
            kind,
            priority: self.priorities.of(kind),
            state: TaskState::Pending,
            payload,
            enqueued_at: t,
            not_before: f64::NEG_INFINITY,
        });
        self.record(t, id, kind, Transition::Enqueued);
        Some(id)
    }

    fn eligible(task: &Task, t: f64) -> bool {
        task.state == TaskState::Active || (task.state == TaskState::Pending && task.not_before <= t)
    }

    /// Activates the most urgent eligible task, preempting the current one
    /// if it is less urgent. Ties go to the earlier enqueue.
    pub fn schedule(&mut self, t: f64) -> Option<Task> {
        let best = self
            .queue
            .iter()
            .filter(|q| Self::eligible(q, t))
            .min_by_key(|q| (q.priority, q.id))
            .map(|q| q.id)?;
        if let Some(cur) = self.active().map(|a| a.id) {
            if cur == best {
                return self.active().copied();
            }
            let kind = {
                let a = self.queue.iter_mut().find(|q| q.id == cur).unwrap();
                a.state = TaskState::Pending;
                a.kind
            };
            self.record(t, cur, kind, Transition::Preempted);
        }
        let task = self.queue.iter_mut().find(|q| q.id == best).unwrap();
        task.state = TaskState::Active;
        let out = *task;
        self.record(t, out.id, out.kind, Transition::Activated);
        Some(out)
    }

    pub fn complete(&mut self, t: f64, id: u64) -> Result<(), ExecError> {
        let task = self.queue.iter_mut().find(|q| q.id == id).ok_or(ExecError::UnknownTask(id))?;
        task.state = TaskState::Done;
        let kind = task.kind;
        self.record(t, id, kind, Transition::Completed);
        for e in self.events.iter_mut().filter(|e| e.task == kind) {
            e.armed = true;
        }
        self.queue.retain(|q| q.state != TaskState::Done);
        Ok(())
    }

    /// Returns a task to Pending, ineligible until `t + backoff`.
    pub fn reject(&mut self, t: f64, id: u64, backoff: f64) -> Result<(), ExecError> {
        let task = self.queue.iter_mut().find(|q| q.id == id).ok_or(ExecError::UnknownTask(id))?;
        task.state = TaskState::Pending;
        task.not_before = t + backoff;
        let kind = task.kind;
        self.record(t, id, kind, Transition::Rejected);
        Ok(())
    }

    /// The active task is at least as urgent as every other eligible task.
    pub fn priority_invariant_holds(&self, t: f64) -> bool {
        let active: Vec<_> = self.queue.iter().filter(|q| q.state == TaskState::Active).collect();
        match active.as_slice() {
            [] => !self.queue.iter().any(|q| Self::eligible(q, t)),
            [a] => self.queue.iter().filter(|q| Self::eligible(q, t)).all(|q| a.priority <= q.priority),
            _ => false,
        }
    }
}
