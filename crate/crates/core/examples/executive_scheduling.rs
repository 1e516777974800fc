//! Threshold events feeding the priority queue: a downlink in progress is
//! preempted when the battery runs low, then resumes after recharging.

use cruisesim::executive::{Comparison, Event, ExecInputs, Executive, Priorities, TaskKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let events = vec![
        Event::new(TaskKind::Recharge, Comparison::Below, 0.30, 0.05),
        Event::new(TaskKind::Downlink, Comparison::Above, 0.10, 0.02),
    ];
    let mut exec = Executive::new(Priorities::default(), events)?;
    let mut soc: f64 = 0.40;
    let mut fill: f64 = 0.20;
    for step in 0..40 {
        let t = step as f64 * 60.0;
        exec.evaluate_events(t, &ExecInputs { soc: Some(soc), buffer_fill: Some(fill), ..Default::default() });
        let active = exec.schedule(t);
        match active.map(|a| a.kind) {
            Some(TaskKind::Recharge) => {
                soc += 0.03;
                if soc >= 0.9 {
                    exec.complete(t, active.unwrap().id)?;
                }
            }
            Some(TaskKind::Downlink) => {
                fill -= 0.01;
                soc -= 0.02;
                if fill <= 0.0 {
                    exec.complete(t, active.unwrap().id)?;
                }
            }
            _ => soc -= 0.005,
        }
        // pick the next task straight after a completion
        exec.schedule(t);
        assert!(exec.priority_invariant_holds(t));
    }
    for e in exec.log() {
        println!("t {:>6.0} s  task {}  {:<11} {:?}", e.t, e.task_id, e.kind.as_str(), e.transition);
    }
    println!("final SoC {soc:.3}, buffer {:.3}", fill.max(0.0));
    Ok(())
}
