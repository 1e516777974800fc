//! Runs the bundled cruise scenario for its first simulated hours and
//! prints the summary. Pass a duration in seconds to change the span.

use std::path::Path;

use cruisesim::sim::{run, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let duration_s: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(12.0 * 3600.0);
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/cruise_approach.toml");
    // keep the planned arrival at the end of the full mission
    let scenario = Scenario::from_path(&path, &[format!("time.duration_s={duration_s}"), "navigation.approach.arrival_s=129600".into()])?;
    let mut summary = run(&scenario, std::io::sink())?.summary;
    summary.telemetry_columns.clear();
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
