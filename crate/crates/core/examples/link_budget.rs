//! X-band downlink from 1.5 AU: C/N0, supportable rate and ARQ throughput
//! against window size.

use cruisesim::comms::{arq_effective_rate, carrier_to_noise, supportable_data_rate, ArqConfig, FerTable, LinkBudget};
use cruisesim::environment::AU;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let budget = LinkBudget { g_over_t_db_k: 60.0, ..LinkBudget::default() };
    for (range, err_deg) in [(0.5 * AU, 0.0), (1.5 * AU, 0.0), (1.5 * AU, 0.03)] {
        let link = carrier_to_noise(&budget, range, f64::to_radians(err_deg))?;
        let rate = supportable_data_rate(link.cn0_db_hz, &budget);
        println!(
            "range {:.2} AU, error {err_deg} deg: FSL {:.2} dB, pointing {:.2} dB, C/N0 {:.2} dB-Hz, R_b {:.0} bps",
            range / AU,
            link.free_space_loss_db,
            link.pointing_loss_db,
            link.cn0_db_hz,
            rate.rate_bps
        );
    }
    let link = carrier_to_noise(&budget, 1.5 * AU, 0.0)?;
    let rate = supportable_data_rate(link.cn0_db_hz, &budget);
    let op = budget.required_ebn0_db - budget.coding_gain_db;
    for window in [1, 2, 4, 8] {
        let arq = ArqConfig { window, ack_fer: 0.01, fer: FerTable::sigmoid(op, 1e-2, 0.25) };
        println!("window {window}: R_eff {:.0} bps", arq_effective_rate(rate.rate_bps, link.cn0_db_hz, &arq)?);
    }
    Ok(())
}
