//! Photon-efficiency gain of preparing states with a single phase-only SLM
//! over amplitude filtering with a transmission of `eta`.

use qudit_slm::harness::efficiency_comparison;

fn main() -> qudit_slm::Result<()> {
    for eta in [0.5, 0.25, 0.1, 0.05, 0.01] {
        println!("eta = {eta:<5} gain = {:.1}", efficiency_comparison(eta)?);
    }
    Ok(())
}
