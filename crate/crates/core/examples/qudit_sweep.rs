//! Seeded Haar-random qudit states for several dimensions, ideal and with
//! the SLM noise preset.
//!
//! Usage: `cargo run --release --example qudit_sweep -- [states_per_dimension]`

use qudit_slm::harness::{run_sweep, ExperimentConfig, Overrides};

fn main() -> qudit_slm::Result<()> {
    let n: usize = std::env::args().nth(1).map(|a| a.parse().expect("count must be an integer")).unwrap_or(3);
    for noise in ["off", "pluto-like"] {
        let text = format!(
            "seed = 7\nout = \"runs/qudit_example/{noise}\"\n[noise]\npreset = {noise:?}\n\
             [sweep]\nkind = \"qudit\"\ndimensions = [3, 4, 5, 7]\n\
             counts = {{ \"3\" = {n}, \"4\" = {n}, \"5\" = {n}, \"7\" = {n} }}\n"
        );
        let report = run_sweep(&ExperimentConfig::parse(&text, &Overrides::default())?)?;
        println!("noise {noise}");
        for a in &report.aggregates {
            let reference = a.experimental_mean.map(|m| format!("{m:.3}")).unwrap_or_else(|| "-".into());
            println!(
                "  D={} {:>6}: mean F {:.5} (min {:.5}), experimental reference {reference}",
                a.dimension, a.grating, a.mean_fidelity, a.min_fidelity
            );
        }
    }
    Ok(())
}
