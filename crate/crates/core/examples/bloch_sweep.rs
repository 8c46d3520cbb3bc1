//! A small Bloch-sphere sweep through the full pipeline, both gratings.
//!
//! Usage: `cargo run --release --example bloch_sweep -- [points] [out_dir]`

use qudit_slm::harness::{run_sweep, ExperimentConfig, Overrides};

fn main() -> qudit_slm::Result<()> {
    let mut args = std::env::args().skip(1);
    let points: usize = args.next().map(|a| a.parse().expect("points must be an integer")).unwrap_or(24);
    let out = args.next().unwrap_or_else(|| "runs/bloch_example".into());
    let text = format!("seed = 2013\nout = {out:?}\n[sweep]\nkind = \"bloch\"\npoints = {points}\n");
    let config = ExperimentConfig::parse(&text, &Overrides::default())?;

    let report = run_sweep(&config)?;
    for a in &report.aggregates {
        println!(
            "{:>6}: {} states, mean F {:.5}, min {:.5}, max {:.5}",
            a.grating, a.count, a.mean_fidelity, a.min_fidelity, a.max_fidelity
        );
    }
    println!("rows, aggregates and table in {}", report.out.display());
    Ok(())
}
