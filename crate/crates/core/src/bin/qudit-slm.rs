use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qudit_slm::harness::{self, ExperimentConfig, Overrides};
use qudit_slm::{Error, GratingKind, Result};

#[derive(Parser)]
#[command(name = "qudit-slm", version, about = "Simulated single-SLM preparation and tomography of spatial qudits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the mask and write near/far-field curves with the analytic prediction.
    Prepare(Common),
    /// Run the full pipeline and reconstruct the prepared state.
    Tomo(Common),
    /// Sweep the Bloch sphere or random qudit states under both gratings.
    Sweep(Common),
    /// Efficiency gain over a two-modulator scheme.
    Efficiency {
        #[command(flatten)]
        common: Common,
        /// Amplitude-stage efficiency of the two-modulator scheme.
        #[arg(long)]
        eta: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["binary", "blazed"])]
    grating: Option<String>,
    #[arg(long)]
    dimension: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Noise preset name or `off`.
    #[arg(long)]
    noise: Option<String>,
}

impl Common {
    fn load(&self, required: bool) -> Result<ExperimentConfig> {
        let overrides = Overrides {
            grating: self.grating.as_deref().map(str::parse::<GratingKind>).transpose()?,
            dimension: self.dimension,
            seed: self.seed,
            out: self.out.clone(),
            noise: self.noise.clone(),
        };
        match &self.config {
            Some(path) => ExperimentConfig::load(path, &overrides),
            None if required => Err(Error::Config("--config <path> is required".into())),
            None => ExperimentConfig::parse("", &overrides),
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prepare(c) => {
            let cfg = c.load(true)?;
            let art = harness::run_prepare(&cfg)?;
            let powers: Vec<String> = art.preparation.slit_powers.iter().map(|p| format!("{p:.4}")).collect();
            println!("slit powers: {}", powers.join(" "));
            println!("iris throughput: {:.4}", art.preparation.iris_throughput);
            println!("artifacts written to {}", show(&art.out));
        }
        Command::Tomo(c) => {
            let cfg = c.load(true)?;
            let r = harness::run_tomography(&cfg)?;
            println!("fidelity: {:.6}", r.fidelity);
            println!("reconstruction: {} ({} after {} iterations)", r.mode, r.stop_reason, r.iterations);
            println!("report written to {}", show(&cfg.out.join(harness::REPORT_JSON)));
        }
        Command::Sweep(c) => {
            let cfg = c.load(true)?;
            let report = harness::run_sweep(&cfg)?;
            println!("{:>3} {:>7} {:>6} {:>9} {:>9} {:>9} {:>12}", "D", "grating", "states", "mean F", "min F", "max F", "experimental");
            for a in &report.aggregates {
                let exp = a.experimental_mean.map(|v| format!("{v:.3}")).unwrap_or_default();
                println!(
                    "{:>3} {:>7} {:>6} {:>9.5} {:>9.5} {:>9.5} {:>12}",
                    a.dimension, a.grating, a.count, a.mean_fidelity, a.min_fidelity, a.max_fidelity, exp
                );
            }
            println!("rows written to {}", show(&report.out.join(harness::ROWS_FILE)));
        }
        Command::Efficiency { common, eta } => {
            let cfg = common.load(false)?;
            let eta = eta.unwrap_or(cfg.eta);
            println!("efficiency gain at eta = {eta}: {}x", harness::efficiency_comparison(eta)?);
        }
    }
    Ok(())
}

fn show(p: &Path) -> String {
    p.display().to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
