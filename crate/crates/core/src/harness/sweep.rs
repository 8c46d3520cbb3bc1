//! Bloch-sphere and qudit sweeps with paired gratings.

use std::collections::{BTreeMap, HashSet};
use std::fs::OpenOptions;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, SweepKind, SweepSpec};
use super::pipeline::{run_pipeline, Setup, TomographySettings};
use crate::error::{Error, Result};
use crate::formats::{fmt_f64, write_json};
use crate::mask::{GratingKind, GratingSpec};
use crate::state::{sample_bloch_sphere, BlochPoint, QuditState, SPHERE_SAMPLING_SCHEME};

pub const ROWS_FILE: &str = "rows.csv";
pub const AGGREGATES_FILE: &str = "aggregates.csv";
pub const TABLE_FILE: &str = "table.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

const ROW_HEADER: [&str; 11] = [
    "state_id", "dimension", "grating", "theta", "phi", "digest", "state_seed", "fidelity", "stop_reason", "iterations", "mode",
];

/// Experimental mean fidelities per dimension `(binary, blazed)`, shown
/// next to simulated means for comparison only.
pub const EXPERIMENTAL_MEANS: [(usize, f64, f64); 5] =
    [(2, 0.996, 0.996), (3, 0.995, 0.996), (4, 0.985, 0.991), (5, 0.968, 0.971), (7, 0.970, 0.977)];

pub fn experimental_mean(dimension: usize, grating: GratingKind) -> Option<f64> {
    EXPERIMENTAL_MEANS.iter().find(|e| e.0 == dimension).map(|e| match grating {
        GratingKind::Binary => e.1,
        GratingKind::Blazed => e.2,
    })
}

/// Per-job seed from the master seed and a stable job name.
pub fn derive_seed(master: u64, name: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(name.as_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("8 bytes"))
}

/// One target state of a sweep; every state runs under each grating.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepState {
    pub id: String,
    pub state: QuditState,
    pub bloch: Option<BlochPoint>,
    /// Seed the state was drawn from (qudit sweeps).
    pub state_seed: Option<u64>,
}

pub fn sweep_states(spec: &SweepSpec, master_seed: u64) -> Result<Vec<SweepState>> {
    match spec.kind {
        SweepKind::Bloch => Ok(sample_bloch_sphere(spec.bloch_points)?
            .into_iter()
            .enumerate()
            .map(|(i, p)| SweepState { id: format!("bloch-{i:04}"), state: p.to_state(), bloch: Some(p), state_seed: None })
            .collect()),
        SweepKind::Qudit => {
            let mut out = Vec::new();
            for &d in &spec.dimensions {
                for i in 0..spec.count_for(d)? {
                    let id = format!("d{d}-{i:04}");
                    let seed = derive_seed(master_seed, &id);
                    let state = QuditState::haar_random(d, &mut ChaCha8Rng::seed_from_u64(seed))?;
                    out.push(SweepState { id, state, bloch: None, state_seed: Some(seed) });
                }
            }
            Ok(out)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub state_id: String,
    pub dimension: usize,
    pub grating: String,
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    pub digest: String,
    pub state_seed: Option<u64>,
    pub fidelity: f64,
    pub stop_reason: String,
    pub iterations: usize,
    pub mode: String,
}

impl SweepRow {
    fn record(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        vec![
            self.state_id.clone(),
            self.dimension.to_string(),
            self.grating.clone(),
            opt(self.theta),
            opt(self.phi),
            self.digest.clone(),
            self.state_seed.map(|s| s.to_string()).unwrap_or_default(),
            fmt_f64(self.fidelity),
            self.stop_reason.clone(),
            self.iterations.to_string(),
            self.mode.clone(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub dimension: usize,
    pub grating: String,
    pub count: usize,
    pub mean_fidelity: f64,
    pub min_fidelity: f64,
    pub max_fidelity: f64,
    pub experimental_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub aggregates: Vec<Aggregate>,
    pub out: PathBuf,
}

impl SweepReport {
    pub fn aggregate(&self, dimension: usize, grating: GratingKind) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.dimension == dimension && a.grating == grating.name())
    }
}

/// Means, minima and maxima per (dimension, grating), summing in row order.
pub fn aggregate_rows(rows: &[SweepRow]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(usize, String), Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.dimension, r.grating.clone())).or_default().push(r.fidelity);
    }
    groups
        .into_iter()
        .map(|((dimension, grating), f)| {
            let kind = grating.parse::<GratingKind>().ok();
            Aggregate {
                dimension,
                count: f.len(),
                mean_fidelity: f.iter().sum::<f64>() / f.len() as f64,
                min_fidelity: f.iter().cloned().fold(f64::INFINITY, f64::min),
                max_fidelity: f.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                experimental_mean: kind.and_then(|k| experimental_mean(dimension, k)),
                grating,
            }
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    seed: u64,
    kind: &'a str,
    sphere_sampling: Option<&'a str>,
    dimensions: &'a [usize],
    states: BTreeMap<usize, usize>,
    gratings: Vec<&'a str>,
    noise: &'a str,
    subsampling: usize,
    reconstruction: &'a str,
    artifacts: [&'a str; 3],
}

/// Runs every (state, grating) pair, appending rows to `rows.csv` in a
/// fixed order and flushing after each batch. Rows already present from an
/// interrupted run are kept and their jobs skipped.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepReport> {
    let spec = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("a [sweep] section is required for this command".into()))?;
    std::fs::create_dir_all(&config.out)?;
    let states = sweep_states(spec, config.seed)?;
    let mut counts = BTreeMap::new();
    for s in &states {
        *counts.entry(s.state.dimension()).or_insert(0) += 1;
    }
    let dims: Vec<usize> = counts.keys().copied().collect();
    let manifest = Manifest {
        command: "sweep",
        seed: config.seed,
        kind: match spec.kind {
            SweepKind::Bloch => "bloch",
            SweepKind::Qudit => "qudit",
        },
        sphere_sampling: (spec.kind == SweepKind::Bloch).then_some(SPHERE_SAMPLING_SCHEME),
        dimensions: &dims,
        states: counts,
        gratings: spec.gratings.iter().map(|g| g.name()).collect(),
        noise: &config.noise_label,
        subsampling: config.setup.simulation.subsampling,
        reconstruction: config.tomography.mode.name(),
        artifacts: [ROWS_FILE, AGGREGATES_FILE, TABLE_FILE],
    };
    write_json(&config.out.join(MANIFEST_FILE), &manifest)?;

    let rows_path = config.out.join(ROWS_FILE);
    let mut rows = read_complete_rows(&rows_path)?;
    let done: HashSet<(String, String)> = rows.iter().map(|r| (r.state_id.clone(), r.grating.clone())).collect();
    let jobs: Vec<(&SweepState, GratingKind)> = states
        .iter()
        .flat_map(|s| spec.gratings.iter().map(move |g| (s, *g)))
        .filter(|(s, g)| !done.contains(&(s.id.clone(), g.name().to_string())))
        .collect();

    let mut writer = open_rows(&rows_path, rows.is_empty())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let batch = pool.current_num_threads().max(1) * 2;
    for chunk in jobs.chunks(batch) {
        let results: Vec<Result<SweepRow>> =
            pool.install(|| chunk.par_iter().map(|(s, g)| run_job(config, s, *g)).collect());
        for r in results {
            let row = r?;
            writer.write_record(row.record())?;
            writer.flush()?;
            rows.push(row);
        }
        log::info!("sweep: {} rows complete", rows.len());
    }
    drop(writer);

    // restore the canonical job order regardless of resume history
    let order: BTreeMap<(String, String), usize> = states
        .iter()
        .flat_map(|s| spec.gratings.iter().map(move |g| (s.id.clone(), g.name().to_string())))
        .enumerate()
        .map(|(i, k)| (k, i))
        .collect();
    rows.retain(|r| order.contains_key(&(r.state_id.clone(), r.grating.clone())));
    rows.sort_by_key(|r| order[&(r.state_id.clone(), r.grating.clone())]);

    let aggregates = aggregate_rows(&rows);
    write_aggregates(&config.out.join(AGGREGATES_FILE), &aggregates)?;
    write_table(&config.out.join(TABLE_FILE), &aggregates)?;
    Ok(SweepReport { rows, aggregates, out: config.out.clone() })
}

fn run_job(config: &ExperimentConfig, s: &SweepState, grating: GratingKind) -> Result<SweepRow> {
    let d = s.state.dimension();
    let geometry = config.setup.geometry.with_dimension(d)?;
    let spec = match grating {
        GratingKind::Binary => GratingSpec::binary(),
        GratingKind::Blazed if config.setup.grating.kind == GratingKind::Blazed => config.setup.grating,
        GratingKind::Blazed => GratingSpec::of_kind(GratingKind::Blazed),
    };
    let setup = Setup { geometry, grating: spec, ..config.setup.clone() };
    let tomo: &TomographySettings = &config.tomography;
    let seed = derive_seed(config.seed, &format!("{}/{}", s.id, grating.name()));
    let out = run_pipeline(&s.state, &setup, tomo, seed)?;
    Ok(SweepRow {
        state_id: s.id.clone(),
        dimension: d,
        grating: grating.name().into(),
        theta: s.bloch.map(|b| b.theta),
        phi: s.bloch.map(|b| b.phi),
        digest: s.state.digest(),
        state_seed: s.state_seed,
        fidelity: out.fidelity,
        stop_reason: out.reconstruction.stop_reason().into(),
        iterations: out.reconstruction.iterations(),
        mode: out.reconstruction.mode.name().into(),
    })
}

/// Reads rows written by an earlier run, discarding a trailing partial line.
pub fn read_complete_rows(path: &Path) -> Result<Vec<SweepRow>> {
    let Ok(mut text) = std::fs::read_to_string(path) else {
        return Ok(Vec::new());
    };
    if !text.ends_with('\n') {
        let keep = text.rfind('\n').map(|i| i + 1).unwrap_or(0);
        text.truncate(keep);
        std::fs::write(path, &text)?;
    }
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    if reader.headers()?.iter().collect::<Vec<_>>() != ROW_HEADER {
        return Err(Error::Format(format!("{} has an unexpected header", path.display())));
    }
    let mut rows = Vec::new();
    for rec in reader.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

fn open_rows(path: &Path, fresh: bool) -> Result<csv::Writer<std::fs::File>> {
    let file = if fresh {
        std::fs::File::create(path)?
    } else {
        OpenOptions::new().append(true).open(path)?
    };
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    if fresh {
        w.write_record(ROW_HEADER)?;
        w.flush()?;
    }
    Ok(w)
}

fn write_aggregates(path: &Path, aggregates: &[Aggregate]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "dimension", "grating", "count", "mean_fidelity", "min_fidelity", "max_fidelity", "experimental_mean",
    ])?;
    for a in aggregates {
        w.write_record([
            a.dimension.to_string(),
            a.grating.clone(),
            a.count.to_string(),
            fmt_f64(a.mean_fidelity),
            fmt_f64(a.min_fidelity),
            fmt_f64(a.max_fidelity),
            a.experimental_mean.map(fmt_f64).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One column per dimension; rows for state counts, simulated means per
/// grating, and the experimental means for comparison.
fn write_table(path: &Path, aggregates: &[Aggregate]) -> Result<()> {
    let dims: Vec<usize> = aggregates.iter().map(|a| a.dimension).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["quantity".to_string()];
    header.extend(dims.iter().map(|d| format!("D={d}")));
    w.write_record(&header)?;
    let cell = |d: usize, g: GratingKind, f: &dyn Fn(&Aggregate) -> String| {
        aggregates.iter().find(|a| a.dimension == d && a.grating == g.name()).map(f).unwrap_or_default()
    };
    let states: Vec<String> = dims
        .iter()
        .map(|&d| aggregates.iter().find(|a| a.dimension == d).map(|a| a.count.to_string()).unwrap_or_default())
        .collect();
    let rows: [(&str, Vec<String>); 5] = [
        ("states_per_grating", states),
        ("mean_fidelity_binary", dims.iter().map(|&d| cell(d, GratingKind::Binary, &|a| format!("{:.4}", a.mean_fidelity))).collect()),
        ("mean_fidelity_blazed", dims.iter().map(|&d| cell(d, GratingKind::Blazed, &|a| format!("{:.4}", a.mean_fidelity))).collect()),
        ("experimental_binary", dims.iter().map(|&d| experimental_mean(d, GratingKind::Binary).map(|v| format!("{v:.3}")).unwrap_or_default()).collect()),
        ("experimental_blazed", dims.iter().map(|&d| experimental_mean(d, GratingKind::Blazed).map(|v| format!("{v:.3}")).unwrap_or_default()).collect()),
    ];
    for (name, cells) in rows {
        let mut rec = vec![name.to_string()];
        rec.extend(cells);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
