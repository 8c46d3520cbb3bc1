//! The `prepare`, `tomo` and `efficiency` workflows.

use std::path::PathBuf;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::pipeline::{prepare, run_pipeline, Preparation, Setup};
use crate::error::{Error, Result};
use crate::formats::{
    write_curve_csv, write_json, write_pgm, write_slit_powers_csv, MaskSidecar, MatrixDoc, RecordDoc, StateDoc,
};
use crate::mask::render_mask_gray;
use crate::optics::analytic::multi_slit_intensity;
use crate::optics::noise::GRAY_LEVELS;
use crate::optics::IntensityCurve;
use crate::state::QuditState;
use crate::tomography::{log_likelihood, PhaseFit};

pub const MASK_IMAGE: &str = "mask.pgm";
pub const MASK_SIDECAR: &str = "mask.json";
pub const NEAR_CSV: &str = "near_field.csv";
pub const FAR_CSV: &str = "far_field.csv";
pub const PREDICTION_CSV: &str = "far_field_prediction.csv";
pub const SLIT_POWERS_CSV: &str = "slit_powers.csv";
pub const STATE_JSON: &str = "state.json";
pub const REPORT_JSON: &str = "report.json";
pub const RHO_JSON: &str = "rho.json";
pub const RECORD_JSON: &str = "record.json";
pub const MANIFEST_JSON: &str = "manifest.json";

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    seed: u64,
    dimension: usize,
    grating: &'a str,
    levels: usize,
    noise: &'a str,
    subsampling: usize,
    state_digest: String,
    artifacts: &'a [&'a str],
}

fn write_manifest(config: &ExperimentConfig, command: &str, state: &QuditState, artifacts: &[&str]) -> Result<()> {
    std::fs::create_dir_all(&config.out)?;
    let m = Manifest {
        command,
        seed: config.seed,
        dimension: config.setup.geometry.dimension,
        grating: config.setup.grating.kind.name(),
        levels: config.setup.grating.levels,
        noise: &config.noise_label,
        subsampling: config.setup.simulation.subsampling,
        state_digest: state.digest(),
        artifacts,
    };
    write_json(&config.out.join(MANIFEST_JSON), &m)
}

#[derive(Debug, Clone)]
pub struct PrepareArtifacts {
    pub out: PathBuf,
    pub preparation: Preparation,
    /// Far-field curve restricted to the iris, normalized to peak 1.
    pub far: IntensityCurve,
    pub prediction: IntensityCurve,
    pub near: IntensityCurve,
}

fn normalized(curve: &IntensityCurve, keep: impl Fn(f64) -> bool) -> IntensityCurve {
    let idx: Vec<usize> = (0..curve.len()).filter(|&i| keep(curve.positions_um[i])).collect();
    let peak = idx.iter().map(|&i| curve.intensity[i]).fold(0.0, f64::max);
    let scale = if peak > 0.0 { 1.0 / peak } else { 0.0 };
    IntensityCurve {
        positions_um: idx.iter().map(|&i| curve.positions_um[i]).collect(),
        intensity: idx.iter().map(|&i| curve.intensity[i] * scale).collect(),
    }
}

/// Analytic far-field pattern of `state` at the positions of `like`,
/// normalized to peak 1.
pub fn analytic_prediction(state: &QuditState, setup: &Setup, like: &IntensityCurve) -> IntensityCurve {
    let amps: Vec<_> = state.amplitudes().iter().copied().collect();
    let raw = IntensityCurve {
        positions_um: like.positions_um.clone(),
        intensity: like
            .positions_um
            .iter()
            .map(|&u| multi_slit_intensity(&amps, &setup.geometry, &setup.optics, u))
            .collect(),
    };
    normalized(&raw, |_| true)
}

/// Writes the mask image and sidecar, the near- and far-field intensity
/// curves, the analytic far-field prediction and the slit powers.
pub fn run_prepare(config: &ExperimentConfig) -> Result<PrepareArtifacts> {
    let state = config.target_state()?;
    let artifacts = [MASK_IMAGE, MASK_SIDECAR, NEAR_CSV, FAR_CSV, PREDICTION_CSV, SLIT_POWERS_CSV, STATE_JSON];
    write_manifest(config, "prepare", &state, &artifacts)?;
    let prep = prepare(&state, &config.setup, config.seed)?;
    let out = &config.out;

    write_pgm(&out.join(MASK_IMAGE), &render_mask_gray(&prep.mask, GRAY_LEVELS)?)?;
    write_json(&out.join(MASK_SIDECAR), &MaskSidecar::new(&prep.mask, MASK_IMAGE, GRAY_LEVELS))?;
    let radius = config.setup.iris().radius_um;
    let far = normalized(&prep.far_profile, |y| y.abs() <= radius);
    let near = normalized(&prep.near_curve, |_| true);
    let prediction = analytic_prediction(&state, &config.setup, &far);
    write_curve_csv(&out.join(NEAR_CSV), &near)?;
    write_curve_csv(&out.join(FAR_CSV), &far)?;
    write_curve_csv(&out.join(PREDICTION_CSV), &prediction)?;
    write_slit_powers_csv(&out.join(SLIT_POWERS_CSV), &prep.slit_powers)?;
    write_json(&out.join(STATE_JSON), &StateDoc::from_state(&state))?;
    Ok(PrepareArtifacts { out: out.clone(), preparation: prep, far, prediction, near })
}

#[derive(Debug, Clone, Serialize)]
pub struct TomographyReport {
    pub fidelity: f64,
    pub dimension: usize,
    pub grating: String,
    pub noise: String,
    pub mode: String,
    pub stop_reason: String,
    pub iterations: usize,
    pub log_likelihood: f64,
    pub final_update_norm: Option<f64>,
    pub xi: Vec<f64>,
    pub slit_powers: Vec<f64>,
    /// `arg ρ̂_{ℓ0}`, the reconstructed phase of each slit relative to slit 0.
    pub relative_phases: Vec<f64>,
    pub fit_phases: Option<Vec<f64>>,
    pub fit_residual: Option<f64>,
    pub purity: f64,
    pub target: StateDoc,
    pub rho: MatrixDoc,
}

/// Full pipeline through reconstruction; writes the report, `ρ̂` and the
/// measurement record.
pub fn run_tomography(config: &ExperimentConfig) -> Result<TomographyReport> {
    let state = config.target_state()?;
    write_manifest(config, "tomo", &state, &[REPORT_JSON, RHO_JSON, RECORD_JSON, STATE_JSON])?;
    let outcome = run_pipeline(&state, &config.setup, &config.tomography, config.seed)?;
    let rec = &outcome.reconstruction;
    let rho = rec.rho();
    let xi = rec
        .record
        .projectors()
        .iter()
        .filter_map(|p| match p.label {
            crate::tomography::ProjectorLabel::Far(x) => Some(x),
            _ => None,
        })
        .collect();
    let fit: Option<&PhaseFit> = rec.fit.as_ref();
    let report = TomographyReport {
        fidelity: outcome.fidelity,
        dimension: state.dimension(),
        grating: config.setup.grating.kind.name().into(),
        noise: config.noise_label.clone(),
        mode: rec.mode.name().into(),
        stop_reason: rec.stop_reason().into(),
        iterations: rec.iterations(),
        log_likelihood: log_likelihood(&rec.record, rho)?,
        final_update_norm: rec.mle.as_ref().map(|m| m.final_update_norm),
        xi,
        slit_powers: outcome.preparation.slit_powers.clone(),
        relative_phases: (1..state.dimension()).map(|l| rho.entries()[(l, 0)].arg()).collect(),
        fit_phases: fit.map(|f| f.phases.clone()),
        fit_residual: fit.map(|f| f.residual),
        purity: rho.purity(),
        target: StateDoc::from_state(&state),
        rho: MatrixDoc::from_density(rho),
    };
    let out = &config.out;
    write_json(&out.join(REPORT_JSON), &report)?;
    write_json(&out.join(RHO_JSON), &report.rho)?;
    write_json(&out.join(RECORD_JSON), &RecordDoc::from_record(&rec.record))?;
    write_json(&out.join(STATE_JSON), &report.target)?;
    Ok(report)
}

/// Luminous-efficiency gain of single-modulator preparation over a
/// two-modulator scheme whose amplitude stage transmits `eta`: `1/η`.
pub fn efficiency_comparison(eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::OutOfRange { what: "eta", value: eta });
    }
    Ok(1.0 / eta)
}
