//! One preparation-and-measurement run: mask → optics → cameras → estimate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{synthesize_mask_with, GratingSpec, MaskOptions, PhaseMask, SlitGeometry};
use crate::optics::{
    apply_mask, far_field_band, far_field_profile, farfield_intensity_curve, iris_filter, illuminate, near_field_image, nearfield_intensity_curve,
    slit_powers, IntensityCurve, IrisSpec, NoiseModel, OpticsParams, ShotNoise, SimGrid,
};
use crate::state::{fidelity, DensityMatrix, QuditState};
use crate::tomography::{
    default_xi_set, far_projectors, far_samples, fit_phases, mle_reconstruct, near_projectors, FitOptions, MeasurementRecord,
    MleOptions, MleResult, PhaseFit, RecordMode,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

/// Numerical resolution of the optical simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSettings {
    /// Samples per SLM pixel along each axis.
    pub subsampling: usize,
    /// Window size relative to the aperture extent.
    pub guard: f64,
    /// Iris radius in units of half the diffraction-order spacing.
    pub iris_scale: f64,
    pub background_phase: f64,
    /// Refinement of the written far-field profile over the Fourier grid.
    pub far_oversampling: usize,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self { subsampling: 4, guard: 2.0, iris_scale: 1.0, background_phase: 0.0, far_oversampling: 8 }
    }
}

/// Everything that fixes the physics of a run apart from the target state.
#[derive(Debug, Clone, PartialEq)]
pub struct Setup {
    pub geometry: SlitGeometry,
    pub grating: GratingSpec,
    pub noise: NoiseModel,
    pub optics: OpticsParams,
    pub simulation: SimulationSettings,
}

impl Setup {
    pub fn ideal(geometry: SlitGeometry, grating: GratingSpec) -> Self {
        Self {
            geometry,
            grating,
            noise: NoiseModel::ideal(),
            optics: OpticsParams::default(),
            simulation: SimulationSettings::default(),
        }
    }

    pub fn iris(&self) -> IrisSpec {
        let iris = IrisSpec::first_order(&self.geometry, &self.optics);
        iris.with_radius(iris.radius_um * self.simulation.iris_scale)
    }
}

/// Camera data of one simulated preparation.
#[derive(Debug, Clone)]
pub struct Preparation {
    pub mask: PhaseMask,
    pub grid: SimGrid,
    pub slit_powers: Vec<f64>,
    pub near_curve: IntensityCurve,
    /// Far-field intensity on the Fourier grid; tomography reads this one.
    pub far_curve: IntensityCurve,
    /// The same pattern sampled `far_oversampling` times finer along y.
    pub far_profile: IntensityCurve,
    /// Fraction of the incident power passed by the iris.
    pub iris_throughput: f64,
}

/// Runs the optical chain for `state`. `seed` drives the phase jitter.
pub fn prepare(state: &QuditState, setup: &Setup, seed: u64) -> Result<Preparation> {
    if state.dimension() != setup.geometry.dimension {
        return Err(Error::DimensionMismatch { expected: setup.geometry.dimension, found: state.dimension() });
    }
    setup.optics.validate()?;
    setup.noise.validate()?;
    let sim = &setup.simulation;
    let opts = MaskOptions { guard_factor: sim.guard, background_phase: sim.background_phase };
    let mask = synthesize_mask_with(state, &setup.geometry, &setup.grating, &opts)?;
    let grid = SimGrid::with_window(&setup.geometry, mask.window, sim.subsampling)?;
    let incident = illuminate(&grid, &setup.noise, &setup.optics)?;
    let input_power = incident.total_power();
    let modulated = apply_mask(incident, &mask, &setup.noise, seed)?;
    let iris = setup.iris();
    let band = far_field_band(modulated, &iris)?;
    let far_profile = far_field_profile(&band, &iris, sim.far_oversampling)?;
    let fourier = iris_filter(band, &iris)?;
    let iris_throughput = fourier.total_power() / input_power;
    if iris_throughput <= 0.0 {
        return Err(Error::NonConvergence("no light passes the iris".into()));
    }
    let far_curve = farfield_intensity_curve(&fourier)?;
    let image = near_field_image(fourier)?;
    let slit_powers = slit_powers(&image, &grid)?;
    let near_curve = nearfield_intensity_curve(&image)?;
    Ok(Preparation { mask, grid, slit_powers, near_curve, far_curve, far_profile, iris_throughput })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReconstructionMode {
    /// Joint for qubits, sequential otherwise.
    Auto,
    /// Likelihood maximization over all data starting from `I/D`.
    Joint,
    /// Amplitudes from the near field, phases from a fit of the whole
    /// far-field curve, then likelihood refinement from that estimate.
    Sequential,
}

impl ReconstructionMode {
    pub fn resolve(self, dimension: usize) -> Self {
        match self {
            ReconstructionMode::Auto if dimension == 2 => ReconstructionMode::Joint,
            ReconstructionMode::Auto => ReconstructionMode::Sequential,
            m => m,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ReconstructionMode::Auto => "auto",
            ReconstructionMode::Joint => "joint",
            ReconstructionMode::Sequential => "sequential",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographySettings {
    pub mode: ReconstructionMode,
    /// Far-field phases; the default is `2πj/(2D)`.
    pub xi: Option<Vec<f64>>,
    pub envelope_floor: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// White-noise admixture of the sequential starting state.
    pub seed_mixing: f64,
    /// Multi-start count of the phase fit; 0 picks a default.
    pub fit_starts: usize,
    /// Levenberg-Marquardt iteration budget per start.
    pub fit_max_iterations: usize,
    /// In sequential mode, polish the fitted state by maximum likelihood.
    pub refine: bool,
}

impl Default for TomographySettings {
    fn default() -> Self {
        Self {
            mode: ReconstructionMode::Auto,
            xi: None,
            envelope_floor: 0.05,
            tolerance: 1e-10,
            max_iterations: 10_000,
            seed_mixing: 1e-3,
            fit_starts: 0,
            fit_max_iterations: 2000,
            refine: false,
        }
    }
}

impl TomographySettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::OutOfRange { what: "tolerance", value: self.tolerance });
        }
        if self.max_iterations == 0 || self.fit_max_iterations == 0 {
            return Err(Error::OutOfRange { what: "max_iterations", value: 0.0 });
        }
        if !(0.0..1.0).contains(&self.envelope_floor) {
            return Err(Error::OutOfRange { what: "envelope_floor", value: self.envelope_floor });
        }
        if !(0.0..=1.0).contains(&self.seed_mixing) {
            return Err(Error::OutOfRange { what: "seed_mixing", value: self.seed_mixing });
        }
        if let Some(xi) = &self.xi {
            if xi.is_empty() || xi.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config("xi must be a non-empty list of finite phases".into()));
            }
        }
        Ok(())
    }

    pub fn xi_set(&self, dimension: usize) -> Vec<f64> {
        self.xi.clone().unwrap_or_else(|| default_xi_set(dimension))
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub mode: ReconstructionMode,
    pub record: MeasurementRecord,
    pub rho: DensityMatrix,
    /// Likelihood maximization, absent for unrefined sequential estimates.
    pub mle: Option<MleResult>,
    pub fit: Option<PhaseFit>,
}

impl Reconstruction {
    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    /// `converged`, `max-iterations` or `stalled`.
    pub fn stop_reason(&self) -> &'static str {
        match &self.mle {
            Some(m) => m.stop_reason.name(),
            None => "converged",
        }
    }

    pub fn iterations(&self) -> usize {
        match (&self.mle, &self.fit) {
            (Some(m), _) => m.iterations,
            (None, Some(f)) => f.iterations,
            (None, None) => 0,
        }
    }
}

/// Builds the measurement record from camera data. With shot noise on,
/// each camera's values are rescaled to the configured photon number and
/// Poisson-sampled.
pub fn measurement_record(
    prep: &Preparation,
    setup: &Setup,
    tomo: &TomographySettings,
    seed: u64,
) -> Result<MeasurementRecord> {
    let d = setup.geometry.dimension;
    let samples = far_samples(&prep.far_curve, &tomo.xi_set(d), &setup.geometry, &setup.optics, tomo.envelope_floor)?;
    if samples.is_empty() {
        return Err(Error::Config("every far-field phase falls outside the usable envelope".into()));
    }
    let xi: Vec<f64> = samples.iter().map(|s| s.xi).collect();
    let mut projectors = near_projectors(d)?;
    projectors.extend(far_projectors(d, &xi)?);
    let mut values = prep.slit_powers.clone();
    values.extend(samples.iter().map(|s| s.value));
    let mode = match setup.noise.shot_noise {
        ShotNoise::Off => RecordMode::Intensity,
        ShotNoise::Poisson { total_counts } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let near_total: f64 = values[..d].iter().sum();
            let far_total: f64 = values[d..].iter().sum();
            for (i, v) in values.iter_mut().enumerate() {
                let total = if i < d { near_total } else { far_total };
                let mean = if total > 0.0 { total_counts as f64 * *v / total } else { 0.0 };
                *v = if mean > 0.0 {
                    Poisson::new(mean).map_err(|e| Error::Config(e.to_string()))?.sample(&mut rng)
                } else {
                    0.0
                };
            }
            RecordMode::Counts { total: total_counts }
        }
    };
    MeasurementRecord::new(projectors, values, mode)
}

/// Estimates the prepared state from the camera data.
pub fn reconstruct(prep: &Preparation, setup: &Setup, tomo: &TomographySettings, seed: u64) -> Result<Reconstruction> {
    tomo.validate()?;
    let d = setup.geometry.dimension;
    let record = measurement_record(prep, setup, tomo, seed)?;
    let mode = tomo.mode.resolve(d);
    let mut options = MleOptions { tolerance: tomo.tolerance, max_iterations: tomo.max_iterations, initial: None };
    if mode != ReconstructionMode::Sequential {
        let mle = mle_reconstruct(&record, &options)?;
        return Ok(Reconstruction { mode, record, rho: mle.rho.clone(), mle: Some(mle), fit: None });
    }
    let near = &record.values()[..d];
    let total: f64 = near.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroCounts);
    }
    let amplitudes: Vec<f64> = near.iter().map(|p| (p / total).sqrt()).collect();
    let fit_opts = FitOptions {
        starts: tomo.fit_starts,
        seed,
        envelope_floor: tomo.envelope_floor,
        max_iterations: tomo.fit_max_iterations,
    };
    let fit = fit_phases(&amplitudes, &prep.far_curve, &setup.geometry, &setup.optics, &fit_opts)?;
    if !fit.converged {
        return Err(Error::NonConvergence(format!("phase fit did not converge (residual {:.3e})", fit.residual)));
    }
    let estimate = DensityMatrix::from_pure(&state_from_fit(&amplitudes, &fit)?);
    if !tomo.refine {
        return Ok(Reconstruction { mode, record, rho: estimate, mle: None, fit: Some(fit) });
    }
    options.initial = Some(estimate.mixed_with_identity(tomo.seed_mixing));
    let mle = mle_reconstruct(&record, &options)?;
    Ok(Reconstruction { mode, record, rho: mle.rho.clone(), mle: Some(mle), fit: Some(fit) })
}

/// Pure state with the given magnitudes and fitted relative phases.
pub fn state_from_fit(amplitudes: &[f64], fit: &PhaseFit) -> Result<QuditState> {
    let amps: Vec<crate::C64> = amplitudes
        .iter()
        .enumerate()
        .map(|(l, a)| crate::C64::from_polar(*a, if l == 0 { 0.0 } else { fit.phases[l - 1] }))
        .collect();
    QuditState::normalize(&amps)
}

/// Full run for one target: preparation, reconstruction and fidelity.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub preparation: Preparation,
    pub reconstruction: Reconstruction,
    pub fidelity: f64,
}

pub fn run_pipeline(state: &QuditState, setup: &Setup, tomo: &TomographySettings, seed: u64) -> Result<RunOutcome> {
    let preparation = prepare(state, setup, seed)?;
    let reconstruction = reconstruct(&preparation, setup, tomo, seed.wrapping_add(1))?;
    let fidelity = fidelity(state, reconstruction.rho())?;
    if !fidelity.is_finite() {
        return Err(Error::NonConvergence("fidelity is not finite".into()));
    }
    Ok(RunOutcome { preparation, reconstruction, fidelity })
}
