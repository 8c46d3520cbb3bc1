//! TOML experiment configuration with command-line overrides.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use super::pipeline::{Setup, SimulationSettings, TomographySettings};
use crate::error::{Error, Result};
use crate::mask::{GratingKind, GratingSpec, SlitGeometry};
use crate::optics::{NoiseModel, OpticsParams, ShotNoise};
use crate::state::{BlochPoint, QuditState};
use crate::C64;

/// Number of states per dimension used by qudit sweeps unless configured.
pub const DEFAULT_SWEEP_COUNTS: [(usize, usize); 5] = [(2, 561), (3, 24), (4, 70), (5, 25), (7, 94)];

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    out: Option<PathBuf>,
    workers: Option<usize>,
    state: Option<RawState>,
    geometry: Option<RawGeometry>,
    grating: Option<RawGrating>,
    noise: Option<RawNoise>,
    optics: Option<OpticsParams>,
    simulation: Option<SimulationSettings>,
    tomography: Option<TomographySettings>,
    sweep: Option<RawSweep>,
    efficiency: Option<RawEfficiency>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEfficiency {
    eta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    magnitudes: Option<Vec<f64>>,
    phases: Option<Vec<f64>>,
    phases_pi: Option<Vec<f64>>,
    theta: Option<f64>,
    phi: Option<f64>,
    preset: Option<String>,
    slit: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    dimension: Option<usize>,
    slit_width_px: Option<usize>,
    slit_period_px: Option<usize>,
    slit_length_px: Option<usize>,
    grating_period_px: Option<usize>,
    pixel_pitch_um: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrating {
    kind: Option<String>,
    levels: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    preset: Option<String>,
    shot_counts: Option<u64>,
    beam_waist_um: Option<f64>,
    beam_offset_um: Option<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    kind: Option<String>,
    points: Option<usize>,
    dimensions: Option<Vec<usize>>,
    counts: Option<BTreeMap<String, usize>>,
    gratings: Option<Vec<String>>,
}

/// Flag overrides shared by all subcommands.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub grating: Option<GratingKind>,
    pub dimension: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub noise: Option<String>,
}

/// Target of a single-state run.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Amplitudes(QuditState),
    Bloch(BlochPoint),
    Uniform,
    SingleSlit(usize),
    /// Haar-random state drawn from the run seed.
    Haar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Bloch,
    Qudit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub bloch_points: usize,
    pub dimensions: Vec<usize>,
    pub counts: BTreeMap<usize, usize>,
    pub gratings: Vec<GratingKind>,
}

impl SweepSpec {
    pub fn bloch(points: usize) -> Self {
        Self {
            kind: SweepKind::Bloch,
            bloch_points: points,
            dimensions: vec![2],
            counts: DEFAULT_SWEEP_COUNTS.into_iter().collect(),
            gratings: vec![GratingKind::Binary, GratingKind::Blazed],
        }
    }

    pub fn qudit(dimensions: Vec<usize>) -> Self {
        Self { kind: SweepKind::Qudit, dimensions, ..Self::bloch(561) }
    }

    pub fn count_for(&self, dimension: usize) -> Result<usize> {
        self.counts
            .get(&dimension)
            .copied()
            .ok_or_else(|| Error::Config(format!("sweep has no state count for D = {dimension}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub state: Option<StateSpec>,
    pub setup: Setup,
    pub tomography: TomographySettings,
    pub sweep: Option<SweepSpec>,
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads for sweeps; 0 uses every core.
    pub workers: usize,
    /// Name of the noise preset, recorded in reports.
    pub noise_label: String,
    /// Amplitude-stage efficiency of the two-modulator scheme being compared.
    pub eta: f64,
}

impl ExperimentConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: cannot read: {e}", path.display())))?;
        Self::parse(&text, overrides).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Parses TOML text. Validation failures name the offending line.
    pub fn parse(text: &str, overrides: &Overrides) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of_offset(text, s.start));
            let msg = e.message().trim().to_string();
            Error::Config(match line {
                Some(l) => format!("line {l}: {msg}"),
                None => msg,
            })
        })?;
        let at = |section: &str, key: &str, e: Error| -> Error {
            let msg = match e {
                Error::Config(m) => m,
                other => other.to_string(),
            };
            match locate(text, section, key) {
                Some(l) => Error::Config(format!("line {l}: {msg}")),
                None => Error::Config(msg),
            }
        };
        build(raw, overrides, &at)
    }

    /// The single target state, resolved against the configured dimension.
    pub fn target_state(&self) -> Result<QuditState> {
        let d = self.setup.geometry.dimension;
        let spec = self
            .state
            .as_ref()
            .ok_or_else(|| Error::Config("a [state] section is required for this command".into()))?;
        let state = match spec {
            StateSpec::Amplitudes(s) => s.clone(),
            StateSpec::Bloch(b) => b.to_state(),
            StateSpec::Uniform => QuditState::normalize(&vec![C64::new(1.0, 0.0); d])?,
            StateSpec::SingleSlit(k) => {
                if *k >= d {
                    return Err(Error::Config(format!("slit {k} does not exist for D = {d}")));
                }
                let mut v = vec![C64::new(0.0, 0.0); d];
                v[*k] = C64::new(1.0, 0.0);
                QuditState::normalize(&v)?
            }
            StateSpec::Haar => QuditState::haar_random(d, &mut ChaCha8Rng::seed_from_u64(self.seed))?,
        };
        if state.dimension() != d {
            return Err(Error::Config(format!("state has {} slits but the geometry has D = {d}", state.dimension())));
        }
        Ok(state)
    }
}

type Locator<'a> = dyn Fn(&str, &str, Error) -> Error + 'a;

fn build(raw: RawConfig, ov: &Overrides, at: &Locator<'_>) -> Result<ExperimentConfig> {
    let state = raw.state.as_ref().map(|s| parse_state(s).map_err(|e| at("state", "", e))).transpose()?;
    let state_dim = match &state {
        Some(StateSpec::Amplitudes(s)) => Some(s.dimension()),
        Some(StateSpec::Bloch(_)) => Some(2),
        _ => None,
    };
    let raw_geom = raw.geometry.unwrap_or_default();
    let dimension = ov.dimension.or(raw_geom.dimension).or(state_dim).unwrap_or(2);
    if let (Some(sd), Some(d)) = (state_dim, ov.dimension.or(raw_geom.dimension)) {
        if sd != d {
            let key = if raw.state.as_ref().is_some_and(|s| s.magnitudes.is_some()) { "magnitudes" } else { "" };
            return Err(at("state", key, Error::Config(format!("state has {sd} slits but the dimension is {d}"))));
        }
    }
    let defaults = SlitGeometry::with_defaults(dimension.max(2)).map_err(|e| at("geometry", "dimension", e))?;
    let geometry = SlitGeometry {
        dimension,
        slit_width_px: raw_geom.slit_width_px.unwrap_or(defaults.slit_width_px),
        slit_period_px: raw_geom.slit_period_px.unwrap_or(defaults.slit_period_px),
        slit_length_px: raw_geom.slit_length_px.unwrap_or(defaults.slit_length_px),
        grating_period_px: raw_geom.grating_period_px.unwrap_or(defaults.grating_period_px),
        pixel_pitch_um: raw_geom.pixel_pitch_um.unwrap_or(defaults.pixel_pitch_um),
    };
    geometry.validate().map_err(|e| at("geometry", "", e))?;

    let raw_grating = raw.grating.unwrap_or_default();
    let kind = match (ov.grating, &raw_grating.kind) {
        (Some(k), _) => k,
        (None, Some(k)) => k.parse().map_err(|e| at("grating", "kind", e))?,
        (None, None) => GratingKind::Blazed,
    };
    let grating = match kind {
        GratingKind::Binary => GratingSpec::binary(),
        GratingKind::Blazed => {
            GratingSpec::blazed(raw_grating.levels.unwrap_or(10)).map_err(|e| at("grating", "levels", e))?
        }
    };

    let raw_noise = raw.noise.unwrap_or_default();
    let noise_label = ov.noise.clone().or(raw_noise.preset.clone()).unwrap_or_else(|| "off".into());
    let mut noise = NoiseModel::preset(&noise_label).map_err(|e| at("noise", "preset", e))?;
    if let Some(n) = raw_noise.shot_counts.filter(|n| *n > 0) {
        noise.shot_noise = ShotNoise::Poisson { total_counts: n };
    }
    noise.beam_waist_um = raw_noise.beam_waist_um;
    if let Some([dx, dy]) = raw_noise.beam_offset_um {
        noise.beam_offset_um = (dx, dy);
    }
    noise.validate().map_err(|e| at("noise", "", e))?;

    let optics = raw.optics.unwrap_or_default();
    optics.validate().map_err(|e| at("optics", "", e))?;
    let simulation = raw.simulation.unwrap_or_default();
    validate_simulation(&simulation).map_err(|e| at("simulation", "", e))?;
    let tomography = raw.tomography.unwrap_or_default();
    tomography.validate().map_err(|e| at("tomography", "", e))?;

    let sweep = raw
        .sweep
        .map(|s| parse_sweep(s, ov.dimension, kind, ov.grating.is_some()))
        .transpose()
        .map_err(|e| at("sweep", "", e))?;

    Ok(ExperimentConfig {
        state,
        setup: Setup { geometry, grating, noise, optics, simulation },
        tomography,
        sweep,
        seed: ov.seed.or(raw.seed).unwrap_or(0),
        out: ov.out.clone().or(raw.out).unwrap_or_else(|| PathBuf::from("out")),
        workers: raw.workers.unwrap_or(0),
        noise_label,
        eta: raw.efficiency.and_then(|e| e.eta).unwrap_or(0.1),
    })
}

fn validate_simulation(s: &SimulationSettings) -> Result<()> {
    if s.subsampling == 0 {
        return Err(Error::OutOfRange { what: "subsampling", value: 0.0 });
    }
    if !(s.guard >= 1.0) {
        return Err(Error::OutOfRange { what: "guard", value: s.guard });
    }
    if !(s.iris_scale > 0.0 && s.iris_scale < 2.0) {
        return Err(Error::OutOfRange { what: "iris_scale", value: s.iris_scale });
    }
    Ok(())
}

fn parse_state(s: &RawState) -> Result<StateSpec> {
    if let Some(preset) = &s.preset {
        return match preset.as_str() {
            "uniform" => Ok(StateSpec::Uniform),
            "single-slit" => Ok(StateSpec::SingleSlit(s.slit.unwrap_or(0))),
            "haar" => Ok(StateSpec::Haar),
            other => Err(Error::Config(format!("unknown state preset `{other}`"))),
        };
    }
    if let (Some(theta), Some(phi)) = (s.theta, s.phi) {
        return Ok(StateSpec::Bloch(BlochPoint::new(theta, phi)?));
    }
    let mags = s
        .magnitudes
        .as_ref()
        .ok_or_else(|| Error::Config("state needs `magnitudes`, `theta`/`phi` or `preset`".into()))?;
    let phases: Vec<f64> = match (&s.phases, &s.phases_pi) {
        (Some(_), Some(_)) => return Err(Error::Config("give either `phases` or `phases_pi`, not both".into())),
        (Some(p), None) => p.clone(),
        (None, Some(p)) => p.iter().map(|x| x * PI).collect(),
        (None, None) => vec![0.0; mags.len()],
    };
    if phases.len() != mags.len() {
        return Err(Error::Config(format!("{} magnitudes but {} phases", mags.len(), phases.len())));
    }
    let amps: Vec<C64> = mags.iter().zip(&phases).map(|(m, p)| C64::from_polar(*m, *p)).collect();
    Ok(StateSpec::Amplitudes(QuditState::normalize(&amps)?))
}

fn parse_sweep(s: RawSweep, dim_override: Option<usize>, grating: GratingKind, grating_forced: bool) -> Result<SweepSpec> {
    let kind = match s.kind.as_deref().unwrap_or("bloch") {
        "bloch" => SweepKind::Bloch,
        "qudit" => SweepKind::Qudit,
        other => return Err(Error::Config(format!("unknown sweep kind `{other}`"))),
    };
    let mut spec = match kind {
        SweepKind::Bloch => SweepSpec::bloch(s.points.unwrap_or(561)),
        SweepKind::Qudit => SweepSpec::qudit(s.dimensions.unwrap_or_else(|| vec![3, 4, 5, 7])),
    };
    if let Some(counts) = s.counts {
        for (k, v) in counts {
            let d: usize = k.parse().map_err(|_| Error::Config(format!("sweep count key `{k}` is not a dimension")))?;
            spec.counts.insert(d, v);
        }
    }
    if let Some(d) = dim_override {
        if kind == SweepKind::Bloch && d != 2 {
            return Err(Error::Config(format!("a Bloch sweep needs D = 2, got {d}")));
        }
        spec.dimensions = vec![d];
    }
    if kind == SweepKind::Qudit {
        if spec.dimensions.is_empty() {
            return Err(Error::Config("sweep lists no dimensions".into()));
        }
        for &d in &spec.dimensions {
            if d < 2 {
                return Err(Error::Dimension(d));
            }
            spec.count_for(d)?;
        }
    }
    if spec.bloch_points < 2 {
        return Err(Error::OutOfRange { what: "points", value: spec.bloch_points as f64 });
    }
    if grating_forced {
        spec.gratings = vec![grating];
    } else if let Some(g) = s.gratings {
        spec.gratings = g.iter().map(|k| k.parse()).collect::<Result<_>>()?;
        if spec.gratings.is_empty() {
            return Err(Error::Config("sweep lists no gratings".into()));
        }
    }
    Ok(spec)
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// 1-based line of `key` inside `[section]`, or of the section header when
/// `key` is empty or absent.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut in_section = false;
    let mut header = None;
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.starts_with('[') {
            in_section = t.trim_matches(|c| c == '[' || c == ']').trim() == section;
            if in_section {
                header = Some(i + 1);
            }
            continue;
        }
        if in_section && !key.is_empty() {
            if let Some((k, _)) = t.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    header
}
