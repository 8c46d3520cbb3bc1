//! Imperfections of the preparation stage: gray-level dependent phase
//! jitter, beam misalignment and finite waist, and photon shot noise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::phase_to_gray;

pub const GRAY_LEVELS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum ShotNoise {
    Off,
    Poisson { total_counts: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Standard deviation of the phase error, per displayed gray level.
    pub phase_jitter_sigma: Vec<f64>,
    /// Beam centre offset `(dx, dy)` from the optical axis.
    pub beam_offset_um: (f64, f64),
    /// Gaussian field waist; `None` is a plane wave.
    pub beam_waist_um: Option<f64>,
    pub shot_noise: ShotNoise,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::ideal()
    }
}

impl NoiseModel {
    pub fn ideal() -> Self {
        Self {
            phase_jitter_sigma: vec![0.0; GRAY_LEVELS],
            beam_offset_um: (0.0, 0.0),
            beam_waist_um: None,
            shot_noise: ShotNoise::Off,
        }
    }

    /// Jitter growing linearly from 0 at gray level 0 to 0.15 rad at 255.
    pub fn pluto_like() -> Self {
        let top = (GRAY_LEVELS - 1) as f64;
        Self {
            phase_jitter_sigma: (0..GRAY_LEVELS).map(|g| 0.15 * g as f64 / top).collect(),
            ..Self::ideal()
        }
    }

    /// `"off"`/`"ideal"` or `"pluto-like"`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "off" | "ideal" | "none" => Ok(Self::ideal()),
            "pluto-like" => Ok(Self::pluto_like()),
            other => Err(Error::Config(format!("unknown noise preset `{other}`"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.phase_jitter_sigma.len() != GRAY_LEVELS {
            return Err(Error::Config(format!(
                "phase jitter table needs {GRAY_LEVELS} entries, got {}",
                self.phase_jitter_sigma.len()
            )));
        }
        if let Some(bad) = self.phase_jitter_sigma.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(Error::OutOfRange { what: "phase jitter sigma", value: *bad });
        }
        if let Some(w) = self.beam_waist_um {
            if !(w > 0.0) {
                return Err(Error::OutOfRange { what: "beam waist", value: w });
            }
        }
        if !(self.beam_offset_um.0.is_finite() && self.beam_offset_um.1.is_finite()) {
            return Err(Error::Config("beam offset must be finite".into()));
        }
        if let ShotNoise::Poisson { total_counts: 0 } = self.shot_noise {
            return Err(Error::OutOfRange { what: "shot-noise total counts", value: 0.0 });
        }
        Ok(())
    }

    pub fn has_jitter(&self) -> bool {
        self.phase_jitter_sigma.iter().any(|&s| s > 0.0)
    }

    /// Jitter sigma for a pixel displaying `phase`.
    pub fn sigma_for_phase(&self, phase: f64) -> f64 {
        self.phase_jitter_sigma[phase_to_gray(phase, GRAY_LEVELS)]
    }
}
