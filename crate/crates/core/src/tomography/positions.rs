use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mask::SlitGeometry;
use crate::optics::analytic::slit_envelope;
use crate::optics::{IntensityCurve, OpticsParams};
use crate::state::wrap_pi;

/// Far-field positions `x_ξ = ξ·λf/(2πd)` where the interference term
/// equals `|⟨χ_ξ|ψ⟩|²`. Positions with `|x| > limit_um` are an error.
pub fn xi_positions(xi_set: &[f64], geom: &SlitGeometry, optics: &OpticsParams, limit_um: f64) -> Result<Vec<f64>> {
    let scale = optics.lambda_f_um2() / (2.0 * PI * geom.slit_period_um());
    xi_set
        .iter()
        .map(|&xi| {
            let x = xi * scale;
            if x.abs() > limit_um {
                Err(Error::Config(format!("far-field position {x:.3} um for xi = {xi} lies beyond the grid")))
            } else {
                Ok(x)
            }
        })
        .collect()
}

/// One envelope-corrected far-field sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarSample {
    pub xi: f64,
    pub position_um: f64,
    pub value: f64,
}

/// Samples `curve` at the representative of each `ξ` in `(-π, π]` (the
/// brightest fringe period) and divides out the single-slit envelope.
/// Phases whose envelope falls below `envelope_floor` of the peak are
/// dropped.
pub fn far_samples(
    curve: &IntensityCurve,
    xi_set: &[f64],
    geom: &SlitGeometry,
    optics: &OpticsParams,
    envelope_floor: f64,
) -> Result<Vec<FarSample>> {
    let limit = curve
        .positions_um
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let reps: Vec<f64> = xi_set.iter().map(|&xi| wrap_pi(xi)).collect();
    let positions = xi_positions(&reps, geom, optics, limit)?;
    let mut out = Vec::with_capacity(xi_set.len());
    for (&xi, &x) in xi_set.iter().zip(&positions) {
        let env = slit_envelope(geom, optics, x);
        if env < envelope_floor {
            continue;
        }
        let raw = curve
            .sample_at(x)
            .ok_or_else(|| Error::Config(format!("far-field position {x} um outside the curve")))?;
        out.push(FarSample { xi, position_um: x, value: (raw / env).max(0.0) });
    }
    Ok(out)
}
