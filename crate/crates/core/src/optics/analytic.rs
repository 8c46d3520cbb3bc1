//! Closed-form Fraunhofer pattern of `D` slits of width `2a` and period `d`:
//! `I(u) ∝ sinc²(2a·u/λf) · |Σ_ℓ β_ℓ exp(-2πi ℓ d u/λf)|²`, matching the
//! sign convention of the forward transform.

use std::f64::consts::PI;

use super::grating::sinc;
use super::OpticsParams;
use crate::mask::SlitGeometry;
use crate::C64;

/// Single-slit envelope `sinc²(2a·u/λf)`, 1 on axis.
pub fn slit_envelope(geom: &SlitGeometry, optics: &OpticsParams, u_um: f64) -> f64 {
    sinc(geom.slit_width_um() * u_um / optics.lambda_f_um2()).powi(2)
}

/// Interference phase `ξ = 2π d u/λf` at far-field position `u`.
pub fn fringe_phase(geom: &SlitGeometry, optics: &OpticsParams, u_um: f64) -> f64 {
    2.0 * PI * geom.slit_period_um() * u_um / optics.lambda_f_um2()
}

/// `|Σ_ℓ β_ℓ e^{-iℓξ}|²`.
pub fn interference(amplitudes: &[C64], xi: f64) -> f64 {
    amplitudes
        .iter()
        .enumerate()
        .map(|(l, b)| b * C64::from_polar(1.0, -(l as f64) * xi))
        .sum::<C64>()
        .norm_sqr()
}

/// Unnormalized far-field intensity of the slit array at `u`.
pub fn multi_slit_intensity(amplitudes: &[C64], geom: &SlitGeometry, optics: &OpticsParams, u_um: f64) -> f64 {
    slit_envelope(geom, optics, u_um) * interference(amplitudes, fringe_phase(geom, optics, u_um))
}
