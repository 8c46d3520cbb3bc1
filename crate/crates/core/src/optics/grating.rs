//! First-order efficiency of pixelated phase gratings.
//!
//! One grating period of `P` pixels is sampled `S` times per pixel, so each
//! pixel is a uniform rectangle; the `m`-th Fourier coefficient of
//! `exp(i·profile)` over the period gives the amplitude diffracted into order
//! `m`. Parseval makes the efficiencies of all `P·S` computed orders sum to 1.

use std::f64::consts::PI;

use crate::mask::GratingSpec;
use crate::C64;

fn sampled_period(spec: &GratingSpec, period_px: usize, depth: f64, subsampling: usize) -> Vec<C64> {
    let s = subsampling.max(1);
    spec.period_profile(depth, period_px)
        .iter()
        .flat_map(|&phase| std::iter::repeat(C64::from_polar(1.0, phase)).take(s))
        .collect()
}

/// Fourier coefficient `c_m` of one sub-sampled grating period.
pub fn order_coefficient(spec: &GratingSpec, period_px: usize, depth: f64, order: i64, subsampling: usize) -> C64 {
    let samples = sampled_period(spec, period_px, depth, subsampling);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(j, v)| v * C64::from_polar(1.0, -2.0 * PI * order as f64 * j as f64 / n))
        .sum::<C64>()
        / n
}

/// `|c_m|²`, the fraction of incident power diffracted into order `m`.
pub fn order_efficiency(spec: &GratingSpec, period_px: usize, depth: f64, order: i64, subsampling: usize) -> f64 {
    order_coefficient(spec, period_px, depth, order, subsampling).norm_sqr()
}

/// Efficiencies of every order resolved by the sampling, indexed by
/// `m mod (P·S)`.
pub fn order_spectrum(spec: &GratingSpec, period_px: usize, depth: f64, subsampling: usize) -> Vec<f64> {
    let mut samples = sampled_period(spec, period_px, depth, subsampling);
    let n = samples.len();
    let fft = rustfft::FftPlanner::new().plan_fft_forward(n);
    fft.process(&mut samples);
    samples.iter().map(|c| c.norm_sqr() / (n * n) as f64).collect()
}

/// Continuous-profile first-order efficiency of a binary grating,
/// `(2/π²)(1 - cos φ₀)`.
pub fn binary_efficiency_continuous(depth: f64) -> f64 {
    2.0 / (PI * PI) * (1.0 - depth.cos())
}

/// Continuous blazed efficiency `sinc²(1 - φ₀/2π)`.
pub fn blazed_efficiency_continuous(depth: f64) -> f64 {
    sinc(1.0 - depth / (2.0 * PI)).powi(2)
}

/// Normalized sinc, `sin(πx)/(πx)`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}
