//! Phase-only grating masks that encode a qudit state.
//!
//! Slit `ℓ` of the aperture becomes a band of SLM rows carrying a phase
//! grating along the slit length (columns). The grating depth sets how much
//! light the band sends into the first diffraction order, i.e. the slit
//! amplitude, and a constant phase added to the band sets the slit phase.
//! Slits are centred on the optical axis at `(ℓ - (D-1)/2)·d`.

use std::f64::consts::PI;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::grating;
use crate::state::{wrap_two_pi, QuditState};

/// Slit layout on the SLM, in SLM pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlitGeometry {
    pub dimension: usize,
    /// Full slit width `2a`.
    pub slit_width_px: usize,
    /// Centre-to-centre slit separation `d`.
    pub slit_period_px: usize,
    /// Slit length `L` along the grating direction.
    pub slit_length_px: usize,
    /// Pixels per grating period.
    pub grating_period_px: usize,
    pub pixel_pitch_um: f64,
}

impl SlitGeometry {
    pub fn new(
        dimension: usize,
        slit_width_px: usize,
        slit_period_px: usize,
        slit_length_px: usize,
        grating_period_px: usize,
        pixel_pitch_um: f64,
    ) -> Result<Self> {
        let geom = Self {
            dimension,
            slit_width_px,
            slit_period_px,
            slit_length_px,
            grating_period_px,
            pixel_pitch_um,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// 48 px slits on a 96 px period, 512 px long, 10 px grating period and
    /// 8 µm pixels.
    pub fn with_defaults(dimension: usize) -> Result<Self> {
        Self::new(dimension, 48, 96, 512, 10, 8.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension < 2 {
            return Err(Error::Dimension(self.dimension));
        }
        if self.slit_width_px == 0 || self.slit_period_px == 0 || self.slit_length_px == 0 {
            return Err(Error::Geometry("slit sizes must be positive".into()));
        }
        if self.slit_width_px > self.slit_period_px {
            return Err(Error::Geometry(format!(
                "slit width {} px exceeds slit period {} px",
                self.slit_width_px, self.slit_period_px
            )));
        }
        if self.grating_period_px < 2 {
            return Err(Error::Geometry(format!(
                "grating period must be at least 2 px, got {}",
                self.grating_period_px
            )));
        }
        if !(self.pixel_pitch_um > 0.0 && self.pixel_pitch_um.is_finite()) {
            return Err(Error::Geometry(format!("pixel pitch {} um", self.pixel_pitch_um)));
        }
        if self.slit_length_px < 8 * self.slit_width_px {
            log::warn!(
                "slit length {} px is less than 8x the slit width {} px",
                self.slit_length_px,
                self.slit_width_px
            );
        }
        Ok(())
    }

    /// Same layout for another dimension.
    pub fn with_dimension(&self, dimension: usize) -> Result<Self> {
        let mut g = *self;
        g.dimension = dimension;
        g.validate()?;
        Ok(g)
    }

    /// Signed offset of slit `ℓ`'s centre from the axis, in pixels.
    pub fn slit_offset_px(&self, slit: usize) -> f64 {
        (slit as f64 - (self.dimension as f64 - 1.0) / 2.0) * self.slit_period_px as f64
    }

    /// Extent of the slit array across the slits, in pixels.
    pub fn aperture_extent_px(&self) -> usize {
        (self.dimension - 1) * self.slit_period_px + self.slit_width_px
    }

    pub fn slit_width_um(&self) -> f64 {
        self.slit_width_px as f64 * self.pixel_pitch_um
    }

    pub fn slit_period_um(&self) -> f64 {
        self.slit_period_px as f64 * self.pixel_pitch_um
    }

    pub fn grating_period_um(&self) -> f64 {
        self.grating_period_px as f64 * self.pixel_pitch_um
    }

    /// Pixel rectangle of slit `ℓ` inside `window`.
    pub fn slit_rect(&self, slit: usize, window: SlmWindow) -> Result<PixelRect> {
        if slit >= self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, found: slit + 1 });
        }
        let centre = window.rows as f64 / 2.0 + self.slit_offset_px(slit);
        let row0 = (centre - self.slit_width_px as f64 / 2.0 + 0.5).floor();
        let col0 = (window.cols as f64 - self.slit_length_px as f64) / 2.0;
        if row0 < 0.0
            || col0 < 0.0
            || row0 as usize + self.slit_width_px > window.rows
            || self.slit_length_px > window.cols
        {
            return Err(Error::Geometry(format!(
                "grid of {}x{} px is too small for slit {slit}",
                window.rows, window.cols
            )));
        }
        Ok(PixelRect {
            row0: row0 as usize,
            rows: self.slit_width_px,
            col0: col0.floor() as usize,
            cols: self.slit_length_px,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRect {
    pub row0: usize,
    pub rows: usize,
    pub col0: usize,
    pub cols: usize,
}

impl PixelRect {
    pub fn contains(&self, row: usize, col: usize) -> bool {
        row >= self.row0 && row < self.row0 + self.rows && col >= self.col0 && col < self.col0 + self.cols
    }

    pub fn scaled(&self, factor: usize) -> PixelRect {
        PixelRect {
            row0: self.row0 * factor,
            rows: self.rows * factor,
            col0: self.col0 * factor,
            cols: self.cols * factor,
        }
    }
}

/// Simulated SLM area in pixels.
///
/// Columns are the smallest 7-smooth even multiple of the grating period
/// covering `guard` slit lengths, so the first order lands on a Fourier
/// sample. Rows are a multiple of `2·D·d`, which puts the far-field samples
/// exactly on the phases `ξ = πj/D`, and cover `guard` aperture extents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlmWindow {
    pub rows: usize,
    pub cols: usize,
}

impl SlmWindow {
    pub fn for_geometry(geom: &SlitGeometry, guard: f64) -> Result<Self> {
        if !(guard >= 1.0 && guard.is_finite()) {
            return Err(Error::Geometry(format!("guard factor {guard} must be at least 1")));
        }
        let row_unit = 2 * geom.dimension * geom.slit_period_px;
        let min_rows = (guard * geom.aperture_extent_px() as f64).ceil() as usize;
        let rows = min_rows.div_ceil(row_unit).max(1) * row_unit;

        let p = geom.grating_period_px;
        let min_cols = (guard * geom.slit_length_px as f64).ceil() as usize;
        let mut cols = min_cols.div_ceil(p) * p;
        while cols % 2 != 0 || !is_seven_smooth(cols) {
            cols += p;
        }
        let window = Self { rows, cols };
        for slit in 0..geom.dimension {
            geom.slit_rect(slit, window)?;
        }
        Ok(window)
    }
}

fn is_seven_smooth(mut n: usize) -> bool {
    for f in [2, 3, 5, 7] {
        while n % f == 0 {
            n /= f;
        }
    }
    n == 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GratingKind {
    Binary,
    Blazed,
}

impl GratingKind {
    pub fn name(&self) -> &'static str {
        match self {
            GratingKind::Binary => "binary",
            GratingKind::Blazed => "blazed",
        }
    }
}

impl std::str::FromStr for GratingKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(GratingKind::Binary),
            "blazed" => Ok(GratingKind::Blazed),
            other => Err(Error::Config(format!("unknown grating kind `{other}`"))),
        }
    }
}

/// Grating family and its depth conventions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GratingSpec {
    pub kind: GratingKind,
    /// Phase levels of the blazed staircase; 2 for binary.
    pub levels: usize,
}

impl GratingSpec {
    pub fn binary() -> Self {
        Self { kind: GratingKind::Binary, levels: 2 }
    }

    pub fn blazed(levels: usize) -> Result<Self> {
        if levels < 2 {
            return Err(Error::OutOfRange { what: "quantization levels", value: levels as f64 });
        }
        Ok(Self { kind: GratingKind::Blazed, levels })
    }

    /// Grating matching `kind` with the default 10-level blazed staircase.
    pub fn of_kind(kind: GratingKind) -> Self {
        match kind {
            GratingKind::Binary => Self::binary(),
            GratingKind::Blazed => Self { kind, levels: 10 },
        }
    }

    /// Depth that gives the maximum first-order efficiency: `π` for binary,
    /// `2π(N-1)/N` for an `N`-level staircase.
    pub fn max_depth(&self) -> f64 {
        match self.kind {
            GratingKind::Binary => PI,
            GratingKind::Blazed => 2.0 * PI * (self.levels as f64 - 1.0) / self.levels as f64,
        }
    }

    /// Mean displayed phase, half the maximum depth.
    pub fn mean_offset(&self) -> f64 {
        self.max_depth() / 2.0
    }

    /// Phase of each pixel of one grating period for modulation depth
    /// `depth`, centred so the mean of the extreme levels is zero. Centring
    /// keeps the first-order phase independent of the depth.
    pub fn period_profile(&self, depth: f64, period_px: usize) -> Vec<f64> {
        match self.kind {
            GratingKind::Binary => (0..period_px)
                .map(|p| if 2 * p < period_px { depth / 2.0 } else { -depth / 2.0 })
                .collect(),
            GratingKind::Blazed => {
                let n = self.levels;
                let step = depth / (n as f64 - 1.0);
                (0..period_px)
                    .map(|p| {
                        let level = p * n / period_px;
                        level as f64 * step - depth / 2.0
                    })
                    .collect()
            }
        }
    }

    /// Depth whose first-order amplitude, relative to the maximum-depth
    /// amplitude, equals `mag`.
    pub fn depth_for_amplitude(&self, mag: f64, period_px: usize) -> Result<f64> {
        match self.kind {
            GratingKind::Binary => amplitude_to_depth_binary(mag),
            GratingKind::Blazed => blazed_depth(mag, self, period_px),
        }
    }
}

fn check_magnitude(mag: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&mag) {
        return Err(Error::OutOfRange { what: "slit amplitude", value: mag });
    }
    Ok(())
}

/// Binary depth `2·arcsin(mag)`: the first-order amplitude of a two-level
/// grating scales as `sin(φ₀/2)`.
pub fn amplitude_to_depth_binary(mag: f64) -> Result<f64> {
    check_magnitude(mag)?;
    Ok(2.0 * mag.asin())
}

/// Blazed depth for an `N`-level staircase with one pixel per level, found by
/// bisection on the discrete-grating first-order amplitude.
pub fn amplitude_to_depth_blazed(mag: f64, levels: usize) -> Result<f64> {
    let spec = GratingSpec::blazed(levels)?;
    blazed_depth(mag, &spec, levels)
}

fn blazed_depth(mag: f64, spec: &GratingSpec, period_px: usize) -> Result<f64> {
    check_magnitude(mag)?;
    let max = spec.max_depth();
    if mag == 0.0 {
        return Ok(0.0);
    }
    if mag == 1.0 {
        return Ok(max);
    }
    // The pixel-fill factor is common to every depth, so one sample per pixel
    // gives the same amplitude ratio as any sub-sampling.
    let full = grating::order_coefficient(spec, period_px, max, 1, 1).norm();
    let ratio = |depth: f64| grating::order_coefficient(spec, period_px, depth, 1, 1).norm() / full;
    let (mut lo, mut hi) = (0.0, max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) < mag {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Amplitude and phase programmed on one slit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlitCoefficient {
    /// `|β̃_ℓ| / max_j |β̃_j|`.
    pub magnitude: f64,
    /// `arg β̃_ℓ` in `(-π, π]`; 0 for dark slits.
    pub phase: f64,
}

/// Per-slit coefficients, rescaled so the brightest slit uses the maximum
/// grating efficiency.
pub fn build_aperture(state: &QuditState, geom: &SlitGeometry) -> Result<Vec<SlitCoefficient>> {
    if state.dimension() != geom.dimension {
        return Err(Error::DimensionMismatch { expected: geom.dimension, found: state.dimension() });
    }
    let max = state.amplitudes().iter().map(|c| c.norm()).fold(0.0, f64::max);
    Ok(state
        .amplitudes()
        .iter()
        .map(|c| {
            let magnitude = (c.norm() / max).min(1.0);
            let phase = if magnitude > 0.0 { c.arg() } else { 0.0 };
            SlitCoefficient { magnitude, phase }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskOptions {
    pub guard_factor: f64,
    pub background_phase: f64,
}

impl Default for MaskOptions {
    fn default() -> Self {
        Self { guard_factor: 2.0, background_phase: 0.0 }
    }
}

/// Phase pattern addressed on the SLM, one value per pixel in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMask {
    pub phases: Array2<f64>,
    pub geometry: SlitGeometry,
    pub window: SlmWindow,
    pub grating: GratingSpec,
    pub state_digest: String,
    pub background_phase: f64,
    /// Modulation depth used on each slit.
    pub depths: Vec<f64>,
    pub coefficients: Vec<SlitCoefficient>,
}

impl PhaseMask {
    pub fn rows(&self) -> usize {
        self.window.rows
    }

    pub fn cols(&self) -> usize {
        self.window.cols
    }
}

pub fn synthesize_mask(state: &QuditState, geom: &SlitGeometry, spec: &GratingSpec) -> Result<PhaseMask> {
    synthesize_mask_with(state, geom, spec, &MaskOptions::default())
}

/// Encodes `state`: inside slit `ℓ` the pixel phase is
/// `wrap(mean_offset + profile(φ₀,ℓ)[col mod P] + arg β̃_ℓ)`, the grating
/// starting at the left edge of the slit; dark slits hold `mean_offset`;
/// everything else holds the background phase.
pub fn synthesize_mask_with(
    state: &QuditState,
    geom: &SlitGeometry,
    spec: &GratingSpec,
    opts: &MaskOptions,
) -> Result<PhaseMask> {
    geom.validate()?;
    let coefficients = build_aperture(state, geom)?;
    let window = SlmWindow::for_geometry(geom, opts.guard_factor)?;
    let background = wrap_two_pi(opts.background_phase);
    let mut phases = Array2::from_elem((window.rows, window.cols), background);
    let period = geom.grating_period_px;
    let mean = spec.mean_offset();
    let mut depths = Vec::with_capacity(geom.dimension);

    for (slit, coeff) in coefficients.iter().enumerate() {
        let rect = geom.slit_rect(slit, window)?;
        let depth = spec.depth_for_amplitude(coeff.magnitude, period)?;
        depths.push(depth);
        let row_values: Vec<f64> = if coeff.magnitude == 0.0 {
            vec![wrap_two_pi(mean); rect.cols]
        } else {
            let offset = wrap_two_pi(coeff.phase);
            let profile = spec.period_profile(depth, period);
            (0..rect.cols).map(|c| wrap_two_pi(mean + profile[c % period] + offset)).collect()
        };
        for r in rect.row0..rect.row0 + rect.rows {
            for (c, v) in row_values.iter().enumerate() {
                phases[(r, rect.col0 + c)] = *v;
            }
        }
    }

    Ok(PhaseMask {
        phases,
        geometry: *geom,
        window,
        grating: *spec,
        state_digest: state.digest(),
        background_phase: background,
        depths,
        coefficients,
    })
}

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

/// Maps `[0, 2π)` linearly onto gray levels `0..levels`.
pub fn render_mask_gray(mask: &PhaseMask, levels: usize) -> Result<GrayImage> {
    if !(2..=256).contains(&levels) {
        return Err(Error::OutOfRange { what: "gray levels", value: levels as f64 });
    }
    let pixels = mask.phases.iter().map(|&p| phase_to_gray(p, levels) as u8).collect();
    Ok(GrayImage { width: mask.cols(), height: mask.rows(), pixels })
}

/// Gray level of a phase in `[0, 2π)` for a display with `levels` levels.
pub fn phase_to_gray(phase: f64, levels: usize) -> usize {
    let g = (wrap_two_pi(phase) / (2.0 * PI) * levels as f64).floor() as usize;
    g.min(levels - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn reference_qubit() -> QuditState {
        QuditState::normalize(&[C64::new(0.67, 0.0), C64::from_polar(1.0, 0.63 * PI)]).unwrap()
    }

    #[test]
    fn binary_depth_examples() {
        assert_abs_diff_eq!(amplitude_to_depth_binary(1.0).unwrap(), PI);
        assert_eq!(amplitude_to_depth_binary(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(amplitude_to_depth_binary(0.5f64.sqrt()).unwrap(), PI / 2.0, epsilon = 1e-12);
        assert!(amplitude_to_depth_binary(1.01).is_err());
        assert!(amplitude_to_depth_binary(-0.01).is_err());
    }

    #[test]
    fn blazed_depth_examples() {
        assert_abs_diff_eq!(amplitude_to_depth_blazed(1.0, 10).unwrap(), 2.0 * PI * 0.9);
        assert_eq!(amplitude_to_depth_blazed(0.0, 10).unwrap(), 0.0);
        let half = amplitude_to_depth_blazed(0.5, 10).unwrap();
        assert!(half > 0.0 && half < 2.0 * PI * 0.9);
        let spec = GratingSpec::blazed(10).unwrap();
        let ratio = grating::order_efficiency(&spec, 10, half, 1, 8).sqrt()
            / grating::order_efficiency(&spec, 10, spec.max_depth(), 1, 8).sqrt();
        assert_abs_diff_eq!(ratio, 0.5, epsilon = 1e-6);
        assert!(amplitude_to_depth_blazed(0.5, 1).is_err());
        assert!(amplitude_to_depth_blazed(2.0, 10).is_err());
    }

    #[test]
    fn grating_conventions() {
        let b = GratingSpec::binary();
        assert_eq!((b.max_depth(), b.mean_offset()), (PI, PI / 2.0));
        let z = GratingSpec::blazed(10).unwrap();
        assert_abs_diff_eq!(z.max_depth(), 1.8 * PI, epsilon = 1e-15);
        assert_abs_diff_eq!(z.mean_offset(), 0.9 * PI, epsilon = 1e-15);
        assert!(GratingSpec::blazed(1).is_err());
    }

    #[test]
    fn aperture_examples() {
        let geom2 = SlitGeometry::with_defaults(2).unwrap();
        let h = 0.5f64.sqrt();
        let bal = QuditState::normalize(&[C64::new(h, 0.0), C64::new(h, 0.0)]).unwrap();
        for c in build_aperture(&bal, &geom2).unwrap() {
            assert_abs_diff_eq!(c.magnitude, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(c.phase, 0.0);
        }

        let qubit = build_aperture(&reference_qubit(), &geom2).unwrap();
        assert_abs_diff_eq!(qubit[0].magnitude, 0.67, epsilon = 1e-12);
        assert_abs_diff_eq!(qubit[0].phase, 0.0);
        assert_abs_diff_eq!(qubit[1].magnitude, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(qubit[1].phase, 0.63 * PI, epsilon = 1e-12);

        let geom3 = SlitGeometry::with_defaults(3).unwrap();
        let single = QuditState::normalize(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)])
            .unwrap();
        let c = build_aperture(&single, &geom3).unwrap();
        assert_eq!(c[0].magnitude, 1.0);
        assert_eq!((c[1].magnitude, c[2].magnitude), (0.0, 0.0));

        assert!(matches!(build_aperture(&single, &geom2), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn geometry_validation() {
        assert!(SlitGeometry::new(1, 48, 96, 512, 10, 8.0).is_err());
        assert!(SlitGeometry::new(2, 100, 96, 512, 10, 8.0).is_err());
        assert!(SlitGeometry::new(2, 48, 96, 512, 1, 8.0).is_err());
        assert!(SlitGeometry::new(2, 48, 96, 512, 10, 0.0).is_err());
        assert!(SlitGeometry::new(2, 0, 96, 512, 10, 8.0).is_err());
        // short slits only warn
        assert!(SlitGeometry::new(2, 48, 96, 100, 10, 8.0).is_ok());
    }

    #[test]
    fn window_layout() {
        let g = SlitGeometry::with_defaults(2).unwrap();
        let w = SlmWindow::for_geometry(&g, 2.0).unwrap();
        assert_eq!(w.rows, 384);
        assert_eq!(w.cols % 10, 0);
        assert!(w.cols >= 1024);
        let g7 = SlitGeometry::with_defaults(7).unwrap();
        let w7 = SlmWindow::for_geometry(&g7, 2.0).unwrap();
        assert_eq!(w7.rows, 1344);
        assert!(w7.rows >= 2 * g7.aperture_extent_px());
        assert!(SlmWindow::for_geometry(&g, 0.5).is_err());
    }

    #[test]
    fn single_slit_binary_mask() {
        let geom = SlitGeometry::with_defaults(3).unwrap();
        let state = QuditState::normalize(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)])
            .unwrap();
        let mask = synthesize_mask(&state, &geom, &GratingSpec::binary()).unwrap();
        let r0 = geom.slit_rect(0, mask.window).unwrap();
        let row: Vec<f64> = (0..20).map(|c| mask.phases[(r0.row0, r0.col0 + c)]).collect();
        for (c, v) in row.iter().enumerate() {
            let expected = if c % 10 < 5 { PI } else { 0.0 };
            assert_abs_diff_eq!(*v, expected, epsilon = 1e-12);
        }
        // dark slits: constant mean offset
        for slit in 1..3 {
            let r = geom.slit_rect(slit, mask.window).unwrap();
            for c in 0..r.cols {
                assert_abs_diff_eq!(mask.phases[(r.row0 + 3, r.col0 + c)], PI / 2.0, epsilon = 1e-12);
            }
        }
        // background elsewhere
        assert_eq!(mask.phases[(0, 0)], 0.0);
    }

    #[test]
    fn uniform_blazed_mask_has_identical_staircases() {
        let geom = SlitGeometry::with_defaults(4).unwrap();
        let state = QuditState::normalize(&[C64::new(1.0, 0.0); 4]).unwrap();
        let mask = synthesize_mask(&state, &geom, &GratingSpec::blazed(10).unwrap()).unwrap();
        let r0 = geom.slit_rect(0, mask.window).unwrap();
        for slit in 1..4 {
            let r = geom.slit_rect(slit, mask.window).unwrap();
            for c in 0..r.cols {
                assert_eq!(mask.phases[(r.row0, r.col0 + c)], mask.phases[(r0.row0, r0.col0 + c)]);
            }
        }
        for c in 0..10 {
            assert_abs_diff_eq!(mask.phases[(r0.row0, r0.col0 + c)], c as f64 * 2.0 * PI / 10.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn qubit_mask_structure() {
        let geom = SlitGeometry::with_defaults(2).unwrap();
        let mask = synthesize_mask(&reference_qubit(), &geom, &GratingSpec::blazed(10).unwrap()).unwrap();
        assert!(mask.depths[0] < mask.depths[1]);
        assert_abs_diff_eq!(mask.depths[1], 1.8 * PI, epsilon = 1e-12);
        let r1 = geom.slit_rect(1, mask.window).unwrap();
        // full-depth staircase shifted by 0.63π
        for c in 0..10 {
            let expected = wrap_two_pi(c as f64 * 0.2 * PI + 0.63 * PI);
            assert_abs_diff_eq!(mask.phases[(r1.row0, r1.col0 + c)], expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn slit_regions_are_disjoint() {
        let geom = SlitGeometry::with_defaults(7).unwrap();
        let w = SlmWindow::for_geometry(&geom, 2.0).unwrap();
        let rects: Vec<PixelRect> = (0..7).map(|s| geom.slit_rect(s, w).unwrap()).collect();
        for (i, a) in rects.iter().enumerate() {
            for b in &rects[i + 1..] {
                assert!(a.row0 + a.rows <= b.row0);
            }
        }
        // symmetric about the axis
        let top = rects[0].row0;
        let bottom = w.rows - (rects[6].row0 + rects[6].rows);
        assert_eq!(top, bottom);
    }

    #[test]
    fn gray_rendering() {
        let geom = SlitGeometry::with_defaults(2).unwrap();
        let mut mask = synthesize_mask(&reference_qubit(), &geom, &GratingSpec::binary()).unwrap();
        mask.phases.fill(0.0);
        assert!(render_mask_gray(&mask, 256).unwrap().pixels.iter().all(|&p| p == 0));
        mask.phases.fill(PI);
        assert!(render_mask_gray(&mask, 256).unwrap().pixels.iter().all(|&p| p == 128));
        assert!(render_mask_gray(&mask, 1).is_err());
        assert!(render_mask_gray(&mask, 257).is_err());
        mask.phases.fill(2.0 * PI - 1e-9);
        assert!(render_mask_gray(&mask, 16).unwrap().pixels.iter().all(|&p| p == 15));
    }

    proptest! {
        #[test]
        fn depth_round_trip(mag in 0.0f64..=1.0, blazed in any::<bool>()) {
            let spec = if blazed { GratingSpec::blazed(10).unwrap() } else { GratingSpec::binary() };
            let depth = spec.depth_for_amplitude(mag, 10).unwrap();
            let ratio = (grating::order_efficiency(&spec, 10, depth, 1, 8)
                / grating::order_efficiency(&spec, 10, spec.max_depth(), 1, 8)).sqrt();
            prop_assert!((ratio - mag).abs() < 1e-4);
        }

        #[test]
        fn depth_is_strictly_increasing(a in 1e-3f64..1.0, b in 1e-3f64..1.0, blazed in any::<bool>()) {
            prop_assume!((a - b).abs() > 1e-6);
            let spec = if blazed { GratingSpec::blazed(10).unwrap() } else { GratingSpec::binary() };
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(spec.depth_for_amplitude(lo, 10).unwrap() < spec.depth_for_amplitude(hi, 10).unwrap());
        }

        #[test]
        fn mask_phases_wrapped_and_offset_periodic(
            re in -1.0f64..1.0, im in -1.0f64..1.0, phase in -6.0f64..6.0, blazed in any::<bool>()
        ) {
            prop_assume!(re.abs() + im.abs() > 1e-3);
            let geom = SlitGeometry::new(2, 8, 16, 64, 10, 8.0).unwrap();
            let spec = if blazed { GratingSpec::blazed(10).unwrap() } else { GratingSpec::binary() };
            let a = QuditState::normalize(&[C64::new(re, im), C64::from_polar(0.8, phase)]).unwrap();
            let b = QuditState::normalize(&[C64::new(re, im), C64::from_polar(0.8, phase + 2.0 * PI)]).unwrap();
            let ma = synthesize_mask(&a, &geom, &spec).unwrap();
            let mb = synthesize_mask(&b, &geom, &spec).unwrap();
            for (x, y) in ma.phases.iter().zip(mb.phases.iter()) {
                prop_assert!((0.0..2.0 * PI).contains(x));
                let diff = (x - y).abs();
                prop_assert!(diff.min(2.0 * PI - diff) < 1e-9);
            }
        }

        #[test]
        fn global_phase_shifts_slits_uniformly(alpha in -3.0f64..3.0, blazed in any::<bool>()) {
            let geom = SlitGeometry::new(3, 8, 16, 64, 10, 8.0).unwrap();
            let spec = if blazed { GratingSpec::blazed(10).unwrap() } else { GratingSpec::binary() };
            let s = QuditState::normalize(&[C64::new(0.3, 0.2), C64::new(-0.5, 0.1), C64::new(0.0, 0.7)]).unwrap();
            let ma = synthesize_mask(&s, &geom, &spec).unwrap();
            let mb = synthesize_mask(&s.with_global_phase(alpha), &geom, &spec).unwrap();
            for slit in 0..3 {
                let r = geom.slit_rect(slit, ma.window).unwrap();
                for row in r.row0..r.row0 + r.rows {
                    for col in r.col0..r.col0 + r.cols {
                        let d = wrap_two_pi(mb.phases[(row, col)] - ma.phases[(row, col)] - alpha);
                        prop_assert!(d.min(2.0 * PI - d) < 1e-9);
                    }
                }
            }
        }
    }
}
