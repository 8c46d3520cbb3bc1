//! Scalar Fourier optics of the preparation setup.
//!
//! The mask plane is sampled `S×S` times per SLM pixel. A lens of focal
//! length `f` maps it onto the Fourier plane with a centred unitary DFT:
//! along an axis of `M` samples at pitch `δ`, Fourier sample `k` sits at
//! `u = (k - M/2)·λf/(M·δ)`. An iris there keeps the first diffraction order
//! and a second lens images the filtered field back onto the image plane.
//!
//! Layout convention: rows run across the slits (y), columns along the slit
//! length and the grating (x). The first order is displaced along x.

pub mod analytic;
pub mod fft;
pub mod grating;
mod measure;
pub mod noise;
mod propagate;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{PixelRect, SlitGeometry, SlmWindow};
use crate::C64;

pub use grating::{order_efficiency, order_spectrum};
pub use measure::{farfield_intensity_curve, nearfield_intensity_curve, slit_powers, IntensityCurve};
pub use noise::{NoiseModel, ShotNoise};
pub use propagate::{
    apply_mask, far_field, far_field_band, far_field_profile, far_field_through_iris, illuminate, iris_filter, near_field_image,
};

/// Laser wavelength and lens focal length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpticsParams {
    pub wavelength_nm: f64,
    pub focal_mm: f64,
}

impl Default for OpticsParams {
    /// 647 nm diode laser, 30 cm lenses.
    fn default() -> Self {
        Self { wavelength_nm: 647.0, focal_mm: 300.0 }
    }
}

impl OpticsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength_nm > 0.0 && self.wavelength_nm.is_finite()) {
            return Err(Error::OutOfRange { what: "wavelength", value: self.wavelength_nm });
        }
        if !(self.focal_mm > 0.0 && self.focal_mm.is_finite()) {
            return Err(Error::OutOfRange { what: "focal length", value: self.focal_mm });
        }
        Ok(())
    }

    /// `λ·f` in µm² (nm·mm = µm²).
    pub fn lambda_f_um2(&self) -> f64 {
        self.wavelength_nm * self.focal_mm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    Mask,
    Fourier,
    Image,
}

impl Plane {
    pub fn name(&self) -> &'static str {
        match self {
            Plane::Mask => "mask",
            Plane::Fourier => "fourier",
            Plane::Image => "image",
        }
    }
}

/// Sampled complex field.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    /// Row-major samples, rows along y.
    pub samples: Array2<C64>,
    /// Sample pitch of the mask/image planes. Fourier-plane spacing follows
    /// from it, see [`ComplexField::spacing_um`].
    pub pitch_um: f64,
    pub plane: Plane,
    pub wavelength_nm: f64,
    pub focal_mm: f64,
}

impl ComplexField {
    pub fn rows(&self) -> usize {
        self.samples.nrows()
    }

    pub fn cols(&self) -> usize {
        self.samples.ncols()
    }

    pub fn total_power(&self) -> f64 {
        self.samples.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn lambda_f_um2(&self) -> f64 {
        self.wavelength_nm * self.focal_mm
    }

    /// Sample spacing `(dy, dx)` in the current plane.
    pub fn spacing_um(&self) -> (f64, f64) {
        match self.plane {
            Plane::Fourier => (
                self.lambda_f_um2() / (self.rows() as f64 * self.pitch_um),
                self.lambda_f_um2() / (self.cols() as f64 * self.pitch_um),
            ),
            _ => (self.pitch_um, self.pitch_um),
        }
    }

    /// Physical y coordinate of row `r`.
    pub fn y_um(&self, row: usize) -> f64 {
        (row as f64 - (self.rows() / 2) as f64) * self.spacing_um().0
    }

    /// Physical x coordinate of column `c`.
    pub fn x_um(&self, col: usize) -> f64 {
        (col as f64 - (self.cols() / 2) as f64) * self.spacing_um().1
    }

    pub(crate) fn expect_plane(&self, allowed: &[Plane], expected: &'static str) -> Result<()> {
        if allowed.contains(&self.plane) {
            Ok(())
        } else {
            Err(Error::Plane { expected, found: self.plane.name() })
        }
    }
}

/// Sampling of the simulated SLM window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimGrid {
    pub geometry: SlitGeometry,
    pub window: SlmWindow,
    pub subsampling: usize,
}

impl SimGrid {
    /// Window sized with `guard` times the aperture extent per axis.
    pub fn new(geometry: &SlitGeometry, subsampling: usize, guard: f64) -> Result<Self> {
        let window = SlmWindow::for_geometry(geometry, guard)?;
        Self::with_window(geometry, window, subsampling)
    }

    pub fn with_window(geometry: &SlitGeometry, window: SlmWindow, subsampling: usize) -> Result<Self> {
        geometry.validate()?;
        if subsampling == 0 {
            return Err(Error::OutOfRange { what: "subsampling", value: 0.0 });
        }
        for slit in 0..geometry.dimension {
            geometry.slit_rect(slit, window)?;
        }
        Ok(Self { geometry: *geometry, window, subsampling })
    }

    pub fn sample_dims(&self) -> (usize, usize) {
        (self.window.rows * self.subsampling, self.window.cols * self.subsampling)
    }

    pub fn sample_pitch_um(&self) -> f64 {
        self.geometry.pixel_pitch_um / self.subsampling as f64
    }

    /// Sample rectangle covered by slit `ℓ`.
    pub fn slit_samples(&self, slit: usize) -> Result<PixelRect> {
        Ok(self.geometry.slit_rect(slit, self.window)?.scaled(self.subsampling))
    }
}

/// Iris in the Fourier plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrisSpec {
    pub center_x_um: f64,
    pub center_y_um: f64,
    pub radius_um: f64,
}

impl IrisSpec {
    /// Centred on the +1 order at `λf/Λ`, radius half the order spacing.
    pub fn first_order(geom: &SlitGeometry, optics: &OpticsParams) -> Self {
        let spacing = optics.lambda_f_um2() / geom.grating_period_um();
        Self { center_x_um: spacing, center_y_um: 0.0, radius_um: spacing / 2.0 }
    }

    pub fn with_radius(mut self, radius_um: f64) -> Self {
        self.radius_um = radius_um;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius_um > 0.0) {
            return Err(Error::Config(format!("iris radius {} um must be positive", self.radius_um)));
        }
        if self.center_x_um.hypot(self.center_y_um) <= self.radius_um {
            return Err(Error::Config("iris overlaps the zeroth diffraction order".into()));
        }
        Ok(())
    }

    pub fn contains(&self, x_um: f64, y_um: f64) -> bool {
        (x_um - self.center_x_um).hypot(y_um - self.center_y_um) <= self.radius_um
    }
}
