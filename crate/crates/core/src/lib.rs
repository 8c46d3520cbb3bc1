//! Preparation of arbitrary pure states of spatial qudits with a single
//! phase-only spatial light modulator, simulated end to end.
//!
//! A target state is encoded into a phase grating mask ([`mask`]), the mask
//! is illuminated and propagated through a 4f system whose Fourier-plane iris
//! keeps the first diffraction order ([`optics`]), the near- and far-field
//! intensities are turned into a measurement record and the prepared state is
//! reconstructed by maximum likelihood ([`tomography`]). [`harness`] wires the
//! pieces into the prepare / tomography / sweep workflows used by the
//! `qudit-slm` binary and the programs under `examples/`.

pub mod error;
pub mod formats;
pub mod harness;
pub mod mask;
pub mod optics;
pub mod state;
pub mod tomography;

pub use error::{Error, Result};
pub use mask::{GratingKind, GratingSpec, PhaseMask, SlitGeometry, SlmWindow};
pub use optics::{ComplexField, IrisSpec, NoiseModel, OpticsParams, Plane, SimGrid};
pub use state::{BlochPoint, DensityMatrix, QuditState};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
