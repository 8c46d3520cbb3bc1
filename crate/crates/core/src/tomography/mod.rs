//! Reconstruction of the prepared state from near- and far-field data.
//!
//! The near-field camera measures `{|ℓ⟩⟨ℓ|}`; a far-field pixel at phase
//! `ξ` measures `|χ_ξ⟩⟨χ_ξ|` with `χ_ξ = Σ_ℓ e^{iℓξ}|ℓ⟩/√D` once the slit
//! envelope is divided out. For qubits these projectors are
//! informationally complete. For `D > 2` the far-field pattern only fixes
//! the sums of each diagonal of `ρ`, so pure-state reconstructions start
//! from a [`fit_phases`] estimate and are refined by maximum likelihood.

mod mle;
mod phase_fit;
mod positions;
mod projector;
mod record;

pub use mle::{fixed_point_residual, log_likelihood, mle_reconstruct, MleOptions, MleResult, StopReason};
pub use phase_fit::{fit_phases, FitOptions, PhaseFit};
pub use positions::{far_samples, xi_positions, FarSample};
pub use projector::{default_xi_set, far_projectors, near_projectors, MeasurementGroup, Projector, ProjectorLabel};
pub use record::{simulate_counts, MeasurementRecord, RecordMode};
