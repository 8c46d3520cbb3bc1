//! Maximum-likelihood reconstruction of a qubit from simulated photon counts
//! on the near-field and far-field projectors.

use qudit_slm::state::fidelity;
use qudit_slm::tomography::{
    default_xi_set, far_projectors, mle_reconstruct, near_projectors, simulate_counts, MleOptions,
};
use qudit_slm::{DensityMatrix, QuditState, C64};

fn main() -> qudit_slm::Result<()> {
    let psi = QuditState::normalize(&[C64::new(0.6, 0.0), C64::from_polar(0.8, 2.2)])?;
    let rho = DensityMatrix::from_pure(&psi);
    let mut projectors = near_projectors(2)?;
    projectors.extend(far_projectors(2, &default_xi_set(2))?);

    for counts in [1_000u64, 100_000, 10_000_000] {
        let record = simulate_counts(&rho, &projectors, counts, true, 7)?;
        let fit = mle_reconstruct(&record, &MleOptions::default())?;
        println!(
            "N = {counts:>8}: F = {:.6}, {} iterations ({}), log L = {:.3}",
            fidelity(&psi, &fit.rho)?,
            fit.iterations,
            fit.stop_reason.name(),
            fit.log_likelihood
        );
    }
    Ok(())
}
