//! Fidelity of a prepared qutrit under SLM phase jitter, a misaligned
//! Gaussian beam and finite photon counts.

use std::f64::consts::PI;

use qudit_slm::harness::{run_pipeline, Setup, TomographySettings};
use qudit_slm::mask::{GratingSpec, SlitGeometry};
use qudit_slm::optics::{NoiseModel, ShotNoise};
use qudit_slm::{QuditState, C64};

fn main() -> qudit_slm::Result<()> {
    let state = QuditState::normalize(&[
        C64::new(0.5, 0.0),
        C64::from_polar(0.7, 0.3 * PI),
        C64::from_polar(0.4, -0.8 * PI),
    ])?;
    let misaligned = NoiseModel { beam_waist_um: Some(3000.0), beam_offset_um: (0.0, 400.0), ..NoiseModel::ideal() };
    let counted = NoiseModel { shot_noise: ShotNoise::Poisson { total_counts: 20_000 }, ..NoiseModel::ideal() };
    let cases = [
        ("ideal", NoiseModel::ideal()),
        ("pluto-like jitter", NoiseModel::pluto_like()),
        ("offset gaussian beam", misaligned),
        ("20k photon counts", counted),
    ];
    for (name, noise) in cases {
        let setup = Setup { noise, ..Setup::ideal(SlitGeometry::with_defaults(3)?, GratingSpec::blazed(10)?) };
        let run = run_pipeline(&state, &setup, &TomographySettings::default(), 11)?;
        println!(
            "{name:>22}: F = {:.5}, slit powers {:?}",
            run.fidelity,
            run.preparation.slit_powers.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>()
        );
    }
    Ok(())
}
