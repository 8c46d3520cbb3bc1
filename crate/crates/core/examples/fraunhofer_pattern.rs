//! Simulates the filtered far field of a three-slit state and compares it
//! with the sinc²-enveloped interference formula.

use std::f64::consts::PI;

use qudit_slm::harness::{prepare, Setup};
use qudit_slm::mask::{GratingSpec, SlitGeometry};
use qudit_slm::optics::analytic::multi_slit_intensity;
use qudit_slm::{QuditState, C64};

fn main() -> qudit_slm::Result<()> {
    let raw = [C64::new(0.5, 0.0), C64::from_polar(0.6, 0.4 * PI), C64::from_polar(0.62, -0.7 * PI)];
    let state = QuditState::normalize(&raw)?;
    let setup = Setup::ideal(SlitGeometry::with_defaults(3)?, GratingSpec::blazed(10)?);
    let prep = prepare(&state, &setup, 0)?;

    let amps: Vec<C64> = state.amplitudes().iter().copied().collect();
    let curve = &prep.far_profile;
    let model: Vec<f64> = curve
        .positions_um
        .iter()
        .map(|&y| multi_slit_intensity(&amps, &setup.geometry, &setup.optics, y))
        .collect();
    let num: f64 = curve.intensity.iter().zip(&model).map(|(a, b)| a * b).sum();
    let den: f64 = model.iter().map(|b| b * b).sum();
    let scale = num / den;
    let err: f64 = curve.intensity.iter().zip(&model).map(|(a, b)| (a - scale * b).powi(2)).sum::<f64>().sqrt()
        / curve.intensity.iter().map(|a| a * a).sum::<f64>().sqrt();

    println!("iris throughput {:.4}", prep.iris_throughput);
    println!("relative L2 error against the analytic pattern: {err:.2e}");
    println!("    y (um)   simulated    analytic");
    for (k, (&y, &i)) in curve.positions_um.iter().zip(&curve.intensity).enumerate() {
        if y.abs() <= 600.0 && k % 8 == 0 {
            println!("{y:10.1}  {i:10.4e}  {:10.4e}", scale * model[k]);
        }
    }
    Ok(())
}
