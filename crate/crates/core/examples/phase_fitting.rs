//! Recovers the relative slit phases of a qutrit from its simulated
//! far-field curve, given the near-field slit powers.

use std::f64::consts::PI;

use qudit_slm::harness::{prepare, Setup};
use qudit_slm::mask::{GratingSpec, SlitGeometry};
use qudit_slm::state::wrap_pi;
use qudit_slm::tomography::{fit_phases, FitOptions};
use qudit_slm::{QuditState, C64};

fn main() -> qudit_slm::Result<()> {
    let truth = [0.35 * PI, 1.4 * PI];
    let state = QuditState::normalize(&[
        C64::new(0.5, 0.0),
        C64::from_polar(0.7, truth[0]),
        C64::from_polar(0.9, truth[1]),
    ])?;
    let setup = Setup::ideal(SlitGeometry::with_defaults(3)?, GratingSpec::blazed(10)?);
    let prep = prepare(&state, &setup, 0)?;
    let amps: Vec<f64> = prep.slit_powers.iter().map(|p| p.sqrt()).collect();
    let fit = fit_phases(&amps, &prep.far_curve, &setup.geometry, &setup.optics, &FitOptions::default())?;

    println!("slit powers {:?}", prep.slit_powers);
    for (l, (t, f)) in truth.iter().zip(&fit.phases).enumerate() {
        println!("phi_{} target {t:.4} fitted {f:.4} error {:+.4}", l + 1, wrap_pi(f - t));
    }
    println!("residual {:.2e} after {} starts", fit.residual, fit.starts);
    Ok(())
}
