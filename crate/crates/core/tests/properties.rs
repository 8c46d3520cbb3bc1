use std::f64::consts::PI;

use proptest::prelude::*;
use qudit_slm::harness::derive_seed;
use qudit_slm::mask::{synthesize_mask, GratingSpec, SlitGeometry};
use qudit_slm::optics::{
    apply_mask, far_field, illuminate, near_field_image, order_spectrum, IntensityCurve, NoiseModel, OpticsParams, SimGrid,
};
use qudit_slm::state::wrap_pi;
use qudit_slm::tomography::{
    default_xi_set, far_projectors, fit_phases, fixed_point_residual, mle_reconstruct, near_projectors, simulate_counts,
    FitOptions, MleOptions, Projector,
};
use qudit_slm::{DensityMatrix, QuditState, C64};

fn state_strategy(dims: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = QuditState> {
    dims.prop_flat_map(|d| proptest::collection::vec((0.05f64..1.0, -PI..PI), d))
        .prop_map(|v| QuditState::normalize(&v.iter().map(|&(m, p)| C64::from_polar(m, p)).collect::<Vec<_>>()).unwrap())
}

fn grating(blazed: bool) -> GratingSpec {
    if blazed {
        GratingSpec::blazed(10).unwrap()
    } else {
        GratingSpec::binary()
    }
}

fn full_set(d: usize) -> Vec<Projector> {
    let mut ps = near_projectors(d).unwrap();
    ps.extend(far_projectors(d, &default_xi_set(d)).unwrap());
    ps
}

fn assert_density(rho: &DensityMatrix) {
    let m = rho.entries();
    assert!((m - m.adjoint()).iter().all(|v| v.norm() <= 1e-10));
    assert!((m.trace().re - 1.0).abs() <= 1e-10);
    assert!(rho.min_eigenvalue() >= -1e-10);
}

/// Far-field curve of ideal slits written from the interference formula.
fn model_curve(psi: &QuditState, geom: &SlitGeometry, optics: &OpticsParams) -> IntensityCurve {
    let lf = optics.lambda_f_um2();
    let positions_um: Vec<f64> = (-250..=250).map(|k| k as f64 * 5.0).collect();
    let intensity = positions_um
        .iter()
        .map(|&y| {
            let u = PI * geom.slit_width_um() * y / lf;
            let env = if u == 0.0 { 1.0 } else { (u.sin() / u).powi(2) };
            let xi = 2.0 * PI * geom.slit_period_um() * y / lf;
            let f: C64 = (0..psi.dimension()).map(|l| psi.amplitude(l) * C64::from_polar(1.0, -(l as f64) * xi)).sum();
            env * f.norm_sqr()
        })
        .collect();
    IntensityCurve { positions_um, intensity }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn orders_are_complete(frac in 0.0f64..=1.0, blazed in any::<bool>(), s in 1usize..6) {
        let spec = grating(blazed);
        let total: f64 = order_spectrum(&spec, 10, frac * spec.max_depth(), s).iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9, "{}", total);
    }

    #[test]
    fn transforms_conserve_power(psi in state_strategy(2..=3), blazed in any::<bool>(), s in 1usize..3) {
        let d = psi.dimension();
        let geom = SlitGeometry::new(d, 4, 8, 40, 4, 8.0).unwrap();
        let mask = synthesize_mask(&psi, &geom, &grating(blazed)).unwrap();
        let grid = SimGrid::with_window(&geom, mask.window, s).unwrap();
        let optics = OpticsParams::default();
        let f0 = illuminate(&grid, &NoiseModel::ideal(), &optics).unwrap();
        let p0 = f0.total_power();
        let f1 = apply_mask(f0, &mask, &NoiseModel::ideal(), 0).unwrap();
        let p1 = f1.total_power();
        prop_assert!((p1 - p0).abs() <= 1e-12 * p0);
        let f2 = far_field(f1).unwrap();
        let p2 = f2.total_power();
        prop_assert!((p2 - p1).abs() <= 1e-9 * p1);
        let p3 = near_field_image(f2).unwrap().total_power();
        prop_assert!((p3 - p2).abs() <= 1e-9 * p2);
    }

    #[test]
    fn fields_are_reproducible(psi in state_strategy(2..=2), seed in any::<u64>(), noisy in any::<bool>()) {
        let geom = SlitGeometry::new(2, 4, 8, 40, 4, 8.0).unwrap();
        let mask = synthesize_mask(&psi, &geom, &GratingSpec::binary()).unwrap();
        let grid = SimGrid::with_window(&geom, mask.window, 2).unwrap();
        let noise = if noisy { NoiseModel::pluto_like() } else { NoiseModel::ideal() };
        let run = || {
            let f = illuminate(&grid, &noise, &OpticsParams::default()).unwrap();
            far_field(apply_mask(f, &mask, &noise, seed).unwrap()).unwrap()
        };
        let (a, b) = (run(), run());
        prop_assert!(a.samples.iter().zip(b.samples.iter()).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
    }

    #[test]
    fn projectors_are_rank_one(d in 2usize..8, xi in -10.0f64..10.0) {
        let mut ps = near_projectors(d).unwrap();
        ps.extend(far_projectors(d, &[xi]).unwrap());
        for p in &ps {
            let op = &p.operator;
            prop_assert!((op - op.adjoint()).iter().all(|v| v.norm() < 1e-14));
            prop_assert!((op.trace().re - 1.0).abs() < 1e-12);
            prop_assert!((op * op - op).iter().all(|v| v.norm() < 1e-12));
        }
        let near_sum = near_projectors(d).unwrap().iter().fold(nalgebra::DMatrix::<C64>::zeros(d, d), |acc, p| acc + &p.operator);
        prop_assert_eq!(near_sum, nalgebra::DMatrix::<C64>::identity(d, d));
    }

    #[test]
    fn mle_is_monotone_and_physical(psi in state_strategy(2..=4), mix in 0.0f64..0.5, n in 200u64..20_000, seed in any::<u64>()) {
        let rho = DensityMatrix::from_pure(&psi).mixed_with_identity(mix);
        let rec = simulate_counts(&rho, &full_set(psi.dimension()), n, true, seed).unwrap();
        let opts = MleOptions { max_iterations: 3000, ..Default::default() };
        let res = mle_reconstruct(&rec, &opts).unwrap();
        prop_assert!(res.trace.windows(2).all(|w| w[1] >= w[0]), "{:?}", res.trace);
        assert_density(&res.rho);
    }

    #[test]
    fn fit_ignores_a_common_phase(psi in state_strategy(2..=3), alpha in -PI..PI) {
        let geom = SlitGeometry::with_defaults(psi.dimension()).unwrap();
        let optics = OpticsParams::default();
        let amps: Vec<f64> = (0..psi.dimension()).map(|l| psi.amplitude(l).norm()).collect();
        let a = fit_phases(&amps, &model_curve(&psi, &geom, &optics), &geom, &optics, &FitOptions::default()).unwrap();
        let shifted = psi.with_global_phase(alpha);
        let b = fit_phases(&amps, &model_curve(&shifted, &geom, &optics), &geom, &optics, &FitOptions::default()).unwrap();
        for (x, y) in a.phases.iter().zip(&b.phases) {
            prop_assert!(wrap_pi(x - y).abs() < 1e-6, "{:?} {:?}", a.phases, b.phases);
        }
    }

    #[test]
    fn derived_seeds_are_stable(master in any::<u64>(), id in "[a-z0-9-]{1,12}") {
        prop_assert_eq!(derive_seed(master, &id), derive_seed(master, &id));
        prop_assert_ne!(derive_seed(master, &id), derive_seed(master, &format!("{id}/x")));
    }
}

#[test]
fn qubit_far_set_averages_to_equal_coherences() {
    let ps = far_projectors(2, &default_xi_set(2)).unwrap();
    let avg = ps.iter().fold(nalgebra::DMatrix::<C64>::zeros(2, 2), |acc, p| acc + &p.operator) / C64::new(4.0, 0.0);
    assert!((avg[(0, 1)].norm() - avg[(1, 0)].norm()).abs() < 1e-15);
}

#[test]
fn mle_reaches_its_fixed_point() {
    let psi = QuditState::normalize(&[C64::new(0.7, 0.1), C64::from_polar(0.5, 2.0), C64::new(0.2, -0.4)]).unwrap();
    let rho = DensityMatrix::from_pure(&psi).mixed_with_identity(0.2);
    let ps = full_set(3);
    let values = ps.iter().map(|p| p.probability_of(&rho)).collect();
    let rec = qudit_slm::tomography::MeasurementRecord::new(ps, values, qudit_slm::tomography::RecordMode::Intensity).unwrap();
    let opts = MleOptions::default();
    let res = mle_reconstruct(&rec, &opts).unwrap();
    assert!(fixed_point_residual(&rec, &res.rho).unwrap() < 10.0 * opts.tolerance);
}
