//! State vectors, density matrices and the qubit Bloch sphere.
//!
//! Phases are radians. States are compared up to a global phase everywhere;
//! [`QuditState::digest`] is the only place where a canonical phase is fixed.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::C64;

const NORM_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;

/// Name of the deterministic lattice produced by [`sample_bloch_sphere`].
pub const SPHERE_SAMPLING_SCHEME: &str = "fibonacci-equal-area-poles";

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_two_pi(angle: f64) -> f64 {
    let w = angle.rem_euclid(2.0 * PI);
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_pi(angle: f64) -> f64 {
    let w = wrap_two_pi(angle);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Normalized pure state of a `D`-level spatial qudit; amplitude `ℓ` belongs
/// to the photon passing through slit `ℓ`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuditState {
    amplitudes: DVector<C64>,
}

impl QuditState {
    /// Scales `raw` to unit norm.
    pub fn normalize(raw: &[C64]) -> Result<Self> {
        if raw.len() < 2 {
            return Err(Error::Dimension(raw.len()));
        }
        let norm = raw.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidState(format!("cannot normalize a vector of norm {norm}")));
        }
        Ok(Self {
            amplitudes: DVector::from_iterator(raw.len(), raw.iter().map(|c| c / norm)),
        })
    }

    /// Accepts amplitudes that are already normalized.
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::Dimension(amplitudes.len()));
        }
        let norm_sqr: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("squared norm {norm_sqr} is not 1")));
        }
        Ok(Self { amplitudes: DVector::from_vec(amplitudes) })
    }

    /// Haar-random pure state drawn from `rng`.
    pub fn haar_random<R: Rng + ?Sized>(dimension: usize, rng: &mut R) -> Result<Self> {
        let raw: Vec<C64> = (0..dimension)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::normalize(&raw)
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, slit: usize) -> C64 {
        self.amplitudes[slit]
    }

    /// The same ray multiplied by `e^{iα}`.
    pub fn with_global_phase(&self, alpha: f64) -> Self {
        let phase = C64::from_polar(1.0, alpha);
        Self { amplitudes: self.amplitudes.map(|c| c * phase) }
    }

    /// `|⟨self|other⟩|²`.
    pub fn overlap(&self, other: &QuditState) -> Result<f64> {
        check_dims(self.dimension(), other.dimension())?;
        Ok(self.amplitudes.dotc(&other.amplitudes).norm_sqr())
    }

    /// Copy with the global phase fixed so the first nonzero amplitude is
    /// real and positive.
    pub fn canonical(&self) -> Self {
        let lead = self
            .amplitudes
            .iter()
            .find(|c| c.norm() > 1e-12)
            .copied()
            .unwrap_or(C64::new(1.0, 0.0));
        self.with_global_phase(-lead.arg())
    }

    /// Short hex digest of the canonical amplitudes (rounded to 1e-9), used to
    /// tag masks and reports with the state they encode.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for c in self.canonical().amplitudes.iter() {
            let re = (c.re * 1e9).round() as i64;
            let im = (c.im * 1e9).round() as i64;
            hasher.update(re.to_le_bytes());
            hasher.update(im.to_le_bytes());
        }
        hex::encode(&hasher.finalize()[..8])
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Hermitian, unit-trace, positive-semidefinite `D×D` operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates the physical-state invariants.
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        let d = entries.nrows();
        if entries.ncols() != d {
            return Err(Error::InvalidState(format!("matrix is {}x{}", d, entries.ncols())));
        }
        if d < 2 {
            return Err(Error::Dimension(d));
        }
        let asym = (&entries - entries.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if asym > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {asym:e})")));
        }
        let trace = entries.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {trace} is not 1")));
        }
        let rho = Self { entries };
        let min_eig = rho.min_eigenvalue();
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(rho)
    }

    /// Builds a density matrix from a Hermitian positive operator with
    /// arbitrary positive trace; rounding asymmetry is removed first.
    pub fn from_unnormalized(op: &DMatrix<C64>) -> Result<Self> {
        let herm = (op + op.adjoint()).map(|c| c * 0.5);
        let trace = herm.trace().re;
        if !trace.is_finite() || trace <= 0.0 {
            return Err(Error::InvalidState(format!("operator trace {trace} is not positive")));
        }
        Self::new(herm.map(|c| c / trace))
    }

    /// Rank-one projector `|ψ⟩⟨ψ|`.
    pub fn from_pure(psi: &QuditState) -> Self {
        let v = psi.amplitudes();
        let entries = v * v.adjoint();
        let entries = (&entries + entries.adjoint()).map(|c| c * 0.5);
        Self { entries }
    }

    /// `I/D`.
    pub fn maximally_mixed(dimension: usize) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::Dimension(dimension));
        }
        let scale = C64::new(1.0 / dimension as f64, 0.0);
        Ok(Self { entries: DMatrix::identity(dimension, dimension) * scale })
    }

    /// `(1 - weight)·ρ + weight·I/D`.
    pub fn mixed_with_identity(&self, weight: f64) -> Self {
        let d = self.dimension();
        let id = DMatrix::<C64>::identity(d, d) * C64::new(weight / d as f64, 0.0);
        Self { entries: self.entries.map(|c| c * (1.0 - weight)) + id }
    }

    pub fn dimension(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.entries.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn purity(&self) -> f64 {
        (&self.entries * &self.entries).trace().re
    }

    /// `⟨ψ|ρ|ψ⟩` without clamping.
    pub fn expectation(&self, psi: &QuditState) -> Result<C64> {
        check_dims(self.dimension(), psi.dimension())?;
        let v = psi.amplitudes();
        Ok(v.dotc(&(&self.entries * v)))
    }
}

/// Preparation fidelity `F = ⟨ψ|ρ|ψ⟩`, clamped to `[0, 1]`.
pub fn fidelity(target: &QuditState, rho: &DensityMatrix) -> Result<f64> {
    let raw = rho.expectation(target)?;
    if !(0.0..=1.0).contains(&raw.re) || raw.im.abs() > 1e-12 {
        log::debug!("clamping raw fidelity {raw}");
    }
    Ok(raw.re.clamp(0.0, 1.0))
}

/// Point on the qubit Bloch sphere: `θ ∈ [0, π]`, `φ ∈ (-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BlochPoint {
    pub theta: f64,
    pub phi: f64,
}

impl BlochPoint {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::OutOfRange { what: "polar angle theta", value: theta });
        }
        if !(phi > -PI && phi <= PI) {
            return Err(Error::OutOfRange { what: "azimuth phi", value: phi });
        }
        Ok(Self { theta, phi })
    }

    /// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
    pub fn to_state(&self) -> QuditState {
        let a = C64::new((self.theta / 2.0).cos(), 0.0);
        let b = C64::from_polar((self.theta / 2.0).sin(), self.phi);
        QuditState { amplitudes: DVector::from_vec(vec![a, b]) }
    }

    /// Inverse of [`BlochPoint::to_state`] up to global phase; at the poles the
    /// azimuth is reported as 0.
    pub fn from_state(psi: &QuditState) -> Result<Self> {
        check_dims(2, psi.dimension())?;
        let (a, b) = (psi.amplitude(0), psi.amplitude(1));
        let theta = 2.0 * b.norm().atan2(a.norm());
        let phi = if a.norm() < 1e-12 || b.norm() < 1e-12 { 0.0 } else { wrap_pi(b.arg() - a.arg()) };
        Self::new(theta.clamp(0.0, PI), phi)
    }
}

/// Free-function form of [`BlochPoint::to_state`].
pub fn bloch_to_state(p: BlochPoint) -> QuditState {
    p.to_state()
}

/// Deterministic near-uniform lattice of `count` points: both poles plus a
/// golden-angle spiral whose rings split the remaining area equally, so the
/// polar caps carry the same area as every interior point.
pub fn sample_bloch_sphere(count: usize) -> Result<Vec<BlochPoint>> {
    if count < 2 {
        return Err(Error::OutOfRange { what: "sphere sample count", value: count as f64 });
    }
    let interior = count - 2;
    let golden = PI * (3.0 - 5f64.sqrt());
    let cap = 2.0 / count as f64;
    let mut points = Vec::with_capacity(count);
    points.push(BlochPoint { theta: 0.0, phi: 0.0 });
    for i in 0..interior {
        let z = (1.0 - cap) - 2.0 * (1.0 - cap) * (i as f64 + 0.5) / interior as f64;
        points.push(BlochPoint { theta: z.clamp(-1.0, 1.0).acos(), phi: wrap_pi(i as f64 * golden) });
    }
    points.push(BlochPoint { theta: PI, phi: 0.0 });
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn normalize_examples() {
        let s = QuditState::normalize(&[c(0.67, 0.0), C64::from_polar(1.0, 0.63 * PI)]).unwrap();
        assert_abs_diff_eq!(s.amplitude(0).norm(), 0.56, epsilon = 0.005);
        assert_abs_diff_eq!(s.amplitude(1).norm(), 0.83, epsilon = 0.005);
        assert_abs_diff_eq!(s.amplitude(1).arg(), 0.63 * PI, epsilon = 1e-12);

        let s = QuditState::normalize(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(s.amplitude(0), c(1.0, 0.0));

        let s = QuditState::normalize(&[c(2.0, 0.0), c(0.0, 2.0), c(0.0, 0.0)]).unwrap();
        let h = 0.5f64.sqrt();
        assert_abs_diff_eq!((s.amplitude(0) - c(h, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((s.amplitude(1) - c(0.0, h)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn normalize_errors() {
        assert!(matches!(
            QuditState::normalize(&[c(0.0, 0.0), c(0.0, 0.0)]),
            Err(Error::InvalidState(_))
        ));
        assert!(matches!(QuditState::normalize(&[c(1.0, 0.0)]), Err(Error::Dimension(1))));
        assert!(QuditState::from_amplitudes(vec![c(1.0, 0.0), c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let zero = QuditState::normalize(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(fidelity(&zero, &DensityMatrix::from_pure(&zero)).unwrap(), 1.0);
        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        assert_abs_diff_eq!(fidelity(&zero, &mixed).unwrap(), 0.5, epsilon = 1e-15);

        let plus = QuditState::normalize(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let diag = DensityMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![
            c(0.7, 0.0),
            c(0.3, 0.0),
        ])))
        .unwrap();
        // (0.7 + 0.3) / 2 by hand.
        assert_abs_diff_eq!(fidelity(&plus, &diag).unwrap(), 0.5, epsilon = 1e-12);

        let three = QuditState::normalize(&[c(1.0, 0.0); 3]).unwrap();
        assert!(matches!(fidelity(&three, &mixed), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn density_from_pure_examples() {
        let s = QuditState::normalize(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let rho = DensityMatrix::from_pure(&s);
        assert_eq!(rho.entries()[(0, 0)], c(1.0, 0.0));
        assert_eq!(rho.entries()[(1, 1)], c(0.0, 0.0));

        let s = QuditState::normalize(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        for z in DensityMatrix::from_pure(&s).entries().iter() {
            assert_abs_diff_eq!((z - c(0.5, 0.0)).norm(), 0.0, epsilon = 1e-15);
        }

        // 0.56 · 0.83 = 0.4648 by hand; the pair has norm² 1.0025, so the
        // normalized coherence is 0.4648 / 1.0025.
        let s = QuditState::normalize(&[c(0.56, 0.0), C64::from_polar(0.83, 0.63 * PI)]).unwrap();
        let rho = DensityMatrix::from_pure(&s);
        assert_abs_diff_eq!(rho.entries()[(0, 1)].norm(), 0.56 * 0.83 / 1.0025, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.entries()[(0, 1)].norm(), 0.465, epsilon = 2e-3);
        DensityMatrix::new(rho.entries().clone()).unwrap();
    }

    #[test]
    fn density_validation_rejects_unphysical() {
        let bad_trace = DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.7, 0.0), c(0.7, 0.0)]));
        assert!(DensityMatrix::new(bad_trace).is_err());
        let negative = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.2, 0.0), c(-0.2, 0.0)]));
        assert!(DensityMatrix::new(negative).is_err());
        let mut non_herm = DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.5, 0.0), c(0.5, 0.0)]));
        non_herm[(0, 1)] = c(0.1, 0.0);
        assert!(DensityMatrix::new(non_herm).is_err());
    }

    #[test]
    fn bloch_examples() {
        let north = BlochPoint::new(0.0, 1.234).unwrap().to_state();
        assert_eq!(north.amplitude(0), c(1.0, 0.0));
        assert_abs_diff_eq!(north.amplitude(1).norm(), 0.0);

        let south = BlochPoint::new(PI, 0.0).unwrap().to_state();
        assert_abs_diff_eq!(south.amplitude(0).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((south.amplitude(1) - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);

        let eq = BlochPoint::new(PI / 2.0, PI / 2.0).unwrap().to_state();
        let h = 0.5f64.sqrt();
        assert_abs_diff_eq!((eq.amplitude(0) - c(h, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((eq.amplitude(1) - c(0.0, h)).norm(), 0.0, epsilon = 1e-15);

        assert!(BlochPoint::new(-0.1, 0.0).is_err());
        assert!(BlochPoint::new(1.0, -PI).is_err());
    }

    #[test]
    fn sphere_sampling_examples() {
        let two = sample_bloch_sphere(2).unwrap();
        assert_eq!(two, vec![BlochPoint { theta: 0.0, phi: 0.0 }, BlochPoint { theta: PI, phi: 0.0 }]);
        assert!(sample_bloch_sphere(1).is_err());

        let six = sample_bloch_sphere(6).unwrap();
        assert_eq!(six.len(), 6);
        let north = six.iter().filter(|p| p.theta < PI / 2.0).count();
        let south = six.iter().filter(|p| p.theta > PI / 2.0).count();
        assert_eq!((north, south), (3, 3));
        // interior ring points spread in azimuth
        let mut phis: Vec<f64> = six[1..5].iter().map(|p| p.phi).collect();
        phis.sort_by(f64::total_cmp);
        assert!(phis.windows(2).all(|w| w[1] - w[0] > 0.5));

        let big = sample_bloch_sphere(561).unwrap();
        assert_eq!(big.len(), 561);
        assert_eq!(big.iter().filter(|p| p.theta == 0.0).count(), 1);
        assert_eq!(big.iter().filter(|p| p.theta == PI).count(), 1);
        for p in &big {
            BlochPoint::new(p.theta, p.phi).unwrap();
        }
        assert_eq!(big, sample_bloch_sphere(561).unwrap());
    }

    #[test]
    fn sphere_nearest_neighbour_spacing_is_regular() {
        let pts = sample_bloch_sphere(561).unwrap();
        let xyz: Vec<[f64; 3]> = pts
            .iter()
            .map(|p| [p.theta.sin() * p.phi.cos(), p.theta.sin() * p.phi.sin(), p.theta.cos()])
            .collect();
        let nn: Vec<f64> = xyz
            .iter()
            .enumerate()
            .map(|(i, a)| {
                xyz.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, b)| (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0).acos())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let mean = nn.iter().sum::<f64>() / nn.len() as f64;
        let var = nn.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nn.len() as f64;
        assert!(var.sqrt() / mean < 0.35, "relative std {}", var.sqrt() / mean);
    }

    #[test]
    fn digest_ignores_global_phase() {
        let s = QuditState::normalize(&[c(0.3, 0.1), c(-0.2, 0.9), c(0.0, 0.4)]).unwrap();
        assert_eq!(s.digest(), s.with_global_phase(2.1).digest());
        assert_eq!(s.digest().len(), 16);
    }

    fn arb_state(max_dim: usize) -> impl Strategy<Value = QuditState> {
        (2..=max_dim, any::<u64>()).prop_map(|(d, seed)| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            QuditState::haar_random(d, &mut rng).unwrap()
        })
    }

    proptest! {
        #[test]
        fn fidelity_global_phase_invariant(psi in arb_state(7), alpha in -10.0f64..10.0, mix in 0.0f64..1.0) {
            let rho = DensityMatrix::from_pure(&psi).mixed_with_identity(mix);
            let f1 = fidelity(&psi, &rho).unwrap();
            let f2 = fidelity(&psi.with_global_phase(alpha), &rho).unwrap();
            prop_assert!((f1 - f2).abs() < 1e-12);
        }

        #[test]
        fn pure_self_fidelity_is_one(psi in arb_state(7)) {
            let rho = DensityMatrix::from_pure(&psi);
            DensityMatrix::new(rho.entries().clone()).unwrap();
            prop_assert!((fidelity(&psi, &rho).unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn bloch_round_trip(theta in 1e-6f64..(PI - 1e-6), phi in -PI + 1e-9..PI) {
            let p = BlochPoint::new(theta, phi).unwrap();
            let back = BlochPoint::from_state(&p.to_state().with_global_phase(0.7)).unwrap();
            prop_assert!((back.theta - theta).abs() < 1e-9);
            prop_assert!(wrap_pi(back.phi - phi).abs() < 1e-9);
        }
    }

    #[test]
    fn bloch_poles_extract_to_poles() {
        for theta in [0.0, PI] {
            let back = BlochPoint::from_state(&BlochPoint::new(theta, 2.0).unwrap().to_state()).unwrap();
            assert_abs_diff_eq!(back.theta, theta, epsilon = 1e-12);
        }
    }
}
