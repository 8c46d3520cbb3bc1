//! Diluted `RρR` maximum-likelihood reconstruction.
//!
//! Measurement groups (near and far cameras) are normalized separately, so
//! the likelihood is `Σ_g Σ_{k∈g} f_k ln(p_k / P_g)` with `P_g` the total
//! probability the group's projectors can register. Each step applies
//! `ρ ← AρA†/tr(AρA†)` with `A = (1-t)I + t·H⁻¹R`, halving `t` until the
//! likelihood does not decrease.

use nalgebra::DMatrix;

use super::record::MeasurementRecord;
use crate::error::{Error, Result};
use crate::state::DensityMatrix;
use crate::C64;

const MIN_DILUTION: f64 = 1.0 / (1u64 << 30) as f64;
const PROB_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone)]
pub struct MleOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Starting state; `I/D` when absent.
    pub initial: Option<DensityMatrix>,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iterations: 10_000, initial: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// No dilution of the update raised the likelihood.
    Stalled,
}

impl StopReason {
    pub fn name(&self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::MaxIterations => "max-iterations",
            StopReason::Stalled => "stalled",
        }
    }
}

#[derive(Debug, Clone)]
pub struct MleResult {
    pub rho: DensityMatrix,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub log_likelihood: f64,
    /// Log-likelihood after every accepted step, starting with the initial state.
    pub trace: Vec<f64>,
    pub final_update_norm: f64,
}

struct Problem {
    freqs: Vec<f64>,
    vectors: Vec<nalgebra::DVector<C64>>,
    /// Group of each projector, as an index into `group_ops`.
    group_of: Vec<usize>,
    group_ops: Vec<DMatrix<C64>>,
    dim: usize,
}

impl Problem {
    fn new(record: &MeasurementRecord) -> Result<Self> {
        let freqs = record.frequencies()?;
        let dim = record.dimension();
        let mut group_of = vec![0; record.len()];
        let mut group_ops = Vec::new();
        for (g, idx) in record.groups().values().enumerate() {
            let mut op = DMatrix::zeros(dim, dim);
            for &i in idx {
                group_of[i] = g;
                op += &record.projectors()[i].operator;
            }
            group_ops.push(op);
        }
        let vectors = record.projectors().iter().map(|p| p.vector.clone()).collect();
        Ok(Self { freqs, vectors, group_of, group_ops, dim })
    }

    fn probabilities(&self, rho: &DMatrix<C64>) -> (Vec<f64>, Vec<f64>) {
        let p = self.vectors.iter().map(|v| v.dotc(&(rho * v)).re.max(PROB_FLOOR)).collect();
        let totals = self.group_ops.iter().map(|g| (g * rho).trace().re.max(PROB_FLOOR)).collect();
        (p, totals)
    }

    fn log_likelihood(&self, rho: &DMatrix<C64>) -> f64 {
        let (p, totals) = self.probabilities(rho);
        self.freqs
            .iter()
            .zip(&p)
            .zip(&self.group_of)
            .filter(|((f, _), _)| **f > 0.0)
            .map(|((f, p), &g)| f * (p / totals[g]).ln())
            .sum()
    }

    /// `H⁻¹R`, whose fixed point satisfies the likelihood stationarity condition.
    fn update_operator(&self, rho: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        let (p, totals) = self.probabilities(rho);
        let mut r = DMatrix::zeros(self.dim, self.dim);
        for ((v, f), pk) in self.vectors.iter().zip(&self.freqs).zip(&p) {
            if *f > 0.0 {
                r += (v * v.adjoint()) * C64::new(f / pk, 0.0);
            }
        }
        let mut h = DMatrix::zeros(self.dim, self.dim);
        for (g, total) in self.group_ops.iter().zip(&totals) {
            h += g * C64::new(1.0 / total, 0.0);
        }
        let h_inv = h
            .try_inverse()
            .ok_or_else(|| Error::NonConvergence("measurement operators do not span the state space".into()))?;
        Ok(h_inv * r)
    }
}

fn normalized_step(a: &DMatrix<C64>, rho: &DMatrix<C64>) -> DMatrix<C64> {
    let next = a * rho * a.adjoint();
    let next = (&next + next.adjoint()).map(|c| c * 0.5);
    let tr = next.trace().re;
    next.map(|c| c / tr)
}

/// Log-likelihood of `rho` given the record.
pub fn log_likelihood(record: &MeasurementRecord, rho: &DensityMatrix) -> Result<f64> {
    check_dims(record, rho)?;
    Ok(Problem::new(record)?.log_likelihood(rho.entries()))
}

/// Frobenius distance between `rho` and one undiluted update of it. Zero
/// at a likelihood maximum.
pub fn fixed_point_residual(record: &MeasurementRecord, rho: &DensityMatrix) -> Result<f64> {
    check_dims(record, rho)?;
    let problem = Problem::new(record)?;
    let a = problem.update_operator(rho.entries())?;
    Ok((&a * rho.entries() * a.adjoint() - rho.entries()).norm())
}

fn check_dims(record: &MeasurementRecord, rho: &DensityMatrix) -> Result<()> {
    if record.dimension() != rho.dimension() {
        return Err(Error::DimensionMismatch { expected: record.dimension(), found: rho.dimension() });
    }
    Ok(())
}

/// Maximum-likelihood density matrix for `record`.
pub fn mle_reconstruct(record: &MeasurementRecord, options: &MleOptions) -> Result<MleResult> {
    let dim = record.dimension();
    let problem = Problem::new(record)?;
    let mut rho = match &options.initial {
        Some(r) => {
            check_dims(record, r)?;
            r.entries().clone()
        }
        None => DensityMatrix::maximally_mixed(dim)?.entries().clone(),
    };
    let identity = DMatrix::<C64>::identity(dim, dim);
    let mut ll = problem.log_likelihood(&rho);
    let mut trace = vec![ll];
    let mut stop_reason = StopReason::MaxIterations;
    let mut update_norm = f64::INFINITY;
    let mut iterations = 0;

    while iterations < options.max_iterations {
        let a = problem.update_operator(&rho)?;
        let mut t = 1.0;
        let accepted = loop {
            let step = if t == 1.0 { a.clone() } else { &identity * C64::new(1.0 - t, 0.0) + &a * C64::new(t, 0.0) };
            let candidate = normalized_step(&step, &rho);
            let cand_ll = problem.log_likelihood(&candidate);
            if cand_ll.is_finite() && cand_ll >= ll {
                break Some((candidate, cand_ll));
            }
            t *= 0.5;
            if t < MIN_DILUTION {
                break None;
            }
        };
        let Some((next, next_ll)) = accepted else {
            stop_reason = StopReason::Stalled;
            break;
        };
        iterations += 1;
        update_norm = (&next - &rho).norm();
        rho = next;
        ll = next_ll;
        trace.push(ll);
        if !update_norm.is_finite() {
            return Err(Error::NonConvergence("update produced non-finite entries".into()));
        }
        if update_norm < options.tolerance {
            stop_reason = StopReason::Converged;
            break;
        }
    }

    let rho = DensityMatrix::from_unnormalized(&rho)
        .map_err(|e| Error::NonConvergence(format!("reconstruction left the state space: {e}")))?;
    Ok(MleResult { rho, iterations, stop_reason, log_likelihood: ll, trace, final_update_norm: update_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{fidelity, QuditState};
    use crate::tomography::projector::{default_xi_set, far_projectors, near_projectors};
    use crate::tomography::record::{simulate_counts, RecordMode};
    use std::f64::consts::PI;

    fn full_set(d: usize) -> Vec<crate::tomography::Projector> {
        let mut ps = near_projectors(d).unwrap();
        ps.extend(far_projectors(d, &default_xi_set(d)).unwrap());
        ps
    }

    fn exact_record(psi: &QuditState) -> MeasurementRecord {
        let ps = full_set(psi.dimension());
        let rho = DensityMatrix::from_pure(psi);
        let values = ps.iter().map(|p| p.probability_of(&rho).max(0.0)).collect();
        MeasurementRecord::new(ps, values, RecordMode::Intensity).unwrap()
    }

    #[test]
    fn pure_qubit_from_exact_data() {
        let psi = QuditState::normalize(&[C64::new(0.8, 0.0), C64::from_polar(0.6, 0.63 * PI)]).unwrap();
        let res = mle_reconstruct(&exact_record(&psi), &MleOptions::default()).unwrap();
        let f = fidelity(&psi, &res.rho).unwrap();
        assert!(f >= 0.9999, "fidelity {f}, {} iterations", res.iterations);
    }

    #[test]
    fn near_only_data_gives_diagonal_state() {
        let rec = MeasurementRecord::new(near_projectors(2).unwrap(), vec![0.5, 0.5], RecordMode::Intensity).unwrap();
        let res = mle_reconstruct(&rec, &MleOptions::default()).unwrap();
        let m = res.rho.entries();
        assert!((m[(0, 0)].re - 0.5).abs() < 1e-9 && (m[(1, 1)].re - 0.5).abs() < 1e-9);
        assert!(m[(0, 1)].norm() < 1e-9);
    }

    #[test]
    fn likelihood_trace_is_monotone() {
        let psi = QuditState::normalize(&[C64::new(0.5, 0.0), C64::from_polar(0.7, 1.0), C64::from_polar(0.5, -2.0)]).unwrap();
        let rec = simulate_counts(&DensityMatrix::from_pure(&psi), &full_set(3), 10_000, true, 11).unwrap();
        let res = mle_reconstruct(&rec, &MleOptions::default()).unwrap();
        assert!(res.trace.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(res.trace.len(), res.iterations + 1);
    }

    #[test]
    fn converged_result_is_a_fixed_point() {
        // a mixed target keeps the maximum in the interior, where convergence is fast
        let psi = QuditState::normalize(&[C64::new(0.6, 0.0), C64::from_polar(0.8, 0.4)]).unwrap();
        let mixed = DensityMatrix::from_pure(&psi).mixed_with_identity(0.3);
        let rec = simulate_counts(&mixed, &full_set(2), 100_000, true, 5).unwrap();
        let opts = MleOptions::default();
        let res = mle_reconstruct(&rec, &opts).unwrap();
        assert_eq!(res.stop_reason, StopReason::Converged);
        assert!(fixed_point_residual(&rec, &res.rho).unwrap() < 10.0 * opts.tolerance);
    }

    #[test]
    fn zero_counts_rejected() {
        let rec = MeasurementRecord::new(near_projectors(2).unwrap(), vec![0.0, 0.0], RecordMode::Intensity).unwrap();
        assert!(matches!(mle_reconstruct(&rec, &MleOptions::default()), Err(Error::ZeroCounts)));
    }
}
