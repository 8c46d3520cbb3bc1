use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::state::DensityMatrix;
use crate::C64;

/// Which camera a projector belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MeasurementGroup {
    Near,
    Far,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProjectorLabel {
    /// Image of slit `ℓ`: `|ℓ⟩⟨ℓ|`.
    Near(usize),
    /// Far-field position with interference phase `ξ`: `|χ_ξ⟩⟨χ_ξ|`.
    Far(f64),
}

impl fmt::Display for ProjectorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProjectorLabel::Near(l) => write!(f, "near:{l}"),
            ProjectorLabel::Far(xi) => write!(f, "far:{xi:?}"),
        }
    }
}

impl FromStr for ProjectorLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Format(format!("bad projector label `{s}`"));
        match s.split_once(':') {
            Some(("near", v)) => Ok(ProjectorLabel::Near(v.parse().map_err(|_| bad())?)),
            Some(("far", v)) => Ok(ProjectorLabel::Far(v.parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

/// Rank-one projector onto a near- or far-field measurement state.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    pub label: ProjectorLabel,
    pub vector: DVector<C64>,
    pub operator: DMatrix<C64>,
}

impl Projector {
    pub fn new(label: ProjectorLabel, dimension: usize) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::Dimension(dimension));
        }
        let vector = match label {
            ProjectorLabel::Near(l) => {
                if l >= dimension {
                    return Err(Error::DimensionMismatch { expected: dimension, found: l + 1 });
                }
                let mut v = DVector::zeros(dimension);
                v[l] = C64::new(1.0, 0.0);
                v
            }
            ProjectorLabel::Far(xi) => {
                let norm = 1.0 / (dimension as f64).sqrt();
                DVector::from_iterator(dimension, (0..dimension).map(|l| C64::from_polar(norm, l as f64 * xi)))
            }
        };
        let operator = &vector * vector.adjoint();
        Ok(Self { label, vector, operator })
    }

    pub fn dimension(&self) -> usize {
        self.vector.len()
    }

    pub fn group(&self) -> MeasurementGroup {
        match self.label {
            ProjectorLabel::Near(_) => MeasurementGroup::Near,
            ProjectorLabel::Far(_) => MeasurementGroup::Far,
        }
    }

    /// `tr(Π ρ) = ⟨v|ρ|v⟩`.
    pub fn probability(&self, rho: &DMatrix<C64>) -> f64 {
        self.vector.dotc(&(rho * &self.vector)).re
    }

    pub fn probability_of(&self, rho: &DensityMatrix) -> f64 {
        self.probability(rho.entries())
    }
}

/// Computational-basis projectors `{|ℓ⟩⟨ℓ|}`.
pub fn near_projectors(dimension: usize) -> Result<Vec<Projector>> {
    (0..dimension).map(|l| Projector::new(ProjectorLabel::Near(l), dimension)).collect()
}

/// Projectors onto `|χ_ξ⟩ = Σ_ℓ e^{iℓξ}|ℓ⟩/√D`.
pub fn far_projectors(dimension: usize, xi_set: &[f64]) -> Result<Vec<Projector>> {
    if xi_set.is_empty() {
        return Err(Error::Config("far-field phase set is empty".into()));
    }
    xi_set.iter().map(|&xi| Projector::new(ProjectorLabel::Far(xi), dimension)).collect()
}

/// `ξ_j = 2πj/(2D)` for `j = 0..2D`; for qubits this is `{0, π/2, π, 3π/2}`.
pub fn default_xi_set(dimension: usize) -> Vec<f64> {
    let n = 2 * dimension;
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sum(ps: &[Projector]) -> DMatrix<C64> {
        ps.iter().fold(DMatrix::zeros(ps[0].dimension(), ps[0].dimension()), |acc, p| acc + &p.operator)
    }

    #[test]
    fn near_sets() {
        let two = near_projectors(2).unwrap();
        assert_eq!(two[0].operator[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(two[1].operator[(1, 1)], C64::new(1.0, 0.0));
        for d in [3, 7] {
            let ps = near_projectors(d).unwrap();
            assert_eq!(ps.len(), d);
            assert_eq!(sum(&ps), DMatrix::identity(d, d));
            for (i, a) in ps.iter().enumerate() {
                for b in &ps[i + 1..] {
                    assert_eq!(&a.operator * &b.operator, DMatrix::zeros(d, d));
                }
            }
        }
    }

    #[test]
    fn far_examples() {
        let h = 0.5;
        let p0 = Projector::new(ProjectorLabel::Far(0.0), 2).unwrap();
        for z in p0.operator.iter() {
            assert_abs_diff_eq!((z - C64::new(h, 0.0)).norm(), 0.0, epsilon = 1e-15);
        }
        let pi = Projector::new(ProjectorLabel::Far(PI), 2).unwrap();
        assert_abs_diff_eq!((pi.operator[(0, 1)] - C64::new(-h, 0.0)).norm(), 0.0, epsilon = 1e-15);
        let p3 = Projector::new(ProjectorLabel::Far(2.0 * PI / 3.0), 3).unwrap();
        let s = 1.0 / 3f64.sqrt();
        for l in 0..3 {
            let expected = C64::from_polar(s, 2.0 * PI * l as f64 / 3.0);
            assert_abs_diff_eq!((p3.vector[l] - expected).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn projector_invariants() {
        for d in 2..=7 {
            for p in far_projectors(d, &default_xi_set(d)).unwrap() {
                let herm = (&p.operator - p.operator.adjoint()).norm();
                let idem = (&p.operator * &p.operator - &p.operator).norm();
                assert!(herm < 1e-10 && idem < 1e-10);
                assert_abs_diff_eq!(p.operator.trace().re, 1.0, epsilon = 1e-12);
                for l in 0..d {
                    assert_abs_diff_eq!(p.operator[(l, l)].re, 1.0 / d as f64, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn qubit_far_average_has_equal_off_diagonals() {
        let ps = far_projectors(2, &default_xi_set(2)).unwrap();
        let avg = sum(&ps) / C64::new(ps.len() as f64, 0.0);
        assert_abs_diff_eq!(avg[(0, 1)].norm(), avg[(1, 0)].norm(), epsilon = 1e-15);
        // the default sets sum to 2·I
        for d in 2..=7 {
            let s = sum(&far_projectors(d, &default_xi_set(d)).unwrap());
            assert!((s - DMatrix::<C64>::identity(d, d) * C64::new(2.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn labels_round_trip() {
        for l in [ProjectorLabel::Near(4), ProjectorLabel::Far(PI / 3.0)] {
            assert_eq!(l.to_string().parse::<ProjectorLabel>().unwrap(), l);
        }
        assert!("side:1".parse::<ProjectorLabel>().is_err());
        assert!(far_projectors(2, &[]).is_err());
    }
}
