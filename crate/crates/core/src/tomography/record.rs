use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::projector::{MeasurementGroup, Projector};
use crate::error::{Error, Result};
use crate::state::DensityMatrix;

/// How the values in a record were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordMode {
    /// Normalized intensities straight from the simulated cameras.
    Intensity,
    /// Photon counts with `total` expected counts per group.
    Counts { total: u64 },
}

/// Ordered list of (projector, measured value) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    projectors: Vec<Projector>,
    values: Vec<f64>,
    mode: RecordMode,
}

impl MeasurementRecord {
    pub fn new(projectors: Vec<Projector>, values: Vec<f64>, mode: RecordMode) -> Result<Self> {
        if projectors.is_empty() {
            return Err(Error::EmptyRecord);
        }
        if projectors.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: projectors.len(), found: values.len() });
        }
        let d = projectors[0].dimension();
        if let Some(p) = projectors.iter().find(|p| p.dimension() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: p.dimension() });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::OutOfRange { what: "measured value", value: *v });
        }
        Ok(Self { projectors, values, mode })
    }

    pub fn dimension(&self) -> usize {
        self.projectors[0].dimension()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn projectors(&self) -> &[Projector] {
        &self.projectors
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mode(&self) -> RecordMode {
        self.mode
    }

    /// Concatenates two records of the same dimension.
    pub fn join(mut self, other: MeasurementRecord) -> Result<Self> {
        if other.dimension() != self.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), found: other.dimension() });
        }
        if other.mode != self.mode {
            return Err(Error::Config("cannot join records of different modes".into()));
        }
        self.projectors.extend(other.projectors);
        self.values.extend(other.values);
        Ok(self)
    }

    /// Index lists per measurement group, in group order.
    pub fn groups(&self) -> BTreeMap<MeasurementGroup, Vec<usize>> {
        let mut out: BTreeMap<MeasurementGroup, Vec<usize>> = BTreeMap::new();
        for (i, p) in self.projectors.iter().enumerate() {
            out.entry(p.group()).or_default().push(i);
        }
        out
    }

    /// Values rescaled to sum to one within each group. Groups with no
    /// signal are an error.
    pub fn frequencies(&self) -> Result<Vec<f64>> {
        let mut f = self.values.clone();
        for idx in self.groups().values() {
            let total: f64 = idx.iter().map(|&i| self.values[i]).sum();
            if total <= 0.0 {
                return Err(Error::ZeroCounts);
            }
            for &i in idx {
                f[i] /= total;
            }
        }
        Ok(f)
    }
}

/// Expected counts are `N·tr(Π_k ρ)`, with the near-field group
/// renormalized to `N` in total. Poisson draws are taken in projector order
/// from a generator seeded with `seed` when `poisson` is set.
pub fn simulate_counts(
    rho: &DensityMatrix,
    projectors: &[Projector],
    total_counts: u64,
    poisson: bool,
    seed: u64,
) -> Result<MeasurementRecord> {
    if projectors.is_empty() {
        return Err(Error::EmptyRecord);
    }
    if let Some(p) = projectors.iter().find(|p| p.dimension() != rho.dimension()) {
        return Err(Error::DimensionMismatch { expected: rho.dimension(), found: p.dimension() });
    }
    let probs: Vec<f64> = projectors.iter().map(|p| p.probability_of(rho).max(0.0)).collect();
    let near_total: f64 = projectors
        .iter()
        .zip(&probs)
        .filter(|(p, _)| p.group() == MeasurementGroup::Near)
        .map(|(_, q)| q)
        .sum();
    let n = total_counts as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(projectors.len());
    for (p, &q) in projectors.iter().zip(&probs) {
        let mean = match p.group() {
            MeasurementGroup::Near if near_total > 0.0 => n * q / near_total,
            _ => n * q,
        };
        let v = if poisson && mean > 0.0 {
            Poisson::new(mean).map_err(|e| Error::Config(e.to_string()))?.sample(&mut rng)
        } else {
            mean
        };
        values.push(v);
    }
    MeasurementRecord::new(projectors.to_vec(), values, RecordMode::Counts { total: total_counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tomography::projector::{default_xi_set, far_projectors, near_projectors};
    use crate::C64;
    use nalgebra::DMatrix;

    fn diag10() -> DensityMatrix {
        DensityMatrix::new(DMatrix::from_diagonal(&nalgebra::dvector![C64::new(1.0, 0.0), C64::new(0.0, 0.0)])).unwrap()
    }

    #[test]
    fn noiseless_counts() {
        let rec = simulate_counts(&diag10(), &near_projectors(2).unwrap(), 1000, false, 0).unwrap();
        assert_eq!(rec.values(), &[1000.0, 0.0]);
    }

    #[test]
    fn poisson_counts_are_seeded() {
        let ps = far_projectors(2, &default_xi_set(2)).unwrap();
        let a = simulate_counts(&diag10(), &ps, 10_000, true, 3).unwrap();
        let b = simulate_counts(&diag10(), &ps, 10_000, true, 3).unwrap();
        let c = simulate_counts(&diag10(), &ps, 10_000, true, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for v in a.values() {
            assert!((v - 5000.0).abs() < 500.0);
        }
    }

    #[test]
    fn record_validation() {
        let ps = near_projectors(2).unwrap();
        assert!(matches!(MeasurementRecord::new(vec![], vec![], RecordMode::Intensity), Err(Error::EmptyRecord)));
        assert!(MeasurementRecord::new(ps.clone(), vec![1.0], RecordMode::Intensity).is_err());
        assert!(MeasurementRecord::new(ps.clone(), vec![1.0, -1.0], RecordMode::Intensity).is_err());
        let zero = MeasurementRecord::new(ps, vec![0.0, 0.0], RecordMode::Intensity).unwrap();
        assert!(matches!(zero.frequencies(), Err(Error::ZeroCounts)));
    }
}
