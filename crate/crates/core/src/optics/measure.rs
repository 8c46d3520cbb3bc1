use serde::{Deserialize, Serialize};

use super::{ComplexField, Plane, SimGrid};
use crate::error::{Error, Result};

/// Intensity profile versus a physical coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityCurve {
    pub positions_um: Vec<f64>,
    pub intensity: Vec<f64>,
}

impl IntensityCurve {
    pub fn len(&self) -> usize {
        self.positions_um.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions_um.is_empty()
    }

    /// Linear interpolation at `x`; `None` outside the sampled range.
    pub fn sample_at(&self, x: f64) -> Option<f64> {
        let p = &self.positions_um;
        if p.is_empty() || x < p[0] - 1e-9 || x > p[p.len() - 1] + 1e-9 {
            return None;
        }
        let i = p.partition_point(|&v| v < x);
        if i < p.len() && (p[i] - x).abs() < 1e-9 {
            return Some(self.intensity[i]);
        }
        if i == 0 {
            return Some(self.intensity[0]);
        }
        if i >= p.len() {
            return Some(self.intensity[p.len() - 1]);
        }
        let t = (x - p[i - 1]) / (p[i] - p[i - 1]);
        Some(self.intensity[i - 1] * (1.0 - t) + self.intensity[i] * t)
    }

    /// Michelson visibility `(max - min)/(max + min)` over samples with
    /// `|x| <= half_width`.
    pub fn visibility_within(&self, half_width: f64) -> f64 {
        let vals: Vec<f64> = self
            .positions_um
            .iter()
            .zip(&self.intensity)
            .filter(|(x, _)| x.abs() <= half_width)
            .map(|(_, v)| *v)
            .collect();
        let max = vals.iter().copied().fold(f64::MIN, f64::max);
        let min = vals.iter().copied().fold(f64::MAX, f64::min);
        (max - min) / (max + min)
    }
}

/// Power integrated over each slit's bounding box, normalized to sum 1.
pub fn slit_powers(image: &ComplexField, grid: &SimGrid) -> Result<Vec<f64>> {
    image.expect_plane(&[Plane::Image], "image")?;
    if image.samples.dim() != grid.sample_dims() {
        return Err(Error::Resolution(format!(
            "image {:?} does not match grid {:?}",
            image.samples.dim(),
            grid.sample_dims()
        )));
    }
    let mut powers = Vec::with_capacity(grid.geometry.dimension);
    for slit in 0..grid.geometry.dimension {
        let rect = grid.slit_samples(slit)?;
        let mut p = 0.0;
        for r in rect.row0..rect.row0 + rect.rows {
            let row = image.samples.row(r);
            for c in rect.col0..rect.col0 + rect.cols {
                p += row[c].norm_sqr();
            }
        }
        powers.push(p);
    }
    let total: f64 = powers.iter().sum();
    if total > 0.0 {
        powers.iter_mut().for_each(|p| *p /= total);
    }
    Ok(powers)
}

/// Far-field intensity summed along the slit length (x) for every y sample
/// of the filtered Fourier plane.
pub fn farfield_intensity_curve(farfield: &ComplexField) -> Result<IntensityCurve> {
    farfield.expect_plane(&[Plane::Fourier], "fourier")?;
    Ok(row_sums(farfield))
}

/// Image-plane intensity summed along the slit length, versus y.
pub fn nearfield_intensity_curve(image: &ComplexField) -> Result<IntensityCurve> {
    image.expect_plane(&[Plane::Image], "image")?;
    Ok(row_sums(image))
}

fn row_sums(field: &ComplexField) -> IntensityCurve {
    let positions_um = (0..field.rows()).map(|r| field.y_um(r)).collect();
    let intensity = field.samples.rows().into_iter().map(|row| row.iter().map(|c| c.norm_sqr()).sum()).collect();
    IntensityCurve { positions_um, intensity }
}
