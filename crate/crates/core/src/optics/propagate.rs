use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::fft::{centered_fft, centered_fft2, Direction};
use super::{ComplexField, IntensityCurve, IrisSpec, NoiseModel, OpticsParams, Plane, SimGrid};
use crate::error::{Error, Result};
use crate::mask::PhaseMask;
use crate::C64;

/// Field incident on the SLM, normalized to unit power: a plane wave, or a
/// Gaussian of field waist `w` centred at the configured beam offset.
pub fn illuminate(grid: &SimGrid, noise: &NoiseModel, optics: &OpticsParams) -> Result<ComplexField> {
    noise.validate()?;
    optics.validate()?;
    let (rows, cols) = grid.sample_dims();
    let pitch = grid.sample_pitch_um();
    let (dx, dy) = noise.beam_offset_um;
    let samples = match noise.beam_waist_um {
        None => Array2::from_elem((rows, cols), C64::new(1.0 / ((rows * cols) as f64).sqrt(), 0.0)),
        Some(w) => {
            let gx: Vec<f64> = (0..cols)
                .map(|c| {
                    let x = (c as f64 - (cols / 2) as f64) * pitch - dx;
                    (-(x * x) / (w * w)).exp()
                })
                .collect();
            let gy: Vec<f64> = (0..rows)
                .map(|r| {
                    let y = (r as f64 - (rows / 2) as f64) * pitch - dy;
                    (-(y * y) / (w * w)).exp()
                })
                .collect();
            let power: f64 = gy.iter().map(|a| a * a).sum::<f64>() * gx.iter().map(|a| a * a).sum::<f64>();
            if !(power > 0.0) {
                return Err(Error::Geometry("beam misses the simulated grid".into()));
            }
            let norm = power.sqrt();
            Array2::from_shape_fn((rows, cols), |(r, c)| C64::new(gy[r] * gx[c] / norm, 0.0))
        }
    };
    Ok(ComplexField {
        samples,
        pitch_um: pitch,
        plane: Plane::Mask,
        wavelength_nm: optics.wavelength_nm,
        focal_mm: optics.focal_mm,
    })
}

/// Multiplies every sample by `exp(i(φ_pixel + jitter))`. Jitter is drawn
/// once per SLM pixel, row-major, from a generator seeded with `seed`.
pub fn apply_mask(mut field: ComplexField, mask: &PhaseMask, noise: &NoiseModel, seed: u64) -> Result<ComplexField> {
    field.expect_plane(&[Plane::Mask], "mask")?;
    noise.validate()?;
    let (rows, cols) = (field.rows(), field.cols());
    let (mr, mc) = mask.phases.dim();
    if mr == 0 || rows % mr != 0 || cols % mc != 0 || rows / mr != cols / mc {
        return Err(Error::Resolution(format!(
            "field {rows}x{cols} is not an integer SxS sampling of mask {mr}x{mc}"
        )));
    }
    let s = rows / mr;
    let pixel_pitch = field.pitch_um * s as f64;
    if (pixel_pitch - mask.geometry.pixel_pitch_um).abs() > 1e-9 * pixel_pitch {
        return Err(Error::Resolution(format!(
            "field pitch {} um x {s} does not match SLM pitch {} um",
            field.pitch_um, mask.geometry.pixel_pitch_um
        )));
    }

    let phasors: Array2<C64> = if noise.has_jitter() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        mask.phases.map(|&p| {
            let jitter = unit.sample(&mut rng) * noise.sigma_for_phase(p);
            C64::from_polar(1.0, p + jitter)
        })
    } else {
        mask.phases.map(|&p| C64::from_polar(1.0, p))
    };

    for (r, mut row) in field.samples.rows_mut().into_iter().enumerate() {
        let prow = phasors.row(r / s);
        for (c, v) in row.iter_mut().enumerate() {
            *v *= prow[c / s];
        }
    }
    Ok(field)
}

/// Fraunhofer pattern at the back focal plane.
pub fn far_field(mut field: ComplexField) -> Result<ComplexField> {
    field.expect_plane(&[Plane::Mask, Plane::Image], "mask or image")?;
    centered_fft2(&mut field.samples, Direction::Forward, None)?;
    field.plane = Plane::Fourier;
    Ok(field)
}

/// Keeps the samples inside the iris disc and zeroes the rest.
pub fn iris_filter(mut field: ComplexField, iris: &IrisSpec) -> Result<ComplexField> {
    field.expect_plane(&[Plane::Fourier], "fourier")?;
    iris.validate()?;
    zero_outside(&mut field, iris);
    Ok(field)
}

/// `iris_filter(far_field(field), iris)`, computing only the Fourier columns
/// that intersect the iris.
pub fn far_field_through_iris(field: ComplexField, iris: &IrisSpec) -> Result<ComplexField> {
    let mut field = far_field_band(field, iris)?;
    zero_outside(&mut field, iris);
    Ok(field)
}

/// Fraunhofer pattern restricted to the Fourier columns that intersect the
/// iris, before the iris itself is applied. Other columns are zero.
pub fn far_field_band(mut field: ComplexField, iris: &IrisSpec) -> Result<ComplexField> {
    field.expect_plane(&[Plane::Mask, Plane::Image], "mask or image")?;
    iris.validate()?;
    field.plane = Plane::Fourier;
    let band = iris_columns(&field, iris);
    field.plane = Plane::Mask;
    centered_fft2(&mut field.samples, Direction::Forward, Some(band))?;
    field.plane = Plane::Fourier;
    Ok(field)
}

/// Far-field intensity behind the iris, summed along x, on a y grid
/// `oversample` times finer than the Fourier samples of `unfiltered`.
///
/// Each column is interpolated exactly by zero padding its mask-plane
/// counterpart, so `unfiltered` must not have been iris filtered yet (see
/// [`far_field_band`]). Every `oversample`-th output coincides with a row of
/// `farfield_intensity_curve(iris_filter(unfiltered))`.
pub fn far_field_profile(unfiltered: &ComplexField, iris: &IrisSpec, oversample: usize) -> Result<IntensityCurve> {
    unfiltered.expect_plane(&[Plane::Fourier], "fourier")?;
    iris.validate()?;
    if oversample == 0 {
        return Err(Error::OutOfRange { what: "far-field oversampling", value: 0.0 });
    }
    let rows = unfiltered.rows();
    let fine = rows * oversample;
    let dy = unfiltered.spacing_um().0 / oversample as f64;
    let ys: Vec<f64> = (0..fine).map(|k| (k as f64 - (fine / 2) as f64) * dy).collect();
    let gain = oversample as f64;
    let zero = C64::new(0.0, 0.0);
    let mut intensity = vec![0.0; fine];
    let mut column = vec![zero; rows];
    let mut padded = vec![zero; fine];
    for c in iris_columns(unfiltered, iris) {
        let x = unfiltered.x_um(c);
        if (x - iris.center_x_um).abs() > iris.radius_um {
            continue;
        }
        column.iter_mut().zip(unfiltered.samples.column(c)).for_each(|(d, s)| *d = *s);
        if column.iter().all(|v| *v == zero) {
            continue;
        }
        centered_fft(&mut column, Direction::Inverse)?;
        padded.iter_mut().for_each(|v| *v = zero);
        let offset = fine / 2 - rows / 2;
        padded[offset..offset + rows].copy_from_slice(&column);
        centered_fft(&mut padded, Direction::Forward)?;
        for (k, v) in padded.iter().enumerate() {
            if iris.contains(x, ys[k]) {
                intensity[k] += v.norm_sqr() * gain;
            }
        }
    }
    Ok(IntensityCurve { positions_um: ys, intensity })
}

/// Image of the (filtered) Fourier-plane field through the second lens.
pub fn near_field_image(mut field: ComplexField) -> Result<ComplexField> {
    field.expect_plane(&[Plane::Fourier], "fourier")?;
    centered_fft2(&mut field.samples, Direction::Inverse, None)?;
    field.plane = Plane::Image;
    Ok(field)
}

fn iris_columns(field: &ComplexField, iris: &IrisSpec) -> std::ops::Range<usize> {
    let (_, dx) = field.spacing_um();
    let half = (field.cols() / 2) as f64;
    let lo = ((iris.center_x_um - iris.radius_um) / dx + half).floor().max(0.0) as usize;
    let hi = ((iris.center_x_um + iris.radius_um) / dx + half).ceil() + 1.0;
    lo.min(field.cols())..(hi.max(0.0) as usize).min(field.cols())
}

fn zero_outside(field: &mut ComplexField, iris: &IrisSpec) {
    let xs: Vec<f64> = (0..field.cols()).map(|c| field.x_um(c)).collect();
    let ys: Vec<f64> = (0..field.rows()).map(|r| field.y_um(r)).collect();
    for (r, mut row) in field.samples.rows_mut().into_iter().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            if !iris.contains(xs[c], ys[r]) {
                *v = C64::new(0.0, 0.0);
            }
        }
    }
}
