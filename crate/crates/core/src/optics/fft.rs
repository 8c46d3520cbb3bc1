//! Centred, unitary 2-D discrete Fourier transforms on row-major grids.
//!
//! For an even length `M` the centred transform `shift(FFT(ishift(x)))`
//! equals `(-1)^{M/2} (-1)^k FFT((-1)^j x)[k]`, so the shifts become sign
//! flips that keep zero samples zero. Rows or columns that are entirely zero
//! are skipped, and the forward transform can be restricted to a band of
//! output columns when everything else is discarded downstream.

use std::cell::RefCell;
use std::ops::Range;
use std::sync::Arc;

use ndarray::Array2;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, dir: Direction) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        match dir {
            Direction::Forward => p.plan_fft_forward(len),
            Direction::Inverse => p.plan_fft_inverse(len),
        }
    })
}

fn checkerboard(data: &mut Array2<C64>, global: f64) {
    for ((r, c), v) in data.indexed_iter_mut() {
        if (r + c) % 2 == 1 {
            *v = -*v * global;
        } else {
            *v *= global;
        }
    }
}

/// Transforms `data` in place. With `column_band`, only output columns in
/// the band are computed; all other columns are set to zero.
pub fn centered_fft2(data: &mut Array2<C64>, dir: Direction, column_band: Option<Range<usize>>) -> Result<()> {
    let (rows, cols) = data.dim();
    if rows % 2 != 0 || cols % 2 != 0 || rows == 0 || cols == 0 {
        return Err(Error::Resolution(format!("grid {rows}x{cols} must have even, nonzero sides")));
    }
    if !data.is_standard_layout() {
        *data = data.as_standard_layout().into_owned();
    }
    checkerboard(data, 1.0);

    let zero = C64::new(0.0, 0.0);
    let nonzero_rows: Vec<usize> = (0..rows).filter(|&r| data.row(r).iter().any(|v| *v != zero)).collect();

    match column_band {
        Some(band) => {
            let band = band.start.min(cols)..band.end.min(cols);
            row_pass(data, &nonzero_rows, dir);
            let keep: Vec<usize> = band.clone().collect();
            column_pass(data, &keep, dir);
            for mut row in data.rows_mut() {
                for (c, v) in row.iter_mut().enumerate() {
                    if !band.contains(&c) {
                        *v = zero;
                    }
                }
            }
        }
        None => {
            let nonzero_cols: Vec<usize> =
                (0..cols).filter(|&c| data.column(c).iter().any(|v| *v != zero)).collect();
            let all_rows: Vec<usize> = (0..rows).collect();
            let all_cols: Vec<usize> = (0..cols).collect();
            if nonzero_cols.len() * rows < nonzero_rows.len() * cols {
                column_pass(data, &nonzero_cols, dir);
                row_pass(data, &all_rows, dir);
            } else {
                row_pass(data, &nonzero_rows, dir);
                column_pass(data, &all_cols, dir);
            }
        }
    }

    let sign = if (rows / 2 + cols / 2) % 2 == 1 { -1.0 } else { 1.0 };
    let scale = sign / ((rows * cols) as f64).sqrt();
    checkerboard(data, scale);
    Ok(())
}

/// Centred unitary transform of a single even-length sequence.
pub fn centered_fft(data: &mut [C64], dir: Direction) -> Result<()> {
    let n = data.len();
    if n == 0 || n % 2 != 0 {
        return Err(Error::Resolution(format!("length {n} must be even and nonzero")));
    }
    let flip = |data: &mut [C64], scale: f64| {
        for (i, v) in data.iter_mut().enumerate() {
            *v *= if i % 2 == 1 { -scale } else { scale };
        }
    };
    flip(data, 1.0);
    plan(n, dir).process(data);
    let sign = if (n / 2) % 2 == 1 { -1.0 } else { 1.0 };
    flip(data, sign / (n as f64).sqrt());
    Ok(())
}

fn row_pass(data: &mut Array2<C64>, which: &[usize], dir: Direction) {
    let cols = data.ncols();
    let fft = plan(cols, dir);
    let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let slice = data.as_slice_mut().expect("standard layout");
    for &r in which {
        fft.process_with_scratch(&mut slice[r * cols..(r + 1) * cols], &mut scratch);
    }
}

fn column_pass(data: &mut Array2<C64>, which: &[usize], dir: Direction) {
    if which.is_empty() {
        return;
    }
    let (rows, cols) = data.dim();
    let fft = plan(rows, dir);
    let slice = data.as_slice_mut().expect("standard layout");
    if which.len() == cols {
        let mut buf = vec![C64::new(0.0, 0.0); rows * cols];
        transpose::transpose(slice, &mut buf, cols, rows);
        fft.process(&mut buf);
        transpose::transpose(&buf, slice, rows, cols);
        return;
    }
    let n = which.len();
    let mut buf = vec![C64::new(0.0, 0.0); rows * n];
    for r in 0..rows {
        let row = &slice[r * cols..(r + 1) * cols];
        for (i, &c) in which.iter().enumerate() {
            buf[i * rows + r] = row[c];
        }
    }
    fft.process(&mut buf);
    for r in 0..rows {
        let row = &mut slice[r * cols..(r + 1) * cols];
        for (i, &c) in which.iter().enumerate() {
            row[c] = buf[i * rows + r];
        }
    }
}
