//! Least-squares recovery of relative slit phases from a far-field curve.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mask::SlitGeometry;
use crate::optics::analytic::{fringe_phase, slit_envelope};
use crate::optics::{IntensityCurve, OpticsParams};
use crate::state::wrap_two_pi;
use crate::C64;

#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Number of starting points; `0` picks a default from the dimension.
    pub starts: usize,
    pub seed: u64,
    /// Samples whose envelope is below this fraction of the peak are ignored.
    pub envelope_floor: f64,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { starts: 0, seed: 0, envelope_floor: 0.05, max_iterations: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFit {
    /// `φ_1..φ_{D-1}` relative to slit 0, in `[0, 2π)`.
    pub phases: Vec<f64>,
    pub scale: f64,
    /// RMS residual relative to the RMS of the fitted samples.
    pub residual: f64,
    pub converged: bool,
    pub starts: usize,
    /// Iterations spent by the winning start.
    pub iterations: usize,
}

struct Samples {
    env: Vec<f64>,
    xi: Vec<f64>,
    y: Vec<f64>,
}

struct Model<'a> {
    amplitudes: &'a [f64],
    samples: &'a Samples,
}

impl Model<'_> {
    /// Residuals and Jacobian columns `(φ_1..φ_{D-1}, scale)`.
    fn evaluate(&self, params: &[f64], jacobian: bool) -> (DVector<f64>, Option<DMatrix<f64>>) {
        let d = self.amplitudes.len();
        let n = self.samples.y.len();
        let scale = params[d - 1];
        let mut r = DVector::zeros(n);
        let mut j = jacobian.then(|| DMatrix::zeros(n, d));
        let mut terms = vec![C64::new(0.0, 0.0); d];
        for i in 0..n {
            let xi = self.samples.xi[i];
            let env = self.samples.env[i];
            let mut sum = C64::new(0.0, 0.0);
            for l in 0..d {
                let phi = if l == 0 { 0.0 } else { params[l - 1] };
                terms[l] = C64::from_polar(self.amplitudes[l], phi - l as f64 * xi);
                sum += terms[l];
            }
            let model = env * sum.norm_sqr();
            r[i] = scale * model - self.samples.y[i];
            if let Some(j) = j.as_mut() {
                for l in 1..d {
                    j[(i, l - 1)] = -2.0 * scale * env * (sum.conj() * terms[l]).im;
                }
                j[(i, d - 1)] = model;
            }
        }
        (r, j)
    }

    /// Levenberg-Marquardt with relative step, cost and gradient tests.
    fn lm(&self, mut params: Vec<f64>, max_iterations: usize) -> (Vec<f64>, f64, bool, usize) {
        let (mut r, _) = self.evaluate(&params, false);
        let mut cost = r.norm_squared();
        let mut lambda = 1e-3;
        for it in 0..max_iterations {
            let (_, Some(j)) = self.evaluate(&params, true) else { unreachable!() };
            let jtj = j.transpose() * &j;
            let g = j.transpose() * &r;
            let gscaled = (0..g.len())
                .map(|k| g[k].abs() / (jtj[(k, k)] * cost).sqrt().max(1e-300))
                .fold(0.0, f64::max);
            if cost == 0.0 || gscaled < 1e-10 {
                return (params, cost, true, it);
            }
            let mut improved = false;
            while lambda < 1e12 {
                let mut a = jtj.clone();
                for k in 0..a.nrows() {
                    a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
                }
                let Some(step) = a.cholesky().map(|c| c.solve(&(-&g))) else {
                    lambda *= 4.0;
                    continue;
                };
                let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
                let (tr, _) = self.evaluate(&trial, false);
                let tc = tr.norm_squared();
                if tc <= cost {
                    let rel = (cost - tc) / cost;
                    params = trial;
                    r = tr;
                    cost = tc;
                    lambda = (lambda / 3.0).max(1e-12);
                    improved = true;
                    if rel < 1e-10 || step.amax() < 1e-8 {
                        return (params, cost, true, it + 1);
                    }
                    break;
                }
                lambda *= 2.0;
            }
            if !improved {
                // no descent direction left at machine precision
                return (params, cost, true, it);
            }
        }
        (params, cost, false, max_iterations)
    }

    fn best_scale(&self, phases: &[f64]) -> f64 {
        let mut p = phases.to_vec();
        p.push(1.0);
        let (r, _) = self.evaluate(&p, false);
        // r = model - y with unit scale
        let (mut num, mut den) = (0.0, 0.0);
        for (ri, yi) in r.iter().zip(&self.samples.y) {
            let m = ri + yi;
            num += m * yi;
            den += m * m;
        }
        if den > 0.0 {
            num / den
        } else {
            1.0
        }
    }
}

/// Fits `φ_1..φ_{D-1}` so that `s·env(x)·|Σ_ℓ a_ℓ e^{i(φ_ℓ - ℓξ(x))}|²`
/// matches `curve`, with known amplitude magnitudes `a_ℓ` and free scale
/// `s`. Several seeded starting points are tried; the smallest residual
/// wins, with ties broken by the lexicographically smallest phase vector.
///
/// The curve cannot tell a state from its conjugate with the slit order
/// reversed. When `a_ℓ = a_{D-1-ℓ}` for every `ℓ` both give the same
/// amplitudes too, and the fit may return either.
pub fn fit_phases(
    amplitudes: &[f64],
    curve: &IntensityCurve,
    geom: &SlitGeometry,
    optics: &OpticsParams,
    options: &FitOptions,
) -> Result<PhaseFit> {
    let d = amplitudes.len();
    if d < 2 {
        return Err(Error::Dimension(d));
    }
    if d != geom.dimension {
        return Err(Error::DimensionMismatch { expected: geom.dimension, found: d });
    }
    if amplitudes.iter().any(|a| !a.is_finite() || *a < 0.0) {
        return Err(Error::InvalidState("amplitude magnitudes must be non-negative".into()));
    }
    let samples = select_samples(curve, geom, optics, options.envelope_floor)?;
    let model = Model { amplitudes, samples: &samples };
    let norm = samples.y.iter().map(|y| y * y).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroCounts);
    }

    let starts = if options.starts > 0 { options.starts } else { 8 * (d - 1) };
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut best: Option<(Vec<f64>, f64, bool, usize)> = None;
    for s in 0..starts {
        let init: Vec<f64> = if d == 2 {
            vec![2.0 * PI * s as f64 / starts as f64]
        } else if s == 0 {
            vec![0.0; d - 1]
        } else {
            (0..d - 1).map(|_| rng.gen_range(0.0..2.0 * PI)).collect()
        };
        let mut params = init.clone();
        params.push(model.best_scale(&init));
        let (mut p, cost, ok, iters) = model.lm(params, options.max_iterations);
        for v in p.iter_mut().take(d - 1) {
            *v = wrap_two_pi(*v);
        }
        let better = match &best {
            None => true,
            Some((bp, bc, _, _)) => {
                let tol = 1e-12 * norm * norm;
                cost < bc - tol || ((cost - bc).abs() <= tol && lex_less(&p[..d - 1], &bp[..d - 1]))
            }
        };
        if better {
            best = Some((p, cost, ok, iters));
        }
    }
    let (p, cost, converged, iterations) = best.expect("at least one start");
    let n = samples.y.len() as f64;
    Ok(PhaseFit {
        phases: p[..d - 1].to_vec(),
        scale: p[d - 1],
        residual: (cost / n).sqrt() / (norm / n.sqrt()),
        converged,
        starts,
        iterations,
    })
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).find(|(x, y)| x != y).map(|(x, y)| x < y).unwrap_or(false)
}

fn select_samples(curve: &IntensityCurve, geom: &SlitGeometry, optics: &OpticsParams, floor: f64) -> Result<Samples> {
    let fringe = optics.lambda_f_um2() / geom.slit_period_um();
    let mut s = Samples { env: vec![], xi: vec![], y: vec![] };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (&x, &y) in curve.positions_um.iter().zip(&curve.intensity) {
        let env = slit_envelope(geom, optics, x);
        if env < floor {
            continue;
        }
        lo = lo.min(x);
        hi = hi.max(x);
        s.env.push(env);
        s.xi.push(fringe_phase(geom, optics, x));
        s.y.push(y);
    }
    if !(hi - lo >= 2.0 * fringe) {
        return Err(Error::Config(format!(
            "far-field curve spans {:.1} um, less than two fringe periods ({:.1} um)",
            (hi - lo).max(0.0),
            2.0 * fringe
        )));
    }
    let peak = s.y.iter().cloned().fold(0.0, f64::max);
    if peak > 0.0 {
        s.y.iter_mut().for_each(|y| *y /= peak);
    }
    Ok(s)
}
