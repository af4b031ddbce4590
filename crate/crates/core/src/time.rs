//! Uniform periodic time grid with trigonometric (Fourier) calculus.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub period: f64,
    pub n: usize,
}

impl TimeGrid {
    /// `n` must be even and at least 4.
    pub fn new(period: f64, n: usize) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::Resolution(format!("period must be positive, got {period}")));
        }
        if n < 4 || n % 2 != 0 {
            return Err(Error::Resolution(format!("time samples must be even and >= 4, got {n}")));
        }
        Ok(TimeGrid { period, n })
    }

    pub fn dt(&self) -> f64 {
        self.period / self.n as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.time(i)).collect()
    }

    /// Spectral differentiation matrix; antisymmetric with zero diagonal.
    pub fn diff_matrix(&self) -> DMatrix<f64> {
        let n = self.n;
        let scale = 2.0 * PI / self.period;
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                0.0
            } else {
                let k = i as f64 - j as f64;
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                0.5 * scale * sign / (k * PI / n as f64).tan()
            }
        })
    }

    /// Weights `w_j(t)` with `interp(t) = sum_j w_j y_j` (Nyquist mode split
    /// evenly, so the interpolant is real).
    pub fn interp_weights(&self, t: f64) -> Vec<f64> {
        let n = self.n as f64;
        (0..self.n)
            .map(|j| {
                let x = PI * (t - self.time(j)) / self.period;
                let s = x.sin();
                if s.abs() < 1e-14 {
                    // on node j modulo the period (n even)
                    1.0
                } else {
                    (n * x).sin() * (x.cos() / s) / n
                }
            })
            .collect()
    }

    /// Trigonometric interpolation of vector samples.
    pub fn interpolate(&self, samples: &[Vec<f64>], t: f64) -> Vec<f64> {
        let w = self.interp_weights(t);
        let mut out = vec![0.0; samples[0].len()];
        for (wj, s) in w.iter().zip(samples) {
            if *wj != 0.0 {
                crate::linalg::axpy(*wj, s, &mut out);
            }
        }
        out
    }

    /// Spectral time derivative of vector samples.
    pub fn differentiate(&self, samples: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let d = self.diff_matrix();
        let m = samples[0].len();
        (0..self.n)
            .map(|i| {
                let mut out = vec![0.0; m];
                for j in 0..self.n {
                    let c = d[(i, j)];
                    if c != 0.0 {
                        crate::linalg::axpy(c, &samples[j], &mut out);
                    }
                }
                out
            })
            .collect()
    }

    /// `int_0^T` of a sampled scalar (exact for trigonometric polynomials of
    /// degree below `n`).
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.dt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn differentiates_and_interpolates_trig_polynomials() {
        let g = TimeGrid::new(2.0, 16).unwrap();
        let w = PI;
        let f = |t: f64| vec![(w * t).sin() + 0.3 * (3.0 * w * t).cos(), 1.0];
        let df = |t: f64| w * (w * t).cos() - 0.9 * w * (3.0 * w * t).sin();
        let s: Vec<Vec<f64>> = g.times().iter().map(|&t| f(t)).collect();
        let d = g.differentiate(&s);
        for (i, t) in g.times().iter().enumerate() {
            assert!((d[i][0] - df(*t)).abs() < 1e-12);
            assert!(d[i][1].abs() < 1e-12);
        }
        for t in [0.0, 0.37, 1.0, 1.9, 2.0, 3.3] {
            let v = g.interpolate(&s, t);
            assert!((v[0] - f(t)[0]).abs() < 1e-12, "{t}");
        }
        let dm = g.diff_matrix();
        assert!((&dm + dm.transpose()).amax() < 1e-14);
        assert!((g.integrate(&g.times().iter().map(|t| (w * t).cos().powi(2)).collect::<Vec<_>>()) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_odd_grids() {
        assert!(TimeGrid::new(1.0, 7).is_err());
        assert!(TimeGrid::new(0.0, 8).is_err());
    }
}
