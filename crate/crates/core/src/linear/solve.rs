//! Periodic orbit of the Galerkin system by Fourier collocation in time.
//!
//! All `N_t` samples are unknowns of one dense linear system
//! `(D (x) I + I (x) Lambda - diag B(t_n)) C = G`, with `D` the spectral
//! differentiation matrix; periodicity holds by construction. An RK4 pass
//! over one period from `c(0)` measures closure, and the fundamental matrix
//! of the homogeneous system gives the monodromy operator.

use super::system::GalerkinSystem;
use crate::error::{Error, Result};
use crate::linalg::norm;
use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug)]
pub struct PeriodicSolution {
    /// `c(t_n)`, `N_t x k`.
    pub coeffs: Vec<Vec<f64>>,
    /// `||A C - G|| / ||G||` of the collocation system.
    pub collocation_residual: f64,
}

pub fn solve_periodic(sys: &GalerkinSystem) -> Result<PeriodicSolution> {
    let k = sys.k();
    let nt = sys.tgrid.n;
    if sys.is_trivial() {
        return Ok(PeriodicSolution { coeffs: vec![vec![0.0; k]; nt], collocation_residual: 0.0 });
    }
    let dim = k * nt;
    let d = sys.tgrid.diff_matrix();
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    for n in 0..nt {
        for m in 0..nt {
            if n != m {
                let v = d[(n, m)];
                for j in 0..k {
                    a[(n * k + j, m * k + j)] = v;
                }
            }
        }
        let b = sys.coupling_matrix(sys.tgrid.time(n));
        for i in 0..k {
            for j in 0..k {
                a[(n * k + i, n * k + j)] = -b[(i, j)];
            }
            a[(n * k + i, n * k + i)] += sys.lambda[i];
        }
    }
    let g = DVector::from_iterator(dim, sys.load.iter().flatten().copied());
    let lu = a.clone().lu();
    let c = lu
        .solve(&g)
        .ok_or_else(|| Error::Solvability("collocation matrix is singular (Floquet multiplier 1)".into()))?;
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solvability("collocation solve produced non-finite values".into()));
    }
    let res = (&a * &c - &g).norm() / g.norm();
    let coeffs = (0..nt).map(|n| c.rows(n * k, k).iter().copied().collect()).collect();
    Ok(PeriodicSolution { coeffs, collocation_residual: res })
}

/// Step size for RK4 passes: resolves the stiffest mode and the load.
fn rk4_steps(sys: &GalerkinSystem) -> usize {
    let lmax = sys.lambda.iter().fold(0.0f64, |a, &b| a.max(b));
    let bmax = (0..8)
        .map(|s| sys.coupling_matrix(sys.tgrid.period * s as f64 / 8.0).norm())
        .fold(0.0f64, f64::max);
    let rate = lmax + bmax + 2.0 * std::f64::consts::PI * sys.tgrid.n as f64 / sys.tgrid.period;
    let per_sample = ((rate * sys.tgrid.dt() / 0.02).ceil() as usize).max(4);
    per_sample * sys.tgrid.n
}

/// RK4 over one period for a `k x m` state `Y' = (-Lambda + B(t)) Y (+ g(t))`.
fn rk4_period(sys: &GalerkinSystem, y0: DMatrix<f64>, with_load: bool, steps: usize) -> DMatrix<f64> {
    let h = sys.tgrid.period / steps as f64;
    let lam = DMatrix::from_diagonal(&DVector::from_column_slice(&sys.lambda));
    let f = |t: f64, y: &DMatrix<f64>| -> DMatrix<f64> {
        let mut out = (sys.coupling_matrix(t) - &lam) * y;
        if with_load {
            let g = sys.load_at(t);
            for j in 0..out.ncols() {
                for i in 0..out.nrows() {
                    out[(i, j)] += g[i];
                }
            }
        }
        out
    };
    let mut y = y0;
    for s in 0..steps {
        let t = s as f64 * h;
        let k1 = f(t, &y);
        let k2 = f(t + 0.5 * h, &(&y + &k1 * (0.5 * h)));
        let k3 = f(t + 0.5 * h, &(&y + &k2 * (0.5 * h)));
        let k4 = f(t + h, &(&y + &k3 * h));
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    y
}

/// `||c_RK4(T) - c(0)|| / max_n ||c(t_n)||`, integrating from the collocated `c(0)`.
pub fn closure_residual(sys: &GalerkinSystem, sol: &PeriodicSolution) -> f64 {
    let scale = sol.coeffs.iter().map(|c| norm(c)).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let y0 = DMatrix::from_column_slice(sys.k(), 1, &sol.coeffs[0]);
    let end = rk4_period(sys, y0, true, rk4_steps(sys));
    let diff: Vec<f64> = end.iter().zip(&sol.coeffs[0]).map(|(a, b)| a - b).collect();
    norm(&diff) / scale
}

#[derive(Clone, Debug)]
pub struct Monodromy {
    pub matrix: DMatrix<f64>,
    /// Power-iteration estimate of the spectral radius.
    pub spectral_radius: f64,
}

/// Period map of the homogeneous system and its spectral radius.
pub fn monodromy(sys: &GalerkinSystem) -> Monodromy {
    let m = rk4_period(sys, DMatrix::identity(sys.k(), sys.k()), false, rk4_steps(sys));
    let spectral_radius = power_radius(&m, 400, 200);
    Monodromy { matrix: m, spectral_radius }
}

/// Mean logarithmic growth of `M^n x` after a burn-in; robust to complex
/// dominant pairs since it averages over many steps.
pub fn power_radius(m: &DMatrix<f64>, burn_in: usize, window: usize) -> f64 {
    let k = m.nrows();
    if k == 0 {
        return 0.0;
    }
    let mut x = DVector::from_fn(k, |i, _| 1.0 + 0.1 * (i as f64 * 0.7).sin());
    x /= x.norm();
    let mut log_sum = 0.0;
    for it in 0..burn_in + window {
        let y = m * &x;
        let g = y.norm();
        if g == 0.0 || !g.is_finite() {
            return if g == 0.0 { 0.0 } else { f64::INFINITY };
        }
        if it >= burn_in {
            log_sum += g.ln();
        }
        x = y / g;
    }
    (log_sum / window as f64).exp()
}
