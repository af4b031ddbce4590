//! Small-data solve: Picard iteration from zero, calibration of `c2`, the
//! smallness gate, fixed-point residual and pressure norms.

use super::norms::{BilinearReport, DataNorm, FieldSamples};
use super::picard::{IterateRecord, NonlinearConfig, NonlinearSolver, PicardRun, StepReport};
use crate::error::{Error, Result};
use crate::geometry::TruncatedDomain;
use crate::linear::PeriodicField;
use serde::Serialize;

/// Exponents `r` of the pressure norms `||p||_{L^inf(L^r)}`.
pub const PRESSURE_EXPONENTS: [f64; 3] = [2.0, 3.0, 6.0];

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct NonlinearReport {
    pub r: f64,
    pub h: f64,
    pub k: usize,
    pub n_t: usize,
    pub lambda: f64,
    pub tol: f64,
    pub data: DataNorm,
    pub converged: bool,
    pub iterations: usize,
    pub history: Vec<IterateRecord>,
    pub steps: Vec<StepReport>,
    /// `|M(0)| / |data|`.
    pub c_linear: f64,
    /// `|M(M(0)) - M(0)| / |M(0)|^2`.
    pub c_quadratic: f64,
    /// `max(c_linear, c_quadratic)`.
    pub c2: f64,
    /// `4 c2 |data|`.
    pub delta: f64,
    /// `1 / (16 c2^2)`.
    pub gate_bound: f64,
    /// `|data| < gate_bound`.
    pub gate_ok: bool,
    /// `2 c2 delta`.
    pub predicted_ratio: f64,
    pub max_ratio: f64,
    pub first_ratio: Option<f64>,
    pub solution_proxy: f64,
    /// `|u| / |data|`.
    pub solution_constant: f64,
    /// Galerkin-space momentum residual with the convection term, relative.
    pub momentum_residual: f64,
    pub pressure_before: f64,
    pub pressure_norms: Vec<(f64, f64)>,
    pub bilinear: BilinearReport,
}

pub struct NonlinearRun {
    pub solver: NonlinearSolver,
    pub picard: PicardRun,
    pub report: NonlinearReport,
}

impl NonlinearRun {
    pub fn solution(&self) -> &PeriodicField {
        &self.picard.solution
    }
}

/// `sup_n (int |p|^r)^{1/r}` over the fluid cells.
pub fn pressure_norm(dom: &TruncatedDomain, p: &[Vec<f64>], r: f64) -> f64 {
    let dv = dom.grid.cell_volume();
    p.iter()
        .map(|s| (s.iter().map(|v| v.abs().powf(r)).sum::<f64>() * dv).powf(1.0 / r))
        .fold(0.0, f64::max)
}

/// Recovers the pressure of a fixed point of `M` and returns the relative
/// momentum residual before and after removing its gradient.
pub fn fixed_point_residual(solver: &NonlinearSolver, field: &mut PeriodicField) -> Result<(f64, f64)> {
    let s = FieldSamples::of(field);
    let conv = solver.convection(&s);
    let g = solver.setup.basis.domain.grid;
    let prof = solver.data.forcing.profiles(&g);
    let tg = solver.setup.tgrid;
    let forcing = |n: usize| {
        let mut f = solver.data.forcing.sample(&g, &prof, tg.time(n), 0);
        crate::linalg::axpy(-1.0, &conv[n], &mut f);
        f
    };
    let rep = field.recover_pressure(&solver.setup.projector, &forcing)?;
    Ok((rep.before, rep.after))
}

/// Calibrates `c2` from the first two iterates of a run started at zero.
fn calibrate(history: &[IterateRecord], data: f64) -> (f64, f64) {
    let u1 = history.first().map(|h| h.proxy).unwrap_or(0.0);
    let c_linear = if data > 0.0 { u1 / data } else { 0.0 };
    let c_quadratic = match history.get(1) {
        Some(h) if u1 > 0.0 => h.diff / (u1 * u1),
        _ => 0.0,
    };
    (c_linear, c_quadratic)
}

pub fn solve_nonlinear(cfg: &NonlinearConfig) -> Result<NonlinearRun> {
    let solver = NonlinearSolver::new(&cfg.linear)?;
    solve_with(solver, cfg.tol, cfg.max_iter)
}

/// Runs the iteration from zero with an existing solver.
pub fn solve_with(solver: NonlinearSolver, tol: f64, max_iter: usize) -> Result<NonlinearRun> {
    let mut picard = solver.iterate_from(None, tol, max_iter)?;
    let data = solver.data_norm.total;
    let (c_linear, c_quadratic) = calibrate(&picard.history, data);
    let c2 = c_linear.max(c_quadratic);
    let delta = 4.0 * c2 * data;
    let gate_bound = if c2 > 0.0 { 1.0 / (16.0 * c2 * c2) } else { f64::INFINITY };
    let ratios = picard.ratios();
    let (before, after) = fixed_point_residual(&solver, &mut picard.solution)?;
    let dom = &solver.setup.basis.domain;
    let pressure_norms = match &picard.solution.pressure {
        Some(p) => PRESSURE_EXPONENTS.iter().map(|&r| (r, pressure_norm(dom, p, r))).collect(),
        None => vec![],
    };
    let solution_proxy = solver.proxy(&picard.samples).total;
    let bilinear = solver.bilinear(&picard.samples, &picard.samples);
    let basis = &solver.setup.basis;
    let report = NonlinearReport {
        r: dom.r,
        h: dom.h(),
        k: basis.k(),
        n_t: solver.setup.tgrid.n,
        lambda: solver.lambda,
        tol,
        data: solver.data_norm,
        converged: picard.converged,
        iterations: picard.history.len(),
        history: picard.history.clone(),
        steps: picard.steps.clone(),
        c_linear,
        c_quadratic,
        c2,
        delta,
        gate_bound,
        gate_ok: data < gate_bound,
        predicted_ratio: 2.0 * c2 * delta,
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
        first_ratio: ratios.first().copied(),
        solution_proxy,
        solution_constant: if data > 0.0 { solution_proxy / data } else { 0.0 },
        momentum_residual: after,
        pressure_before: before,
        pressure_norms,
        bilinear,
    };
    Ok(NonlinearRun { solver, picard, report })
}

/// Solution norms over a forcing-amplitude sweep.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ResponseFit {
    pub amplitudes: Vec<f64>,
    pub norms: Vec<f64>,
    /// `log(N_{i+1} / N_i) / log(a_{i+1} / a_i)`.
    pub exponents: Vec<f64>,
    /// Least-squares `N = alpha a + beta a^2`.
    pub alpha: f64,
    pub beta: f64,
    /// `beta a_max / alpha`.
    pub curvature: f64,
    /// Largest relative misfit of the two-term model.
    pub misfit: f64,
}

/// Solves at each amplitude (forcing scaled, motion unchanged) and fits the
/// response.
pub fn response_sweep(base: &NonlinearSolver, amplitudes: &[f64], tol: f64, max_iter: usize) -> Result<ResponseFit> {
    if amplitudes.len() < 3 || amplitudes.iter().any(|a| !(*a > 0.0)) {
        return Err(Error::Precondition("response sweep needs at least three positive amplitudes".into()));
    }
    if base.setup.basis.k() == 0 {
        return Err(Error::Precondition("solver was built for zero data and has no modes".into()));
    }
    let mut norms = Vec::with_capacity(amplitudes.len());
    for &a in amplitudes {
        let s = base.with_forcing(base.data.forcing.scaled(a));
        let run = s.iterate_from(None, tol, max_iter)?;
        if !run.converged {
            return Err(Error::Divergence(format!("no convergence at amplitude {a}")));
        }
        norms.push(s.proxy(&run.samples).total);
    }
    let exponents = amplitudes
        .windows(2)
        .zip(norms.windows(2))
        .map(|(a, n)| (n[1] / n[0]).ln() / (a[1] / a[0]).ln())
        .collect();
    // normal equations for N / a = alpha + beta a
    let m = amplitudes.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (a, n) in amplitudes.iter().zip(&norms) {
        let y = n / a;
        sx += a;
        sy += y;
        sxx += a * a;
        sxy += a * y;
    }
    let beta = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let alpha = (sy - beta * sx) / m;
    let a_max = amplitudes.iter().copied().fold(0.0, f64::max);
    let misfit = amplitudes
        .iter()
        .zip(&norms)
        .map(|(a, n)| ((alpha * a + beta * a * a) / n - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(ResponseFit {
        amplitudes: amplitudes.to_vec(),
        norms,
        exponents,
        alpha,
        beta,
        curvature: beta * a_max / alpha,
        misfit,
    })
}
