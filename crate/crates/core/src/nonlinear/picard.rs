//! The map `M`: given an iterate `U`, solve the linear problem with the
//! extra load `-U . grad U`, and Picard iteration on it.

use super::norms::{bilinear_bound, proxy_norm, BilinearReport, DataBundle, DataNorm, FieldSamples, ProxyNorm};
use crate::error::{Error, Result};
use crate::fields::{advect, Adv};
use crate::forcing::Forcing;
use crate::linear::system::project_full;
use crate::linear::{project_forcing, reconstruct_velocity, solve_periodic, ExtensionCoupling, LinearConfig, LinearSetup, PeriodicField};
use crate::motion::validate_hypothesis_h;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 40;
/// Consecutive non-contracting steps that count as divergence.
pub const DIVERGENCE_STEPS: usize = 3;

#[derive(Clone, Debug)]
pub struct NonlinearConfig {
    pub linear: LinearConfig,
    /// Bound on the proxy norm of successive differences.
    pub tol: f64,
    pub max_iter: usize,
}

impl NonlinearConfig {
    /// Coupling is switched off so the linear map carries no linearised
    /// convection, and the pressure is always recovered.
    pub fn new(mut linear: LinearConfig) -> Self {
        linear.coupling = ExtensionCoupling::Off;
        linear.pressure = true;
        NonlinearConfig { linear, tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER }
    }
}

/// The linear setup plus one data set.
pub struct NonlinearSolver {
    pub setup: Arc<LinearSetup>,
    pub data: DataBundle,
    pub data_norm: DataNorm,
    pub lambda: f64,
    data_load: Vec<Vec<f64>>,
}

/// One application of `M`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StepReport {
    pub input: f64,
    pub output: f64,
    /// `|M(U)| / (|U|^2 + |data|)`.
    pub quadratic_ratio: f64,
}

impl NonlinearSolver {
    pub fn new(cfg: &LinearConfig) -> Result<Self> {
        if let crate::motion::Hypothesis::Violated(why) = validate_hypothesis_h(&cfg.motion) {
            return Err(Error::Hypothesis(why));
        }
        if cfg.coupling != ExtensionCoupling::Off {
            return Err(Error::Precondition("the nonlinear map needs the extension coupling off".into()));
        }
        let setup = Arc::new(LinearSetup::build(cfg, cfg.is_trivial())?);
        Ok(Self::with_setup(setup, DataBundle { forcing: cfg.forcing.clone(), motion: cfg.motion.clone() }))
    }

    /// Same setup, new forcing (the motion is baked into the setup).
    pub fn with_forcing(&self, forcing: Forcing) -> Self {
        Self::with_setup(self.setup.clone(), DataBundle { forcing, motion: self.data.motion.clone() })
    }

    fn with_setup(setup: Arc<LinearSetup>, data: DataBundle) -> Self {
        let data_load = project_forcing(&setup.basis, &data.forcing, &setup.tgrid);
        let data_norm = data.norm(&setup.basis.domain);
        let lambda = data.motion.lambda;
        NonlinearSolver { setup, data, data_norm, lambda, data_load }
    }

    pub fn n_faces(&self) -> usize {
        self.setup.basis.domain.grid.n_faces()
    }

    pub fn proxy(&self, s: &FieldSamples) -> ProxyNorm {
        proxy_norm(&self.setup.basis.domain, &self.setup.tgrid, s, self.lambda)
    }

    pub fn bilinear(&self, u: &FieldSamples, w: &FieldSamples) -> BilinearReport {
        bilinear_bound(&self.setup.basis.domain, &self.setup.tgrid, u, w, self.lambda)
    }

    /// `U . grad U` at each sample on the full grid.
    pub fn convection(&self, it: &FieldSamples) -> Vec<Vec<f64>> {
        let g = self.setup.basis.domain.grid;
        it.u.iter().map(|u| advect(&g, Adv::Faces(u), u)).collect()
    }

    /// `u = M(U)`.
    pub fn map(&self, iterate: &FieldSamples) -> Result<PeriodicField> {
        let mut load = self.data_load.clone();
        if !iterate.is_zero() {
            for (l, c) in load.iter_mut().zip(self.convection(iterate)) {
                crate::linalg::axpy(-1.0, &project_full(&self.setup.basis, &c), l);
            }
        }
        let sys = self.setup.system(load)?;
        let sol = solve_periodic(&sys)?;
        Ok(reconstruct_velocity(&sys, &sol))
    }

    /// `M(U)` with the quadratic bound replayed.
    pub fn contraction_step(&self, iterate: &FieldSamples) -> Result<(PeriodicField, StepReport)> {
        let field = self.map(iterate)?;
        let input = self.proxy(iterate).total;
        let output = self.proxy(&FieldSamples::of(&field)).total;
        let denom = input * input + self.data_norm.total;
        let quadratic_ratio = if denom > 0.0 { output / denom } else { 0.0 };
        Ok((field, StepReport { input, output, quadratic_ratio }))
    }

    /// Picard iteration from `start` (zero when `None`).
    pub fn iterate_from(&self, start: Option<FieldSamples>, tol: f64, max_iter: usize) -> Result<PicardRun> {
        let n_t = self.setup.tgrid.n;
        let mut prev = start.unwrap_or_else(|| FieldSamples::zero(self.n_faces(), n_t));
        let mut history = Vec::new();
        let mut steps = Vec::new();
        let mut last_diff: Option<f64> = None;
        let mut streak = 0;
        for it in 1..=max_iter {
            let (field, step) = self.contraction_step(&prev)?;
            let next = FieldSamples::of(&field);
            let diff = self.proxy(&next.sub(&prev)).total;
            let ratio = last_diff.map(|d| if d > 0.0 { diff / d } else { 0.0 });
            history.push(IterateRecord { iteration: it, proxy: step.output, diff, ratio });
            steps.push(step);
            if ratio.is_some_and(|r| r >= 1.0) {
                streak += 1;
                if streak >= DIVERGENCE_STEPS {
                    return Err(Error::Divergence(format!(
                        "{DIVERGENCE_STEPS} consecutive steps with ratio >= 1 (last {:.3}) at iteration {it}",
                        ratio.unwrap_or(0.0)
                    )));
                }
            } else {
                streak = 0;
            }
            last_diff = Some(diff);
            let done = diff < tol;
            prev = next;
            if done {
                return Ok(PicardRun { solution: field, samples: prev, history, steps, converged: true });
            }
            if it == max_iter {
                return Ok(PicardRun { solution: field, samples: prev, history, steps, converged: false });
            }
        }
        Err(Error::Precondition("max_iter must be at least 1".into()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub iteration: usize,
    pub proxy: f64,
    /// `|u_n - u_{n-1}|`.
    pub diff: f64,
    /// `diff_n / diff_{n-1}`; absent for the first iterate.
    pub ratio: Option<f64>,
}

pub struct PicardRun {
    pub solution: PeriodicField,
    pub samples: FieldSamples,
    pub history: Vec<IterateRecord>,
    pub steps: Vec<StepReport>,
    pub converged: bool,
}

impl PicardRun {
    pub fn ratios(&self) -> Vec<f64> {
        self.history.iter().filter_map(|h| h.ratio).collect()
    }

    pub fn convergence_csv(&self) -> String {
        let mut s = String::from("iteration,proxy,diff,ratio\n");
        for h in &self.history {
            let r = h.ratio.map(|r| format!("{r:.6e}")).unwrap_or_default();
            s.push_str(&format!("{},{:.10e},{:.6e},{r}\n", h.iteration, h.proxy, h.diff));
        }
        s
    }
}
