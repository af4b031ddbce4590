//! End-to-end linear run: domain, basis, extension, periodic solve, pressure
//! and estimate replay.

use super::estimates::{replay_estimates, EstimateEntry};
use super::field::{reconstruct_velocity, PeriodicField, PressureReport};
use super::solve::{closure_residual, monodromy, solve_periodic};
use super::system::{project_forcing, ExtensionCoupling, GalerkinOperators, GalerkinSystem};
use crate::error::Result;
use crate::forcing::{DataNorms, Forcing};
use crate::geometry::{build_truncated_domain, BodySpec};
use crate::motion::RigidMotionSpec;
use crate::stokes::extension::{build_extension, build_extension_fixed, ExtensionField};
use crate::stokes::{assemble_projector, solve_stokes_eigs, EigenOptions, LerayProjector, StokesBasis};
use crate::time::TimeGrid;
use serde::Serialize;
use std::sync::Arc;

/// Time samples used for data-norm quadrature.
pub const DATA_SAMPLES: usize = 64;

/// How the inner radius of the extension layer is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtensionLayer {
    /// Thinned until the measured eps is below the target.
    Auto { eps_target: f64 },
    Fixed { a: f64 },
}

#[derive(Clone, Debug)]
pub struct LinearConfig {
    pub body: BodySpec,
    pub r: f64,
    pub h: f64,
    pub k: usize,
    pub n_t: usize,
    pub motion: RigidMotionSpec,
    pub forcing: Forcing,
    /// Support radius of the extension.
    pub rho: f64,
    pub layer: ExtensionLayer,
    pub coupling: ExtensionCoupling,
    pub eigen: EigenOptions,
    pub pressure: bool,
}

impl LinearConfig {
    pub fn is_trivial(&self) -> bool {
        self.motion.is_at_rest() && self.forcing.is_zero()
    }
}

/// Everything that does not depend on the load.
pub struct LinearSetup {
    pub projector: Arc<LerayProjector>,
    pub basis: Arc<StokesBasis>,
    pub extension: Arc<ExtensionField>,
    pub ops: Arc<GalerkinOperators>,
    pub tgrid: TimeGrid,
}

impl LinearSetup {
    /// With `trivial` set the basis is left empty (zero data needs no modes).
    pub fn build(cfg: &LinearConfig, trivial: bool) -> Result<Self> {
        let tgrid = TimeGrid::new(cfg.motion.period, cfg.n_t)?;
        cfg.forcing.validate(cfg.motion.period)?;
        let domain = Arc::new(build_truncated_domain(cfg.body, cfg.r, cfg.h)?);
        let projector = Arc::new(assemble_projector(domain.clone())?);
        let basis = if trivial {
            StokesBasis { domain, eigenvalues: vec![], fields: vec![], residuals: vec![], iterations: 0 }
        } else {
            solve_stokes_eigs(&projector, cfg.k, cfg.eigen)?
        };
        let extension = match cfg.layer {
            ExtensionLayer::Auto { eps_target } => build_extension(&cfg.motion, &basis, &projector, cfg.rho, eps_target)?,
            ExtensionLayer::Fixed { a } => build_extension_fixed(&cfg.motion, &basis, &projector, cfg.rho, a)?,
        };
        let basis = Arc::new(basis);
        let extension = Arc::new(extension);
        let ops = Arc::new(GalerkinOperators::new(basis.clone(), extension.clone(), cfg.coupling)?);
        Ok(LinearSetup { projector, basis, extension, ops, tgrid })
    }

    pub fn system(&self, data_load: Vec<Vec<f64>>) -> Result<GalerkinSystem> {
        GalerkinSystem::new(self.ops.clone(), self.tgrid, data_load)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearReport {
    pub r: f64,
    pub h: f64,
    pub k: usize,
    pub n_t: usize,
    pub trivial: bool,
    pub epsilon: f64,
    pub layer_inner_radius: f64,
    pub eigen_residual_max: f64,
    pub collocation_residual: f64,
    pub closure_residual: f64,
    pub monodromy_radius: f64,
    pub rotation_antisymmetry: f64,
    pub div_residual: f64,
    pub trace_error: f64,
    pub pressure_before: Option<f64>,
    pub pressure_after: Option<f64>,
    pub data: DataNorms,
}

pub struct LinearRun {
    pub setup: LinearSetup,
    pub field: PeriodicField,
    pub report: LinearReport,
    pub estimates: Vec<EstimateEntry>,
}

pub fn run_linear(cfg: &LinearConfig) -> Result<LinearRun> {
    let trivial = cfg.is_trivial();
    let setup = LinearSetup::build(cfg, trivial)?;
    let load = project_forcing(&setup.basis, &cfg.forcing, &setup.tgrid);
    let sys = setup.system(load)?;
    let sol = solve_periodic(&sys)?;
    let closure = closure_residual(&sys, &sol);
    let mono = if trivial { 0.0 } else { monodromy(&sys).spectral_radius };
    let mut field = reconstruct_velocity(&sys, &sol);
    let pressure: Option<PressureReport> = if cfg.pressure {
        let g = setup.basis.domain.grid;
        let prof = cfg.forcing.profiles(&g);
        let tg = setup.tgrid;
        Some(field.recover_pressure(&setup.projector, &|n| cfg.forcing.sample(&g, &prof, tg.time(n), 0))?)
    } else {
        None
    };
    let data = cfg.forcing.norms(&setup.basis.domain, &cfg.motion, DATA_SAMPLES);
    let estimates = replay_estimates(&field, &data);
    let report = LinearReport {
        r: cfg.r,
        h: cfg.h,
        k: setup.basis.k(),
        n_t: cfg.n_t,
        trivial,
        epsilon: setup.extension.epsilon,
        layer_inner_radius: setup.extension.cutoff.a,
        eigen_residual_max: setup.basis.residuals.iter().fold(0.0, |a, &b| a.max(b)),
        collocation_residual: sol.collocation_residual,
        closure_residual: closure,
        monodromy_radius: mono,
        rotation_antisymmetry: setup.ops.rotation_antisymmetry,
        div_residual: field.div_residual(),
        trace_error: field.trace_error(),
        pressure_before: pressure.as_ref().map(|p| p.before),
        pressure_after: pressure.as_ref().map(|p| p.after),
        data,
    };
    Ok(LinearRun { setup, field, report, estimates })
}
