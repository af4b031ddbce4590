//! Experiment drivers: run one experiment from a manifest, write its ledger,
//! reports, dumps and figures, and check ledger coverage.

use super::dump::FieldDump;
use super::ledger::*;
use super::manifest::{Experiment, RunManifest};
use super::norms::compute_norms;
use super::plots::{emit_plots, CONVERGENCE_JSON, RAYS_JSON, WAKE_MAP_JSON};
use crate::error::{Error, Result};
use crate::geometry::build_truncated_domain;
use crate::invading::{run_invading_sweep, GlueReport, InvadingConfig, SweepFailure};
use crate::linear::{run_linear, LinearReport, PeriodicField};
use crate::nonlinear::uniqueness::{LIMIT_FACTOR, PROBE_RADII};
use crate::nonlinear::{solve_nonlinear, uniqueness_probe, NonlinearConfig, NonlinearReport, NonlinearRun, UniquenessReport};
use crate::oseen::pipeline::{UPSTREAM_BAND, WAKE_BAND, WEIGHTED_STABILITY};
use crate::oseen::wake::{rays_csv, RayFamily};
use crate::oseen::{run_oseen, OseenReport};
use crate::stokes::bogovskii::Bogovskii;
use crate::stokes::checks::{hardy_ratio, heywood_constant, poincare_constant};
use crate::stokes::persist::BasisFile;
use crate::stokes::{assemble_projector, solve_stokes_eigs, LerayProjector};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const LEDGER_FILE: &str = "ledger.jsonl";
pub const REPORT_FILE: &str = "report.json";
pub const ERROR_FILE: &str = "error.json";

/// Tolerances of the ledger checks.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-6;
pub const BOGOVSKII_TOL: f64 = 1e-8;
pub const CLOSURE_TOL: f64 = 1e-9;
pub const MOMENTUM_TOL: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub experiment: Experiment,
    pub dir: PathBuf,
    pub ledger: Ledger,
    pub artifacts: Vec<PathBuf>,
    /// Zero data: nothing to replay, and the ledger is allowed to be empty.
    pub trivial: bool,
    pub pass: bool,
}

/// Files written by one run, in write order.
struct Out {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Out {
    fn bytes(&mut self, name: &str, b: &[u8]) -> Result<()> {
        let p = self.dir.join(name);
        std::fs::write(&p, b)?;
        self.files.push(p);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<()> {
        let s = serde_json::to_string_pretty(v).map_err(|e| Error::Precondition(format!("{name}: {e}")))?;
        self.bytes(name, s.as_bytes())
    }
}

/// Short machine-readable name of an error variant.
pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::DomainTooSmall { .. } => "domain_too_small",
        Error::Resolution(_) => "resolution",
        Error::Geometry(_) => "geometry",
        Error::Coverage(_) => "coverage",
        Error::Motion(_) => "motion",
        Error::Hypothesis(_) => "hypothesis",
        Error::IntegratorTolerance(_) => "integrator_tolerance",
        Error::Assembly(_) => "assembly",
        Error::Spectral(_) => "spectral",
        Error::Solver(_) => "solver",
        Error::Precondition(_) => "precondition",
        Error::ExtensionSmallness { .. } => "extension_smallness",
        Error::Solvability(_) => "solvability",
        Error::PressureRecovery(_) => "pressure_recovery",
        Error::Drift(_) => "drift",
        Error::BoxSize(_) => "box_size",
        Error::FitWindow(_) => "fit_window",
        Error::Divergence(_) => "divergence",
        Error::Uniqueness(_) => "uniqueness",
        Error::Manifest(_) => "manifest",
        Error::Decode(_) => "decode",
        Error::MissingReport(_) => "missing_report",
        Error::LedgerCoverage(_) => "ledger_coverage",
        Error::Io(_) => "io",
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    experiment: &'a str,
    error: &'a str,
    message: String,
}

/// Writes `error.json` into `dir`; failures to write are ignored since the
/// error itself is already being reported.
pub fn write_error_report(dir: &Path, exp: Experiment, e: &Error) {
    let r = ErrorReport { experiment: exp.name(), error: error_kind(e), message: e.to_string() };
    if std::fs::create_dir_all(dir).is_ok() {
        let _ = std::fs::write(dir.join(ERROR_FILE), serde_json::to_string_pretty(&r).unwrap_or_default());
    }
}

/// Runs `exp` with `seed`; the manifest's own selector, when present, must
/// agree.
pub fn run_experiment(m: &RunManifest, exp: Experiment, dir: &Path, seed: u64) -> Result<RunOutcome> {
    if let Some(sel) = m.experiment {
        if sel != exp {
            return Err(Error::Manifest(format!("manifest selects {}, asked to run {}", sel.name(), exp.name())));
        }
    }
    std::fs::create_dir_all(dir)?;
    let mut out = Out { dir: dir.to_path_buf(), files: vec![] };
    let mut ledger = Ledger::new();
    let trivial = match exp {
        Experiment::Basis => basis(m, seed, &mut out, &mut ledger)?,
        Experiment::Linear => linear(m, seed, &mut out, &mut ledger)?,
        Experiment::Invade => invade(m, seed, &mut out, &mut ledger)?,
        Experiment::Oseen => oseen(m, seed, &mut out, &mut ledger)?,
        Experiment::Nonlinear | Experiment::Uniqueness => nonlinear(m, exp, seed, &mut out, &mut ledger)?,
    };
    out.bytes(LEDGER_FILE, ledger.to_jsonl().as_bytes())?;
    out.bytes("manifest.toml", m.to_toml().as_bytes())?;
    if m.output.plots {
        out.files.extend(emit_plots(exp, dir)?);
    }
    if !trivial {
        ledger.check_coverage(exp)?;
    }
    let pass = ledger.pass();
    Ok(RunOutcome { experiment: exp, dir: dir.to_path_buf(), ledger, artifacts: out.files, trivial, pass })
}

/// Regenerates figures and re-checks the stored ledger of a finished run.
pub fn report(exp: Experiment, dir: &Path) -> Result<RunOutcome> {
    let path = dir.join(LEDGER_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::MissingReport(format!("{}: {e}", path.display())))?;
    let ledger = Ledger::from_jsonl(&text)?;
    let artifacts = emit_plots(exp, dir)?;
    let trivial = ledger.is_empty();
    if !trivial {
        ledger.check_coverage(exp)?;
    }
    let pass = ledger.pass();
    Ok(RunOutcome { experiment: exp, dir: dir.to_path_buf(), ledger, artifacts, trivial, pass })
}

fn dump(m: &RunManifest, out: &mut Out, name: &str, field: &PeriodicField, lambda: f64) -> Result<()> {
    if m.output.dumps {
        out.bytes(name, &FieldDump::from_field(field, lambda).encode())?;
    }
    Ok(())
}

fn linear_context(r: &LinearReport) -> Context {
    Context { r: r.r, h: r.h, k: r.k, n_t: r.n_t }
}

#[derive(Serialize)]
struct BogovskiiReport {
    r_in: f64,
    r_out: f64,
    div_residual: f64,
    c0: f64,
    iterations: usize,
}

#[derive(Serialize)]
struct BasisReport {
    r: f64,
    h: f64,
    k: usize,
    eigenvalues: Vec<f64>,
    residuals: Vec<f64>,
    heywood: f64,
    hardy: f64,
    hardy_bound: f64,
    poincare: f64,
    bogovskii: BogovskiiReport,
}

/// `div w` for a smooth `w` vanishing near both walls of the shell.
fn shell_data(p: &LerayProjector, r_in: f64, r_out: f64) -> Vec<f64> {
    let dom = p.domain();
    let bump = |x: [f64; 3]| {
        let s = ((crate::mac::norm3(x) - r_in) / (r_out - r_in)).clamp(0.0, 1.0);
        (std::f64::consts::PI * s).sin().powi(4)
    };
    let full = dom.grid.sample_faces(|x| {
        let b = bump(x);
        [b * (1.0 + x[1]), 0.5 * b * x[0], -0.2 * b * x[2] * x[0]]
    });
    p.divergence(&dom.gather(&full))
}

fn basis(m: &RunManifest, seed: u64, out: &mut Out, ledger: &mut Ledger) -> Result<bool> {
    let exp = Experiment::Basis;
    let cfg = m.linear_config(seed)?;
    let dom = Arc::new(build_truncated_domain(cfg.body, cfg.r, cfg.h)?);
    let proj = assemble_projector(dom.clone())?;
    let b = solve_stokes_eigs(&proj, cfg.k, cfg.eigen)?;
    let ctx = Context { r: cfg.r, h: dom.h(), k: b.k(), n_t: 0 };
    let worst = b.residuals.iter().copied().fold(0.0, f64::max);
    ledger.check(exp, EIGEN_RESIDUAL, ctx, worst, EIGEN_RESIDUAL_TOL);
    let heywood = heywood_constant(&b);
    ledger.log(exp, HEYWOOD_CONSTANT, ctx, heywood, 1.0);
    let hardy = hardy_ratio(&b);
    let hardy_bound = 4.0 * (1.0 + 5.0 * dom.h());
    ledger.check(exp, HARDY_RATIO, ctx, hardy, hardy_bound);
    let (r_in, r_out) = (0.5 * cfg.r, cfg.r);
    let shell = assemble_projector(Arc::new(dom.annulus_domain(r_in, r_out)?))?;
    let bog = Bogovskii::new(&shell).solve(&shell_data(&shell, r_in, r_out))?;
    ledger.check(exp, BOGOVSKII_DIV, ctx, bog.div_residual, BOGOVSKII_TOL);
    ledger.log(exp, BOGOVSKII_C0, ctx, bog.c0, 1.0);
    out.bytes("basis.bin", &BasisFile::from_basis(&b).encode())?;
    out.bytes("mask.bin", &dom.mask_dump().encode())?;
    out.json(
        REPORT_FILE,
        &BasisReport {
            r: cfg.r,
            h: dom.h(),
            k: b.k(),
            eigenvalues: b.eigenvalues.clone(),
            residuals: b.residuals.clone(),
            heywood,
            hardy,
            hardy_bound,
            poincare: poincare_constant(&b, cfg.rho),
            bogovskii: BogovskiiReport { r_in, r_out, div_residual: bog.div_residual, c0: bog.c0, iterations: bog.stats.iterations },
        },
    )?;
    Ok(false)
}

#[derive(Serialize)]
struct LinearOutput<'a> {
    report: &'a LinearReport,
    norms: super::norms::NormBundle,
}

fn linear(m: &RunManifest, seed: u64, out: &mut Out, ledger: &mut Ledger) -> Result<bool> {
    let exp = Experiment::Linear;
    let cfg = m.linear_config(seed)?;
    let run = run_linear(&cfg)?;
    let rep = &run.report;
    if !rep.trivial {
        let ctx = linear_context(rep);
        for e in &run.estimates {
            ledger.push_estimate(exp, e);
        }
        ledger.check(exp, CLOSURE, ctx, rep.closure_residual, CLOSURE_TOL);
        let rho = rep.monodromy_radius;
        ledger.record(exp, MONODROMY, ctx, rho, 1.0, true, rho < 1.0);
    }
    out.json(REPORT_FILE, &LinearOutput { report: rep, norms: compute_norms(&run.field, cfg.motion.lambda) })?;
    dump(m, out, "field.bin", &run.field, cfg.motion.lambda)?;
    Ok(rep.trivial)
}

#[derive(Serialize)]
struct InvadeOutput<'a> {
    window: f64,
    window_differences: &'a [f64],
    levels: Vec<(&'a LinearReport, &'a GlueReport)>,
    failure: &'a Option<SweepFailure>,
}

fn invade(m: &RunManifest, seed: u64, out: &mut Out, ledger: &mut Ledger) -> Result<bool> {
    let exp = Experiment::Invade;
    let blk = m.invade.as_ref().ok_or_else(|| Error::Manifest("missing [invade] block".into()))?;
    let base = m.linear_config(seed)?;
    let lambda = base.motion.lambda;
    let cfg = InvadingConfig { base, radii: blk.radii.clone(), window: blk.window, workers: crate::parallel::workers() };
    let run = run_invading_sweep(&cfg)?;
    for e in &run.ledger {
        ledger.push_estimate(exp, e);
    }
    for (lvl, d) in run.levels.iter().skip(1).zip(&run.window_differences) {
        ledger.log(exp, WINDOW_DIFFERENCE, linear_context(&lvl.run.report), *d, 1.0);
    }
    let ctx = run.levels.last().map(|l| linear_context(&l.run.report)).unwrap_or_default();
    ledger.check(exp, SWEEP_COMPLETE, ctx, if run.failure.is_some() { 1.0 } else { 0.0 }, 0.0);
    out.bytes("convergence.csv", run.convergence_csv().as_bytes())?;
    out.json(
        REPORT_FILE,
        &InvadeOutput {
            window: run.window,
            window_differences: &run.window_differences,
            levels: run.levels.iter().map(|l| (&l.run.report, &l.glue)).collect(),
            failure: &run.failure,
        },
    )?;
    for l in &run.levels {
        dump(m, out, &format!("field_r{}.bin", l.run.report.r), &l.run.field, lambda)?;
    }
    Ok(false)
}

#[derive(Serialize)]
struct OseenOutput<'a> {
    linear: &'a LinearReport,
    oseen: &'a OseenReport,
}

fn oseen(m: &RunManifest, seed: u64, out: &mut Out, ledger: &mut Ledger) -> Result<bool> {
    let exp = Experiment::Oseen;
    let cfg = m.oseen_config(seed)?;
    let run = run_oseen(&cfg)?;
    let rep = &run.report;
    let ctx = linear_context(&run.linear);
    let d = &run.linear.data;
    let data = d.f_w12l2 + d.calf_w12l2 + d.xi_w22 + d.omega_w22;
    ledger.record(exp, OSEEN_WEIGHTED, ctx, rep.weighted_inner, data, true, rep.weighted_inner.is_finite());
    ledger.record(exp, OSEEN_SHIFT, ctx, rep.weighted_shift, WEIGHTED_STABILITY, true, rep.checks.weighted_ok);
    let centre = |b: (f64, f64)| (0.5 * (b.0 + b.1), 0.5 * (b.1 - b.0));
    for f in &run.fits {
        let band = match (rep.lambda > 0.0, f.family) {
            (true, RayFamily::Wake) => Some(WAKE_BAND),
            (true, RayFamily::Upstream) => Some(UPSTREAM_BAND),
            (true, _) => None,
            (false, _) => Some(WAKE_BAND),
        };
        if let Some(b) = band {
            let (c, half) = centre(b);
            ledger.check(exp, OSEEN_EXPONENT, ctx, (f.exponent - c).abs(), half);
        }
    }
    out.bytes("rays.csv", rays_csv(&run.fits).as_bytes())?;
    out.json(RAYS_JSON, &run.fits)?;
    out.json(WAKE_MAP_JSON, &run.wake_map)?;
    out.json(REPORT_FILE, &OseenOutput { linear: &run.linear, oseen: rep })?;
    Ok(false)
}

fn nonlinear_entries(exp: Experiment, rep: &NonlinearReport, ledger: &mut Ledger) {
    let ctx = Context { r: rep.r, h: rep.h, k: rep.k, n_t: rep.n_t };
    let b = &rep.bilinear;
    let d = rep.data.total;
    ledger.record(exp, BILINEAR, ctx, b.lhs, b.u_proxy * b.w_proxy, true, b.constant.is_finite());
    ledger.record(exp, SOLUTION_BOUND, ctx, rep.solution_proxy, d, true, rep.solution_proxy <= rep.delta);
    ledger.record(exp, GATE, ctx, d, rep.gate_bound, true, rep.gate_ok);
    ledger.record(exp, CONTRACTION, ctx, rep.max_ratio, 1.0, true, rep.converged && rep.max_ratio < 1.0);
    ledger.check(exp, MOMENTUM, ctx, rep.momentum_residual, MOMENTUM_TOL);
}

fn uniqueness_entries(rep: &NonlinearReport, u: &UniquenessReport, ledger: &mut Ledger) {
    let exp = Experiment::Uniqueness;
    let ctx = Context { r: rep.r, h: rep.h, k: rep.k, n_t: rep.n_t };
    ledger.record(exp, SAME_LIMIT, ctx, u.limit_difference, LIMIT_FACTOR * u.tol, true, u.same_limit && u.converged);
    if u.terms.is_empty() {
        for r in PROBE_RADII {
            ledger.log(exp, ENERGY_TERMS, Context { r, ..ctx }, 0.0, 0.0);
        }
    } else {
        let first = u.terms[0].max_abs();
        for t in &u.terms {
            ledger.record(exp, ENERGY_TERMS, Context { r: t.r, ..ctx }, t.max_abs(), first, true, u.terms_decay);
        }
    }
    let mut prev = None;
    for &(r, v) in &u.i2_quadrature {
        ledger.record(exp, I2_QUADRATURE, Context { r, ..ctx }, v, prev.unwrap_or(v), true, u.quadrature_decreasing);
        prev = Some(v);
    }
}

#[derive(Serialize)]
struct NonlinearOutput<'a> {
    nonlinear: &'a NonlinearReport,
    uniqueness: Option<&'a UniquenessReport>,
}

fn nonlinear(m: &RunManifest, exp: Experiment, seed: u64, out: &mut Out, ledger: &mut Ledger) -> Result<bool> {
    let mut cfg = NonlinearConfig::new(m.linear_config(seed)?);
    cfg.tol = m.solver.tol;
    cfg.max_iter = m.solver.max_iter;
    let run: NonlinearRun = solve_nonlinear(&cfg)?;
    nonlinear_entries(exp, &run.report, ledger);
    let probe = if exp == Experiment::Uniqueness {
        let u = uniqueness_probe(&run, seed, cfg.max_iter)?;
        uniqueness_entries(&run.report, &u, ledger);
        Some(u)
    } else {
        None
    };
    out.bytes("convergence.csv", run.picard.convergence_csv().as_bytes())?;
    out.json(CONVERGENCE_JSON, &run.report.history)?;
    out.json(REPORT_FILE, &NonlinearOutput { nonlinear: &run.report, uniqueness: probe.as_ref() })?;
    dump(m, out, "field.bin", run.solution(), run.solver.lambda)?;
    Ok(false)
}
