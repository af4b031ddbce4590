//! Invading domains: the same periodic problem on `Omega_R` for growing `R`,
//! glued to the exterior with a radial cut-off and compared on a fixed window.

use crate::error::{Error, Result};
use crate::fields::divergence;
use crate::geometry::{make_cutoff, CutoffKind};
use crate::linear::estimates::{apply_uniformity_policy, grad_norm_full, lq_norm, EstimateEntry};
use crate::linear::{run_linear, ExtensionLayer, LinearConfig, LinearReport, LinearRun, PeriodicField};
use crate::mac::norm3;
use serde::Serialize;
use std::fmt::Write as _;

/// Ledger name of the solution-norm bound replayed per domain.
pub const U_PROXY_BOUND: &str = "invading_u_proxy";

#[derive(Clone, Debug)]
pub struct InvadingConfig {
    /// Shared settings; `r` is overridden per level.
    pub base: LinearConfig,
    pub radii: Vec<f64>,
    /// Radius of the comparison window, default the smallest `R`.
    pub window: Option<f64>,
    pub workers: usize,
}

/// Cut-off gluing of one level.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GlueReport {
    /// `max_n ||div_h (chi u)||_2`.
    pub defect: f64,
    /// `max_n ||u||_{L^2(R/2 < |x| < R)}`.
    pub annulus_l2: f64,
    /// `R * defect / annulus_l2`, to be compared with `max R |grad chi|`.
    pub defect_ratio: f64,
    pub chi_gradient_constant: f64,
    /// `max |chi u - u|` over faces with `|x| <= R/2`; zero by construction.
    pub interior_mismatch: f64,
    /// `max_n int |chi u|^2 / |x|^2 / ||grad (chi u)||^2`.
    pub hardy_ratio: f64,
}

pub struct InvadingLevel {
    pub run: LinearRun,
    pub glue: GlueReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepFailure {
    pub r: f64,
    pub message: String,
}

pub struct InvadingRun {
    pub levels: Vec<InvadingLevel>,
    /// `max_n ||u_{m+1} - u_m||_{L^2(window)}` for consecutive levels.
    pub window_differences: Vec<f64>,
    pub window: f64,
    /// Bound entries from every level, uniformity policy applied.
    pub ledger: Vec<EstimateEntry>,
    pub failure: Option<SweepFailure>,
}

impl InvadingRun {
    pub fn reports(&self) -> Vec<&LinearReport> {
        self.levels.iter().map(|l| &l.run.report).collect()
    }

    /// `m, R, window difference to the next level, one column per bound`.
    pub fn convergence_csv(&self) -> String {
        let mut names: Vec<String> = Vec::new();
        for e in &self.ledger {
            if !names.contains(&e.name) {
                names.push(e.name.clone());
            }
        }
        let mut out = String::from("m,r,window_difference");
        for n in &names {
            let _ = write!(out, ",{n}");
        }
        out.push('\n');
        for (m, lvl) in self.levels.iter().enumerate() {
            let r = lvl.run.report.r;
            let diff = self.window_differences.get(m).map(|d| format!("{d:.12e}")).unwrap_or_default();
            let _ = write!(out, "{m},{r},{diff}");
            for n in &names {
                let c = self.ledger.iter().find(|e| &e.name == n && e.r == r).map(|e| e.constant);
                let _ = write!(out, ",{}", c.map(|c| format!("{c:.12e}")).unwrap_or_default());
            }
            out.push('\n');
        }
        out
    }
}

/// `chi_R u` on the full face grid.
pub fn glue(field: &PeriodicField, n: usize) -> Vec<f64> {
    let dom = &field.basis.domain;
    let g = dom.grid;
    let chi = crate::geometry::CutoffProfile::new(CutoffKind::RadialChi, dom.r);
    let u = field.u_full(n);
    let mut out = vec![0.0; u.len()];
    for (f, slot) in out.iter_mut().enumerate() {
        if u[f] != 0.0 {
            let (d, c) = g.face_coords(f);
            *slot = chi.value(g.face_pos(d, c)) * u[f];
        }
    }
    out
}

pub fn glue_report(field: &PeriodicField) -> Result<GlueReport> {
    let dom = &field.basis.domain;
    let g = dom.grid;
    let r = dom.r;
    let chi = make_cutoff(CutoffKind::RadialChi, r, &g)?;
    let (c1, _) = chi.derivative_constants();
    let mut rep = GlueReport { chi_gradient_constant: c1, ..Default::default() };
    let dv = g.cell_volume();
    let face_r: Vec<f64> = (0..g.n_faces())
        .map(|f| {
            let (d, c) = g.face_coords(f);
            norm3(g.face_pos(d, c))
        })
        .collect();
    for n in 0..field.n_samples() {
        let u = field.u_full(n);
        let uh = glue(field, n);
        let div = divergence(&g, &uh);
        let defect = dom.fluid_cells.iter().map(|&c| div[c] * div[c]).sum::<f64>() * dv;
        rep.defect = rep.defect.max(defect.sqrt());
        let ann: f64 = dom
            .active_faces
            .iter()
            .filter(|&&f| face_r[f] > 0.5 * r && face_r[f] < r)
            .map(|&f| u[f] * u[f])
            .sum::<f64>()
            * dv;
        rep.annulus_l2 = rep.annulus_l2.max(ann.sqrt());
        for &f in &dom.active_faces {
            if face_r[f] <= 0.5 * r {
                rep.interior_mismatch = rep.interior_mismatch.max((uh[f] - u[f]).abs());
            }
        }
        let grad = grad_norm_full(dom, &uh);
        if grad > 0.0 {
            let w: f64 = dom.active_faces.iter().map(|&f| uh[f] * uh[f] / (face_r[f] * face_r[f])).sum::<f64>() * dv;
            rep.hardy_ratio = rep.hardy_ratio.max(w / (grad * grad));
        }
    }
    rep.defect_ratio = if rep.annulus_l2 > 0.0 { r * rep.defect / rep.annulus_l2 } else { 0.0 };
    Ok(rep)
}

/// `sup_t (||u||_6 + ||grad u||_2 + ||u_t||_2 + ||grad u_t||_2)` against the
/// data norm `||f||_{W^{1,2}L^2} + ||F||_{W^{1,2}L^2} + ||xi||_{W^{2,2}} + ||omega||_{W^{2,2}}`.
pub fn u_proxy_entry(run: &LinearRun) -> EstimateEntry {
    let field = &run.field;
    let dom = &field.basis.domain;
    let mut lhs: f64 = 0.0;
    for n in 0..field.n_samples() {
        let u = field.u_full(n);
        let ut = field.u_t_full(n);
        let ut_l2 = (crate::linalg::dot(&dom.gather(&ut), &dom.gather(&ut)) * dom.grid.cell_volume()).sqrt();
        let val = lq_norm(dom, &u, 6.0) + grad_norm_full(dom, &u) + ut_l2 + grad_norm_full(dom, &ut);
        lhs = lhs.max(val);
    }
    let d = &run.report.data;
    let rhs = d.f_w12l2 + d.calf_w12l2 + d.xi_w22 + d.omega_w22;
    let constant = if rhs > 0.0 {
        lhs / rhs
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    EstimateEntry {
        name: U_PROXY_BOUND.into(),
        r: dom.r,
        h: dom.grid.h,
        k: field.basis.k(),
        n_t: field.n_samples(),
        lhs,
        rhs,
        constant,
        bound: true,
        pass: constant.is_finite(),
    }
}

/// `max_n ||a(t_n) - b(t_n)||` over the active faces of `a` inside the window,
/// with `b` interpolated trilinearly onto those faces.
pub fn window_difference(a: &PeriodicField, b: &PeriodicField, window: f64) -> f64 {
    let da = &a.basis.domain;
    let ga = da.grid;
    let gb = b.basis.domain.grid;
    let faces: Vec<(usize, usize, [f64; 3])> = da
        .active_faces
        .iter()
        .filter_map(|&f| {
            let (d, c) = ga.face_coords(f);
            let x = ga.face_pos(d, c);
            (norm3(x) <= window).then_some((f, d, x))
        })
        .collect();
    let mut worst: f64 = 0.0;
    for n in 0..a.n_samples() {
        let ua = a.u_full(n);
        let ub = b.u_full(n);
        let s: f64 = faces
            .iter()
            .map(|&(f, d, x)| {
                let diff = ua[f] - gb.interp_face_component(&ub, d, x);
                diff * diff
            })
            .sum();
        worst = worst.max((s * ga.cell_volume()).sqrt());
    }
    worst
}

pub fn run_invading_sweep(cfg: &InvadingConfig) -> Result<InvadingRun> {
    let mut radii = cfg.radii.clone();
    if radii.len() < 3 {
        return Err(Error::Precondition(format!("need at least 3 radii, got {}", radii.len())));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Precondition("radii must increase strictly".into()));
    }
    let r1 = radii[0];
    let need = cfg.base.body.r_star().max(2.0 * cfg.base.rho);
    if r1 < need {
        return Err(Error::DomainTooSmall { r: r1, r_star: need });
    }
    let window = cfg.window.unwrap_or(r1);
    if !(window > 0.0 && window <= r1) {
        return Err(Error::Precondition(format!("window {window} outside (0, {r1}]")));
    }
    // The first level fixes the extension layer so that u~ is identical on
    // every domain.
    let first_cfg = LinearConfig { r: r1, ..cfg.base.clone() };
    let mut failure = None;
    let mut runs: Vec<LinearRun> = Vec::new();
    match run_linear(&first_cfg) {
        Ok(run) => runs.push(run),
        Err(e) => failure = Some(SweepFailure { r: r1, message: e.to_string() }),
    }
    if let Some(first) = runs.first() {
        let a = first.setup.extension.cutoff.a;
        let rest: Vec<f64> = radii.split_off(1);
        let results = crate::parallel::par_map(&rest, cfg.workers, |&r| {
            run_linear(&LinearConfig { r, layer: ExtensionLayer::Fixed { a }, ..cfg.base.clone() })
        });
        for (r, res) in rest.iter().zip(results) {
            match res {
                Ok(run) if failure.is_none() => runs.push(run),
                Ok(_) => {}
                Err(e) => {
                    if failure.is_none() {
                        failure = Some(SweepFailure { r: *r, message: e.to_string() });
                    }
                }
            }
        }
    }
    let mut levels = Vec::new();
    let mut ledger = Vec::new();
    for run in runs {
        let glue = glue_report(&run.field)?;
        ledger.extend(run.estimates.iter().cloned());
        ledger.push(u_proxy_entry(&run));
        levels.push(InvadingLevel { run, glue });
    }
    apply_uniformity_policy(&mut ledger);
    let window_differences =
        levels.windows(2).map(|w| window_difference(&w[0].run.field, &w[1].run.field, window)).collect();
    Ok(InvadingRun { levels, window_differences, window, ledger, failure })
}
