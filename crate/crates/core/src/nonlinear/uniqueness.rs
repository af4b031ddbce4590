//! Uniqueness probe: a second Picard run from a random start inside the
//! contraction ball, and the cut-off energy terms of the difference field.
//!
//! For a difference `d` with pressure `q`, testing the momentum equation with
//! `psi_R d` gives
//! `int_0^T ||sqrt(psi_R) grad d||^2 = I1 + I2 + I3`,
//! `I1 = -int grad psi_R . grad d . d`, `I2 = 1/2 int xi d_1 psi_R |d|^2`,
//! `I3 = int q grad psi_R . d`.

use super::norms::FieldSamples;
use super::solve::{fixed_point_residual, NonlinearRun};
use crate::error::{Error, Result};
use crate::geometry::{psi_axial_quadrature, CutoffKind, CutoffProfile, TruncatedDomain};
use crate::linear::PeriodicField;
use crate::time::TimeGrid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Cut-off scales at which the energy terms are evaluated.
pub const PROBE_RADII: [f64; 3] = [2.0, 4.0, 8.0];
/// Fraction of `delta` used for the perturbed start.
pub const START_FRACTION: f64 = 0.5;
/// Allowed distance between the two limits, in units of the tolerance.
pub const LIMIT_FACTOR: f64 = 10.0;
/// Radial nodes of the `I2` quadrature.
const QUADRATURE_NODES: usize = 400;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EnergyTerms {
    pub r: f64,
    pub lhs: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
}

impl EnergyTerms {
    /// Largest of `|I1|, |I2|, |I3|`; the left side tends to the full
    /// energy instead.
    pub fn max_abs(&self) -> f64 {
        self.i1.abs().max(self.i2.abs()).max(self.i3.abs())
    }
}

/// Cut-off used for the energy identity: axisymmetric about `e1` when the
/// body translates, purely radial otherwise.
pub fn probe_cutoff(xi_zero: bool, r: f64) -> CutoffProfile {
    let kind = if xi_zero { CutoffKind::UniquenessPsiRadial } else { CutoffKind::UniquenessPsi };
    CutoffProfile::new(kind, r)
}

/// Energy terms of a difference field; `xi1(t)` is the translation speed and
/// `q` the pressure difference on fluid cells.
pub fn energy_terms(
    dom: &TruncatedDomain,
    tgrid: &TimeGrid,
    d: &FieldSamples,
    q: Option<&[Vec<f64>]>,
    xi1: &dyn Fn(f64) -> f64,
    psi: &CutoffProfile,
) -> EnergyTerms {
    let g = dom.grid;
    let n = g.n;
    let dv = g.cell_volume();
    let mut fluid_idx = vec![usize::MAX; g.n_cells()];
    for (i, &c) in dom.fluid_cells.iter().enumerate() {
        fluid_idx[c] = i;
    }
    let (mut lhs, mut i1, mut i2, mut i3) = (vec![], vec![], vec![], vec![]);
    for s in 0..d.n_samples() {
        let t = tgrid.time(s);
        let mut cells = g.faces_to_cells(&d.u[s]);
        for (c, v) in cells.iter_mut().enumerate() {
            if fluid_idx[c] == usize::MAX {
                *v = [0.0; 3];
            }
        }
        let xs = xi1(t);
        let (mut a, mut b1, mut b2, mut b3) = (0.0, 0.0, 0.0, 0.0);
        for &c in &dom.fluid_cells {
            let cc = g.cell_coords(c);
            let x = g.cell_center(cc);
            let gp = psi.gradient(x);
            let pv = psi.value(x);
            if pv == 0.0 && gp == [0.0; 3] {
                continue;
            }
            // grad d[j][i] = d_j d_i by central differences, zero outside
            let mut grad = [[0.0; 3]; 3];
            for j in 0..3 {
                let mut lo = cc;
                let mut hi = cc;
                let vlo = if cc[j] > 0 {
                    lo[j] -= 1;
                    cells[g.cell_index(lo)]
                } else {
                    [0.0; 3]
                };
                let vhi = if cc[j] + 1 < n {
                    hi[j] += 1;
                    cells[g.cell_index(hi)]
                } else {
                    [0.0; 3]
                };
                for i in 0..3 {
                    grad[j][i] = (vhi[i] - vlo[i]) / (2.0 * g.h);
                }
            }
            let u = cells[c];
            let u2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
            a += pv * grad.iter().flatten().map(|v| v * v).sum::<f64>();
            b1 -= (0..3).map(|j| gp[j] * (0..3).map(|i| grad[j][i] * u[i]).sum::<f64>()).sum::<f64>();
            b2 += 0.5 * xs * gp[0] * u2;
            if let Some(q) = q {
                b3 += q[s][fluid_idx[c]] * (gp[0] * u[0] + gp[1] * u[1] + gp[2] * u[2]);
            }
        }
        lhs.push(a * dv);
        i1.push(b1 * dv);
        i2.push(b2 * dv);
        i3.push(b3 * dv);
    }
    EnergyTerms {
        r: psi.scale,
        lhs: tgrid.integrate(&lhs),
        i1: tgrid.integrate(&i1),
        i2: tgrid.integrate(&i2),
        i3: tgrid.integrate(&i3),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub seed: u64,
    /// Zero data: the probe is trivially satisfied.
    pub trivial: bool,
    pub delta: f64,
    pub start_proxy: f64,
    pub iterations: usize,
    pub converged: bool,
    pub limit_difference: f64,
    pub tol: f64,
    pub same_limit: bool,
    pub terms: Vec<EnergyTerms>,
    /// `int |d_1 psi_R| / |x|^2` over the whole space at each probe radius.
    pub i2_quadrature: Vec<(f64, f64)>,
    pub quadrature_decreasing: bool,
    /// Largest `|I_j|` at the last radius does not exceed the one at the first.
    pub terms_decay: bool,
    pub pass: bool,
}

/// Random perturbation in the span of the basis with `n_harm` harmonics,
/// plus the boundary extension, as a periodic field.
fn random_start(template: &PeriodicField, seed: u64, n_harm: usize) -> PeriodicField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = template.basis.k();
    let tg = template.tgrid;
    let w = 2.0 * std::f64::consts::PI / tg.period;
    let amps: Vec<Vec<(f64, f64)>> = (0..k)
        .map(|_| (0..=n_harm).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
        .collect();
    let coeffs: Vec<Vec<f64>> = (0..tg.n)
        .map(|i| {
            let t = tg.time(i);
            (0..k)
                .map(|j| {
                    let damp = 1.0 / (1.0 + template.basis.eigenvalues[j]);
                    amps[j].iter().enumerate().map(|(m, (a, b))| damp * (a * (m as f64 * w * t).cos() + b * (m as f64 * w * t).sin())).sum()
                })
                .collect()
        })
        .collect();
    let coeffs_t = tg.differentiate(&coeffs);
    let coeffs_tt = tg.differentiate(&coeffs_t);
    PeriodicField { coeffs, coeffs_t, coeffs_tt, pressure: None, ..template.clone() }
}

/// Re-runs the iteration from a random start at `START_FRACTION * delta`
/// from the extension, and evaluates the energy terms of the difference.
pub fn uniqueness_probe(run: &NonlinearRun, seed: u64, max_iter: usize) -> Result<UniquenessReport> {
    let solver = &run.solver;
    let rep = &run.report;
    let dom = &solver.setup.basis.domain;
    let tg = solver.setup.tgrid;
    let tol = rep.tol;
    let i2_quadrature: Vec<(f64, f64)> = PROBE_RADII
        .iter()
        .map(|&r| (r, psi_axial_quadrature(&CutoffProfile::new(CutoffKind::UniquenessPsi, r), QUADRATURE_NODES)))
        .collect();
    let quadrature_decreasing = i2_quadrature.windows(2).all(|w| w[1].1 < w[0].1);
    let mut out = UniquenessReport { seed, delta: rep.delta, tol, i2_quadrature, quadrature_decreasing, ..Default::default() };
    if rep.delta == 0.0 || solver.setup.basis.k() == 0 {
        out.trivial = true;
        out.same_limit = true;
        out.terms_decay = true;
        out.converged = true;
        out.pass = quadrature_decreasing;
        return Ok(out);
    }
    let base = run.solution();
    let pert = random_start(base, seed, 2);
    let ext_only = PeriodicField { coeffs: vec![vec![0.0; base.basis.k()]; tg.n], ..pert.clone() };
    let ext = FieldSamples::of(&ext_only);
    let unit = FieldSamples::of(&pert).sub(&ext);
    let scale = START_FRACTION * rep.delta / solver.proxy(&unit).total;
    let start = FieldSamples { u: ext.u.clone(), u_t: ext.u_t.clone() };
    let start = {
        let p = unit.scaled(scale);
        let mut s = start;
        for (a, b) in s.u.iter_mut().zip(&p.u) {
            crate::linalg::axpy(1.0, b, a);
        }
        for (a, b) in s.u_t.iter_mut().zip(&p.u_t) {
            crate::linalg::axpy(1.0, b, a);
        }
        s
    };
    out.start_proxy = solver.proxy(&start.sub(&ext)).total;
    let mut other = solver.iterate_from(Some(start), tol, max_iter)?;
    out.iterations = other.history.len();
    out.converged = other.converged;
    let d = other.samples.sub(&run.picard.samples);
    out.limit_difference = solver.proxy(&d).total;
    out.same_limit = out.limit_difference < LIMIT_FACTOR * tol;
    fixed_point_residual(solver, &mut other.solution)?;
    let q: Option<Vec<Vec<f64>>> = match (&other.solution.pressure, &base.pressure) {
        (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect()).collect()),
        _ => None,
    };
    let motion = &solver.data.motion;
    let xi_zero = motion.xi.is_zero();
    let xi1 = |t: f64| motion.xi_at(t)[0];
    out.terms = PROBE_RADII
        .iter()
        .map(|&r| energy_terms(dom, &tg, &d, q.as_deref(), &xi1, &probe_cutoff(xi_zero, r)))
        .collect();
    let first = out.terms.first().map(|t| t.max_abs()).unwrap_or(0.0);
    let last = out.terms.last().map(|t| t.max_abs()).unwrap_or(0.0);
    out.terms_decay = last <= first;
    out.pass = out.same_limit && out.converged && out.quadrature_decreasing && out.terms_decay;
    if !out.same_limit && out.converged {
        return Err(Error::Uniqueness(format!(
            "limits differ by {:.3e} (> {LIMIT_FACTOR} x tol = {:.1e}) from seed {seed}",
            out.limit_difference,
            LIMIT_FACTOR * tol
        )));
    }
    Ok(out)
}
