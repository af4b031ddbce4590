//! Whole-space problem for `w = eta u + z`, `eta = 1 - chi` with `chi` the
//! radial cut-off at scale `R_bar` (so `eta = 0` inside `R_bar / 2` and
//! `eta = 1` outside `R_bar`), and `z` the least-energy corrector on the
//! shell with `div z = -div(eta u)`.
//!
//! From `u_t = lap u + V . grad u - omega x u - grad p + f` one gets
//! `w_t = lap w + V . grad w - omega x w - grad(eta p) + eta f + g` with
//! `g = p grad eta - [lap, eta] u - [V . grad, eta] u + (d_t - lap - V . grad + omega x) z`.
//! Every commutator is formed with the discrete operators (the face-averaged
//! `omega x` contributes one more), so `g` vanishes identically wherever
//! `eta` is locally constant.

use crate::error::{Error, Result};
use crate::fields::{advect, cross, divergence, laplacian, Adv};
use crate::forcing::Forcing;
use crate::geometry::{CutoffKind, CutoffProfile};
use crate::linalg::{axpy, norm};
use crate::linear::PeriodicField;
use crate::mac::{norm3, Grid};
use crate::stokes::assemble_projector;
use crate::stokes::bogovskii::Bogovskii;
use serde::Serialize;
use std::sync::Arc;

#[derive(Clone, Debug, Default, Serialize)]
pub struct TransferReport {
    pub r_bar: f64,
    pub r: f64,
    pub h: f64,
    /// `max_t ||div_h(eta u)||_2`.
    pub div_before: f64,
    /// `max_t ||div_h w||_2`.
    pub div_after: f64,
    pub bogovskii_residual: f64,
    pub bogovskii_c0: f64,
    /// `max |w - u|` on faces with `|x| >= R_bar + 3h/2`, beyond the shell.
    pub outer_mismatch: f64,
    /// `max |w|` on faces with `|x| <= R_bar / 2 - 3h/2`.
    pub inner_size: f64,
    /// Largest `|x|` of a face carrying `g != 0`.
    pub g_support_radius: f64,
    /// `sup_t ||g||_2`.
    pub g_sup_l2: f64,
    /// `||f||_{W^{1,2}(L^2)} + ||F||_{W^{1,2}(L^2)} + ||xi||_{W^{2,2}} + ||omega||_{W^{2,2}}`.
    pub data_bound: f64,
    pub g_ratio: f64,
    /// Period mean of `int (eta f + g)`.
    pub net_force: [f64; 3],
    /// `||w(0)||_2`.
    pub w0_l2: f64,
}

/// Whole-space data on the face grid of the truncated domain.
#[derive(Clone, Debug)]
pub struct WholeSpaceProblem {
    pub grid: Grid,
    pub r_bar: f64,
    pub period: f64,
    /// `eta f + g` per time sample, as `(face, value)` pairs.
    pub source: Vec<Vec<(usize, f64)>>,
    /// `w(0)` as `(face, value)` pairs.
    pub w0: Vec<(usize, f64)>,
    /// `w` on the full face grid per time sample.
    pub w: Vec<Vec<f64>>,
    pub report: TransferReport,
}

impl WholeSpaceProblem {
    pub fn n_t(&self) -> usize {
        self.source.len()
    }

    pub fn is_zero(&self) -> bool {
        self.source.iter().all(|s| s.is_empty()) && self.w0.is_empty()
    }
}

/// `grad_h(a p) - b grad_h p` at faces for cell fields `a p`, `p` and face
/// weights `b`; faces on the grid boundary get zero.
pub(crate) fn pressure_commutator(g: &Grid, eta_c: &[f64], eta_f: &[f64], p: &[f64]) -> Vec<f64> {
    let ih = 1.0 / g.h;
    (0..g.n_faces())
        .map(|f| {
            let (d, c) = g.face_coords(f);
            if c[d] == 0 || c[d] == g.n {
                return 0.0;
            }
            let hi = g.cell_index(c);
            let mut lo_c = c;
            lo_c[d] -= 1;
            let lo = g.cell_index(lo_c);
            let a = (eta_c[hi] * p[hi] - eta_c[lo] * p[lo]) * ih;
            let b = eta_f[f] * (p[hi] - p[lo]) * ih;
            a - b
        })
        .collect()
}

fn sparse(v: &[f64]) -> Vec<(usize, f64)> {
    v.iter().enumerate().filter(|(_, x)| **x != 0.0).map(|(i, x)| (i, *x)).collect()
}

/// `field` must carry recovered pressure; `forcing` is the body force the
/// field was solved with.
pub fn cutoff_transfer(field: &PeriodicField, forcing: &Forcing, r_bar: f64) -> Result<WholeSpaceProblem> {
    let dom = &field.basis.domain;
    let g = dom.grid;
    let h = g.h;
    let motion = &field.extension.motion;
    let r_star = dom.body.r_star();
    if !(r_bar > 2.0 * r_star) {
        return Err(Error::Geometry(format!("cut-off radius {r_bar} must exceed 2 R_* = {}", 2.0 * r_star)));
    }
    if dom.r < r_bar + 2.0 * h {
        return Err(Error::Geometry(format!(
            "domain radius {} leaves no room for the cut-off shell up to {}",
            dom.r,
            r_bar + 2.0 * h
        )));
    }
    let pressure = field
        .pressure
        .as_ref()
        .ok_or_else(|| Error::Precondition("the transfer needs the recovered pressure".into()))?;
    let nt = field.n_samples();
    let cut = CutoffProfile::new(CutoffKind::RadialChi, r_bar);
    let eta_f: Vec<f64> = (0..g.n_faces())
        .map(|f| {
            let (d, c) = g.face_coords(f);
            1.0 - cut.value(g.face_pos(d, c))
        })
        .collect();
    let eta_c: Vec<f64> = (0..g.n_cells()).map(|c| 1.0 - cut.value(g.cell_center(g.cell_coords(c)))).collect();
    let face_r: Vec<f64> = (0..g.n_faces())
        .map(|f| {
            let (d, c) = g.face_coords(f);
            norm3(g.face_pos(d, c))
        })
        .collect();

    let shell = Arc::new(dom.annulus_domain(0.5 * r_bar - h, r_bar + h)?);
    let shell_proj = assemble_projector(shell.clone())?;
    let bog = Bogovskii::new(&shell_proj);

    let mut rep = TransferReport { r_bar, r: dom.r, h, ..Default::default() };
    let mut us = Vec::with_capacity(nt);
    let mut zs = Vec::with_capacity(nt);
    for n in 0..nt {
        let u = field.u_full(n);
        let eu: Vec<f64> = u.iter().zip(&eta_f).map(|(a, b)| a * b).collect();
        let div_eu = divergence(&g, &eu);
        let data: Vec<f64> = shell.fluid_cells.iter().map(|&c| -div_eu[c]).collect();
        let dv = g.cell_volume();
        rep.div_before = rep.div_before.max(norm(&div_eu) * dv.sqrt());
        let sol = bog.solve(&data)?;
        rep.bogovskii_residual = rep.bogovskii_residual.max(sol.div_residual);
        rep.bogovskii_c0 = rep.bogovskii_c0.max(sol.c0);
        let z = shell.scatter(&sol.z);
        let mut w = eu;
        axpy(1.0, &z, &mut w);
        rep.div_after = rep.div_after.max(norm(&divergence(&g, &w)) * dv.sqrt());
        for f in 0..g.n_faces() {
            if face_r[f] >= r_bar + 1.5 * h {
                rep.outer_mismatch = rep.outer_mismatch.max((w[f] - u[f]).abs());
            } else if face_r[f] <= 0.5 * r_bar - 1.5 * h {
                rep.inner_size = rep.inner_size.max(w[f].abs());
            }
        }
        if n == 0 {
            rep.w0_l2 = norm(&w) * dv.sqrt();
        }
        us.push((u, w));
        zs.push(z);
    }
    let zts = field.tgrid.differentiate(&zs);
    let profiles = forcing.profiles(&g);
    let dv = g.cell_volume();
    let mut source = Vec::with_capacity(nt);
    let mut net = [0.0; 3];
    for n in 0..nt {
        let t = field.tgrid.time(n);
        let (u, _) = &us[n];
        let z = &zs[n];
        let adv = Adv::Rigid { xi: motion.xi_at(t), omega: motion.omega_at(t) };
        let om = motion.omega_at(t);
        let eu: Vec<f64> = u.iter().zip(&eta_f).map(|(a, b)| a * b).collect();
        let lap_eu = laplacian(&g, &eu);
        let lap_u = laplacian(&g, u);
        let adv_eu = advect(&g, adv, &eu);
        let adv_u = advect(&g, adv, u);
        let rot_eu = cross(&g, om, &eu);
        let rot_u = cross(&g, om, u);
        let mut p_cells = vec![0.0; g.n_cells()];
        for (i, &c) in dom.fluid_cells.iter().enumerate() {
            p_cells[c] = pressure[n][i];
        }
        let mut gv = pressure_commutator(&g, &eta_c, &eta_f, &p_cells);
        for f in 0..g.n_faces() {
            gv[f] += rot_eu[f] - eta_f[f] * rot_u[f];
            gv[f] -= lap_eu[f] - eta_f[f] * lap_u[f] + adv_eu[f] - eta_f[f] * adv_u[f];
        }
        // (d_t - lap - V . grad + omega x) z
        axpy(1.0, &zts[n], &mut gv);
        axpy(-1.0, &laplacian(&g, z), &mut gv);
        axpy(-1.0, &advect(&g, adv, z), &mut gv);
        axpy(1.0, &cross(&g, om, z), &mut gv);
        rep.g_sup_l2 = rep.g_sup_l2.max(norm(&gv) * dv.sqrt());
        for f in 0..g.n_faces() {
            if gv[f] != 0.0 {
                rep.g_support_radius = rep.g_support_radius.max(face_r[f]);
            }
        }
        let fv = forcing.sample(&g, &profiles, t, 0);
        let mut s = gv;
        for f in 0..g.n_faces() {
            s[f] += eta_f[f] * fv[f];
        }
        for (f, val) in s.iter().enumerate() {
            let (d, _) = g.face_coords(f);
            net[d] += val * dv / nt as f64;
        }
        source.push(sparse(&s));
    }
    let norms = forcing.norms(dom, motion, 64);
    rep.data_bound = norms.f_w12l2 + norms.calf_w12l2 + norms.xi_w22 + norms.omega_w22;
    rep.g_ratio = if rep.data_bound > 0.0 { rep.g_sup_l2 / rep.data_bound } else { 0.0 };
    rep.net_force = net;
    let w0 = sparse(&us[0].1);
    let w = us.into_iter().map(|(_, w)| w).collect();
    Ok(WholeSpaceProblem { grid: g, r_bar, period: field.tgrid.period, source, w0, w, report: rep })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BodySpec;
    use crate::linear::{run_linear, LinearRun};
    use crate::motion::RigidMotionSpec;
    use crate::presets::Preset;

    const R_BAR: f64 = 4.5;

    fn small(motion: RigidMotionSpec, forcing: Forcing) -> LinearRun {
        let mut cfg = Preset::Wake.linear_config(5.0, 0.25, 8, 8, 1.0);
        cfg.body = BodySpec::sphere(0.5).unwrap();
        cfg.rho = 1.5;
        cfg.motion = motion;
        cfg.forcing = forcing;
        run_linear(&cfg).unwrap()
    }

    #[test]
    fn zero_data_gives_zero_problem() {
        let run = small(RigidMotionSpec::at_rest(Preset::Wake.period()), Forcing::zero());
        let wp = cutoff_transfer(&run.field, &Forcing::zero(), R_BAR).unwrap();
        assert!(wp.is_zero());
        assert_eq!(wp.report.g_sup_l2, 0.0);
    }

    #[test]
    fn cutoff_identity_and_support() {
        let forcing = Preset::Wake.forcing(1.0);
        let run = small(Preset::Wake.motion(), forcing.clone());
        let field = &run.field;
        assert!(matches!(cutoff_transfer(field, &forcing, 3.5), Err(Error::Geometry(_))));
        let wp = cutoff_transfer(field, &forcing, R_BAR).unwrap();
        let rep = &wp.report;
        assert!(rep.div_before > 1e-4, "{rep:?}");
        assert!(rep.div_after < 1e-8 * rep.div_before.max(1.0), "{rep:?}");
        assert!(rep.outer_mismatch < 1e-12 && rep.inner_size == 0.0, "{rep:?}");
        assert!(rep.g_support_radius <= R_BAR + 2.0 * wp.grid.h, "{rep:?}");
        assert!(rep.g_sup_l2 > 0.0 && rep.g_ratio.is_finite());

        // L w + grad(eta p) - (eta f + g) must equal eta (L u + grad p - f) face by face.
        let g = wp.grid;
        let dom = &field.basis.domain;
        let cut = CutoffProfile::new(CutoffKind::RadialChi, R_BAR);
        let eta_f: Vec<f64> = (0..g.n_faces())
            .map(|f| {
                let (d, c) = g.face_coords(f);
                1.0 - cut.value(g.face_pos(d, c))
            })
            .collect();
        let eta_c: Vec<f64> = (0..g.n_cells()).map(|c| 1.0 - cut.value(g.cell_center(g.cell_coords(c)))).collect();
        let ones = vec![1.0; g.n_cells()];
        let zeros = vec![0.0; g.n_faces()];
        let us: Vec<Vec<f64>> = (0..field.n_samples()).map(|n| field.u_full(n)).collect();
        let ut = field.tgrid.differentiate(&us);
        let wt = field.tgrid.differentiate(&wp.w);
        let prof = forcing.profiles(&g);
        let motion = &field.extension.motion;
        let op = |v: &[f64], vt: &[f64], t: f64| {
            let adv = Adv::Rigid { xi: motion.xi_at(t), omega: motion.omega_at(t) };
            let mut out = vt.to_vec();
            axpy(-1.0, &laplacian(&g, v), &mut out);
            axpy(-1.0, &advect(&g, adv, v), &mut out);
            axpy(1.0, &cross(&g, motion.omega_at(t), v), &mut out);
            out
        };
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for n in 0..field.n_samples() {
            let t = field.tgrid.time(n);
            let mut p = vec![0.0; g.n_cells()];
            for (i, &c) in dom.fluid_cells.iter().enumerate() {
                p[c] = field.pressure.as_ref().unwrap()[n][i];
            }
            let f = forcing.sample(&g, &prof, t, 0);
            let mut src = vec![0.0; g.n_faces()];
            for &(i, v) in &wp.source[n] {
                src[i] = v;
            }
            let mut lhs = op(&wp.w[n], &wt[n], t);
            axpy(1.0, &pressure_commutator(&g, &eta_c, &zeros, &p), &mut lhs);
            axpy(-1.0, &src, &mut lhs);
            let mut rhs = op(&us[n], &ut[n], t);
            axpy(1.0, &pressure_commutator(&g, &ones, &zeros, &p), &mut rhs);
            axpy(-1.0, &f, &mut rhs);
            for i in 0..g.n_faces() {
                worst = worst.max((lhs[i] - eta_f[i] * rhs[i]).abs());
                scale = scale.max(src[i].abs());
            }
        }
        assert!(worst < 1e-9 * scale, "{worst} vs {scale}");
    }
}
