//! Proxy norms for the solution class, the data norm and the measured
//! bilinear constant.
//!
//! All spatial quantities are evaluated on the truncated domain; the weighted
//! sup uses the wake weight `(1 + |x|)(1 + 2 lambda s(x))` at cell centres.

use crate::fields::{advect, laplacian, Adv};
use crate::forcing::Forcing;
use crate::geometry::TruncatedDomain;
use crate::linalg::dot;
use crate::linear::estimates::{grad_norm_full, lq_norm};
use crate::linear::pipeline::DATA_SAMPLES;
use crate::linear::PeriodicField;
use crate::motion::RigidMotionSpec;
use crate::oseen::wake::WakeWeight;
use crate::time::TimeGrid;
use serde::Serialize;

/// Full-grid samples `u(t_n)` and `u_t(t_n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSamples {
    pub u: Vec<Vec<f64>>,
    pub u_t: Vec<Vec<f64>>,
}

impl FieldSamples {
    pub fn of(field: &PeriodicField) -> Self {
        let n = field.n_samples();
        FieldSamples { u: (0..n).map(|i| field.u_full(i)).collect(), u_t: (0..n).map(|i| field.u_t_full(i)).collect() }
    }

    pub fn zero(n_faces: usize, n_t: usize) -> Self {
        FieldSamples { u: vec![vec![0.0; n_faces]; n_t], u_t: vec![vec![0.0; n_faces]; n_t] }
    }

    pub fn n_samples(&self) -> usize {
        self.u.len()
    }

    pub fn is_zero(&self) -> bool {
        self.u.iter().chain(&self.u_t).all(|s| s.iter().all(|v| *v == 0.0))
    }

    pub fn sub(&self, other: &FieldSamples) -> FieldSamples {
        let d = |a: &Vec<Vec<f64>>, b: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect()).collect()
        };
        FieldSamples { u: d(&self.u, &other.u), u_t: d(&self.u_t, &other.u_t) }
    }

    pub fn scaled(&self, a: f64) -> FieldSamples {
        let s = |x: &Vec<Vec<f64>>| -> Vec<Vec<f64>> { x.iter().map(|v| v.iter().map(|p| a * p).collect()).collect() };
        FieldSamples { u: s(&self.u), u_t: s(&self.u_t) }
    }
}

/// Proxy for `||u||_U + [u]_{inf,1,lambda}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ProxyNorm {
    /// `sup_t (||u||_6 + ||grad u||_2 + ||u_t||_2 + ||grad u_t||_2)`.
    pub energy: f64,
    /// `||lap u||_{L2(L2)}`, standing in for the second derivatives.
    pub second: f64,
    /// `sup_t sup_x (1 + |x|)(1 + 2 lambda s) |u|`.
    pub weighted: f64,
    pub total: f64,
}

fn l2_active(dom: &TruncatedDomain, full: &[f64]) -> f64 {
    let a = dom.gather(full);
    (dot(&a, &a) * dom.grid.cell_volume()).sqrt()
}

/// `sup weight(x)^m |u(x)|` over fluid cells, with the maximising cell.
pub fn weighted_sup(dom: &TruncatedDomain, full: &[f64], lambda: f64, m: i32) -> (f64, usize) {
    let g = dom.grid;
    let cells = g.faces_to_cells(full);
    let w = WakeWeight::new(lambda);
    let mut best = (0.0, dom.fluid_cells.first().copied().unwrap_or(0));
    for &c in &dom.fluid_cells {
        let x = g.cell_center(g.cell_coords(c));
        let v = w.weight(x, m) * crate::mac::norm3(cells[c]);
        if v > best.0 {
            best = (v, c);
        }
    }
    best
}

pub fn proxy_norm(dom: &TruncatedDomain, tgrid: &TimeGrid, s: &FieldSamples, lambda: f64) -> ProxyNorm {
    let g = dom.grid;
    let mut energy: f64 = 0.0;
    let mut weighted: f64 = 0.0;
    let mut lap_sq = Vec::with_capacity(s.n_samples());
    for (u, ut) in s.u.iter().zip(&s.u_t) {
        let e = lq_norm(dom, u, 6.0) + grad_norm_full(dom, u) + l2_active(dom, ut) + grad_norm_full(dom, ut);
        energy = energy.max(e);
        weighted = weighted.max(weighted_sup(dom, u, lambda, 1).0);
        lap_sq.push(l2_active(dom, &laplacian(&g, u)).powi(2));
    }
    let second = tgrid.integrate(&lap_sq).sqrt();
    ProxyNorm { energy, second, weighted, total: energy + second + weighted }
}

/// `(B, xi, omega)` for the nonlinear problem; `b = div B`.
#[derive(Clone, Debug, PartialEq)]
pub struct DataBundle {
    pub forcing: Forcing,
    pub motion: RigidMotionSpec,
}

/// Components of the data norm.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct DataNorm {
    /// `||div B||_{W^{1,2}(L2)}`.
    pub div_w12l2: f64,
    /// `||B||_{W^{1,2}(L2)}`.
    pub tensor_w12l2: f64,
    /// `[B]_{inf,2,lambda}`.
    pub tensor_weighted: f64,
    pub xi_w22: f64,
    pub omega_w22: f64,
    pub total: f64,
}

impl DataBundle {
    pub fn norm(&self, dom: &TruncatedDomain) -> DataNorm {
        let d = self.forcing.norms(dom, &self.motion, DATA_SAMPLES);
        let tensor_weighted = self.tensor_weighted(dom, DATA_SAMPLES);
        let total = d.f_w12l2 + d.calf_w12l2 + tensor_weighted + d.xi_w22 + d.omega_w22;
        DataNorm {
            div_w12l2: d.f_w12l2,
            tensor_w12l2: d.calf_w12l2,
            tensor_weighted,
            xi_w22: d.xi_w22,
            omega_w22: d.omega_w22,
            total,
        }
    }

    /// `sup_t sup_x weight(x)^2 |B(x, t)|` over fluid cells and `samples` times.
    pub fn tensor_weighted(&self, dom: &TruncatedDomain, samples: usize) -> f64 {
        if self.forcing.is_zero() {
            return 0.0;
        }
        let g = dom.grid;
        let w = WakeWeight::new(self.motion.lambda);
        let dt = self.motion.period / samples as f64;
        let mut best: f64 = 0.0;
        for &c in &dom.fluid_cells {
            let x = g.cell_center(g.cell_coords(c));
            let wx = w.weight(x, 2);
            for s in 0..samples {
                let b = self.forcing.tensor_at(x, s as f64 * dt);
                let f = b.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
                best = best.max(wx * f);
            }
        }
        best
    }
}

/// Measured constant of the bilinear estimate for one pair of fields.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct BilinearReport {
    /// `||u . grad w||_{W^{1,2}(L2)}`.
    pub div_term: f64,
    /// `||u (x) w||_{W^{1,2}(L2)}`.
    pub tensor_term: f64,
    /// `[u (x) w]_{inf,2,lambda}`.
    pub weighted_term: f64,
    pub lhs: f64,
    pub u_proxy: f64,
    pub w_proxy: f64,
    /// `lhs / (|u| |w|)`, zero when either field vanishes.
    pub constant: f64,
    /// `[u]_{inf,1,lambda} [w]_{inf,1,lambda}`.
    pub weighted_product: f64,
    /// Value of the product weight at the cell where the weighted term peaks.
    pub weighted_at_argmax: f64,
}

fn outer_frobenius(a: [f64; 3], b: [f64; 3]) -> f64 {
    crate::mac::norm3(a) * crate::mac::norm3(b)
}

pub fn bilinear_bound(dom: &TruncatedDomain, tgrid: &TimeGrid, u: &FieldSamples, w: &FieldSamples, lambda: f64) -> BilinearReport {
    let g = dom.grid;
    let dv = g.cell_volume();
    let weight = WakeWeight::new(lambda);
    let n = u.n_samples();
    let (mut div0, mut div1, mut ten0, mut ten1) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut weighted_term: f64 = 0.0;
    let mut weighted_at_argmax = 0.0;
    for i in 0..n {
        let a = advect(&g, Adv::Faces(&u.u[i]), &w.u[i]);
        let mut at = advect(&g, Adv::Faces(&u.u_t[i]), &w.u[i]);
        crate::linalg::axpy(1.0, &advect(&g, Adv::Faces(&u.u[i]), &w.u_t[i]), &mut at);
        div0[i] = l2_active(dom, &a).powi(2);
        div1[i] = l2_active(dom, &at).powi(2);
        let (uc, wc) = (g.faces_to_cells(&u.u[i]), g.faces_to_cells(&w.u[i]));
        let (utc, wtc) = (g.faces_to_cells(&u.u_t[i]), g.faces_to_cells(&w.u_t[i]));
        let (mut s0, mut s1) = (0.0, 0.0);
        for &c in &dom.fluid_cells {
            let p = outer_frobenius(uc[c], wc[c]);
            s0 += p * p;
            // |u_t (x) w + u (x) w_t|_F entrywise
            let mut q = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    let e = utc[c][a] * wc[c][b] + uc[c][a] * wtc[c][b];
                    q += e * e;
                }
            }
            s1 += q;
            let x = g.cell_center(g.cell_coords(c));
            let v = weight.weight(x, 2) * p;
            if v > weighted_term {
                weighted_term = v;
                weighted_at_argmax =
                    weight.weight(x, 1) * crate::mac::norm3(uc[c]) * weight.weight(x, 1) * crate::mac::norm3(wc[c]);
            }
        }
        ten0[i] = s0 * dv;
        ten1[i] = s1 * dv;
    }
    let w12 = |a: &[f64], b: &[f64]| (tgrid.integrate(a) + tgrid.integrate(b)).sqrt();
    let div_term = w12(&div0, &div1);
    let tensor_term = w12(&ten0, &ten1);
    let lhs = div_term + tensor_term + weighted_term;
    let pu = proxy_norm(dom, tgrid, u, lambda);
    let pw = if u == w { pu } else { proxy_norm(dom, tgrid, w, lambda) };
    let denom = pu.total * pw.total;
    BilinearReport {
        div_term,
        tensor_term,
        weighted_term,
        lhs,
        u_proxy: pu.total,
        w_proxy: pw.total,
        constant: if denom > 0.0 { lhs / denom } else { 0.0 },
        weighted_product: pu.weighted * pw.weighted,
        weighted_at_argmax,
    }
}
