//! Reconstructed velocity `u = v + u~` and recovered pressure.

use super::solve::PeriodicSolution;
use super::system::{project_full, ExtensionCoupling, GalerkinSystem};
use crate::error::{Error, Result};
use crate::fields::{advect, cross, divergence, laplacian, Adv};
use crate::linalg::{axpy, norm};
use crate::stokes::extension::ExtensionField;
use crate::stokes::{LerayProjector, StokesBasis};
use crate::time::TimeGrid;
use std::sync::Arc;

#[derive(Clone)]
pub struct PeriodicField {
    pub basis: Arc<StokesBasis>,
    pub extension: Arc<ExtensionField>,
    pub coupling: ExtensionCoupling,
    pub tgrid: TimeGrid,
    /// `c(t_n)` and its first two spectral time derivatives.
    pub coeffs: Vec<Vec<f64>>,
    pub coeffs_t: Vec<Vec<f64>>,
    pub coeffs_tt: Vec<Vec<f64>>,
    /// Fluid-cell pressure samples, zero mean, once recovered.
    pub pressure: Option<Vec<Vec<f64>>>,
}

pub fn reconstruct_velocity(sys: &GalerkinSystem, sol: &PeriodicSolution) -> PeriodicField {
    let coeffs_t = sys.tgrid.differentiate(&sol.coeffs);
    let coeffs_tt = sys.tgrid.differentiate(&coeffs_t);
    PeriodicField {
        basis: sys.ops.basis.clone(),
        extension: sys.ops.extension.clone(),
        coupling: sys.ops.coupling,
        tgrid: sys.tgrid,
        coeffs: sol.coeffs.clone(),
        coeffs_t,
        coeffs_tt,
        pressure: None,
    }
}

/// Outcome of the pressure solve.
#[derive(Clone, Debug, PartialEq)]
pub struct PressureReport {
    /// `max_n ||r_n|| / scale_n` before removing the gradient.
    pub before: f64,
    /// `max_n` of the Galerkin-space residual after, same scaling.
    pub after: f64,
    /// `max_n ||P r_n|| / scale_n`, the part outside the basis span.
    pub truncation: f64,
}

impl PeriodicField {
    pub fn n_samples(&self) -> usize {
        self.tgrid.n
    }

    /// Active-face perturbation `v(t_n)`.
    pub fn v(&self, n: usize) -> Vec<f64> {
        self.basis.combine(&self.coeffs[n])
    }

    pub fn v_t(&self, n: usize) -> Vec<f64> {
        self.basis.combine(&self.coeffs_t[n])
    }

    pub fn v_tt(&self, n: usize) -> Vec<f64> {
        self.basis.combine(&self.coeffs_tt[n])
    }

    /// Full-grid `u(t_n) = v + u~`.
    pub fn u_full(&self, n: usize) -> Vec<f64> {
        let mut u = self.basis.domain.scatter(&self.v(n));
        axpy(1.0, &self.extension.at(self.tgrid.time(n)), &mut u);
        u
    }

    pub fn u_t_full(&self, n: usize) -> Vec<f64> {
        let mut u = self.basis.domain.scatter(&self.v_t(n));
        axpy(1.0, &self.extension.time_derivative(self.tgrid.time(n), 1), &mut u);
        u
    }

    /// `max_n max_cells |div_h u|` over fluid cells.
    pub fn div_residual(&self) -> f64 {
        let dom = &self.basis.domain;
        (0..self.n_samples())
            .map(|n| {
                let d = divergence(&dom.grid, &self.u_full(n));
                dom.fluid_cells.iter().map(|&c| d[c].abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|u - (xi + omega x x)|` over body faces and samples.
    pub fn trace_error(&self) -> f64 {
        (0..self.n_samples())
            .map(|n| self.extension.trace_error(&self.basis.domain, self.tgrid.time(n)))
            .fold(0.0, f64::max)
    }

    /// Momentum residual `-u_t + lap u + V . grad u - omega x u - s (u~ . grad v + v . grad u~) + f`
    /// on the active faces, with the sizes of its largest terms.
    pub fn momentum_residual(&self, n: usize, f_full: &[f64]) -> (Vec<f64>, f64) {
        let dom = &self.basis.domain;
        let g = dom.grid;
        let t = self.tgrid.time(n);
        let u = self.u_full(n);
        let ut = self.u_t_full(n);
        let xi = self.extension.motion.xi_at(t);
        let om = self.extension.motion.omega_at(t);
        let lap = laplacian(&g, &u);
        let adv = advect(&g, Adv::Rigid { xi, omega: om }, &u);
        let rot = cross(&g, om, &u);
        let mut r = f_full.to_vec();
        axpy(-1.0, &ut, &mut r);
        axpy(1.0, &lap, &mut r);
        axpy(1.0, &adv, &mut r);
        axpy(-1.0, &rot, &mut r);
        let s = self.coupling.factor();
        if s != 0.0 && !self.extension.is_zero() {
            let v = dom.scatter(&self.v(n));
            let ue = self.extension.at(t);
            axpy(-s, &advect(&g, Adv::Faces(&ue), &v), &mut r);
            axpy(-s, &advect(&g, Adv::Faces(&v), &ue), &mut r);
        }
        let scale = [norm(&dom.gather(&lap)), norm(&dom.gather(f_full)), norm(&dom.gather(&ut)), norm(&dom.gather(&adv))]
            .into_iter()
            .fold(0.0, f64::max);
        (dom.gather(&r), scale)
    }

    /// Solves for `grad p = (I - P) r` at every sample; `forcing(n)` is the
    /// full-grid body force at `t_n`.
    pub fn recover_pressure(&mut self, projector: &LerayProjector, forcing: &dyn Fn(usize) -> Vec<f64>) -> Result<PressureReport> {
        let dom = &self.basis.domain;
        if projector.n() != dom.n_active() {
            return Err(Error::PressureRecovery("projector and field live on different domains".into()));
        }
        let k = self.basis.k();
        let mut pressure = Vec::with_capacity(self.n_samples());
        let mut rep = PressureReport { before: 0.0, after: 0.0, truncation: 0.0 };
        for n in 0..self.n_samples() {
            let (r, scale) = self.momentum_residual(n, &forcing(n));
            let rn = norm(&r);
            if scale == 0.0 || rn == 0.0 {
                pressure.push(vec![0.0; dom.n_fluid()]);
                continue;
            }
            let dr = projector.divergence(&r);
            let (phi, st) = projector.poisson_solve(&dr, 1e-13);
            if !st.converged && st.rel_residual > 1e-9 {
                return Err(Error::PressureRecovery(format!("Neumann solve stalled at {:.3e}", st.rel_residual)));
            }
            let mut grad = vec![0.0; r.len()];
            projector.ops.div_t.matvec(&phi, &mut grad);
            let after: Vec<f64> = r.iter().zip(&grad).map(|(a, b)| a - b).collect();
            let coef = self.basis.coefficients(&after);
            let in_span = coef.iter().map(|c| c * c).sum::<f64>().sqrt() / self.basis.domain.grid.cell_volume().sqrt();
            let leftover_grad = norm(&projector.gradient_part(&after));
            let after_norm = (in_span * in_span + leftover_grad * leftover_grad).sqrt();
            rep.before = rep.before.max(rn / scale);
            rep.after = rep.after.max(after_norm / scale);
            rep.truncation = rep.truncation.max(norm(&after) / scale);
            debug_assert_eq!(coef.len(), k);
            pressure.push(phi.iter().map(|v| -v).collect());
        }
        self.pressure = Some(pressure);
        Ok(rep)
    }

    /// `(r, w_j)` of a full-grid vector.
    pub fn project(&self, r: &[f64]) -> Vec<f64> {
        project_full(&self.basis, r)
    }
}
