//! Galerkin system `c' = -Lambda c + B(t) c + g(t)` for the perturbation
//! `v = u - u~` expanded in the Stokes basis.
//!
//! `B(t) = sum_b m_b(t) (T_b + s E_b)` where `m = (xi, omega)` componentwise,
//! `T_b` is the projection of `V_b . grad w - omega_b x w` and `E_b` of
//! `-(u~_b . grad w + w . grad u~_b)`; `s` is the extension coupling switch.
//! The load is `(f, w_j)` plus the extension source
//! `f_c = lap u~ - u~_t + V . grad u~ - omega x u~`.

use crate::error::{Error, Result};
use crate::fields::{advect, cross, laplacian, Adv};
use crate::stokes::extension::{motion_weights, unit_motion, ExtensionField};
use crate::stokes::StokesBasis;
use crate::time::TimeGrid;
use nalgebra::DMatrix;
use std::sync::Arc;

/// Whether the convective terms linearised about `u~` enter the operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ExtensionCoupling {
    On,
    Off,
}

impl ExtensionCoupling {
    pub fn factor(self) -> f64 {
        match self {
            ExtensionCoupling::On => 1.0,
            ExtensionCoupling::Off => 0.0,
        }
    }
}

/// Basis integrals independent of the data.
pub struct GalerkinOperators {
    pub basis: Arc<StokesBasis>,
    pub extension: Arc<ExtensionField>,
    pub coupling: ExtensionCoupling,
    pub transport: Vec<DMatrix<f64>>,
    pub ext_coupling: Vec<DMatrix<f64>>,
    /// `(lap u~_b, w_j)`.
    pub ext_lap: Vec<Vec<f64>>,
    /// `(u~_b, w_j)`.
    pub ext_mass: Vec<Vec<f64>>,
    /// `(V_b . grad u~_c - omega_b x u~_c, w_j)` at `[b * 6 + c]`.
    pub ext_quad: Vec<Vec<f64>>,
    /// Motion components that are not identically zero.
    pub active: [bool; 6],
    /// `max_b ||T_b + T_b^T|| / ||T_b||` over rotation components.
    pub rotation_antisymmetry: f64,
}

/// `(r, w_j)` for a full-grid face vector `r`.
pub fn project_full(basis: &StokesBasis, r: &[f64]) -> Vec<f64> {
    let a = basis.domain.gather(r);
    basis.coefficients(&a)
}

fn component_active(ext: &ExtensionField, b: usize) -> bool {
    // rotation into the canonical frame leaves rounding-level entries behind
    let scale = ext.motion.xi.max_coeff().max(ext.motion.omega.max_coeff());
    let path = if b < 3 { &ext.motion.xi } else { &ext.motion.omega };
    path.coeffs.iter().any(|c| c[b % 3].norm() > 1e-13 * scale)
}

impl GalerkinOperators {
    pub fn new(basis: Arc<StokesBasis>, extension: Arc<ExtensionField>, coupling: ExtensionCoupling) -> Result<Self> {
        let dom = &basis.domain;
        let g = dom.grid;
        if extension.grid != g {
            return Err(Error::Assembly("basis and extension live on different grids".into()));
        }
        let k = basis.k();
        let active: [bool; 6] = std::array::from_fn(|b| component_active(&extension, b));
        let mut transport = vec![DMatrix::zeros(k, k); 6];
        let mut ext_coupling = vec![DMatrix::zeros(k, k); 6];
        let ext_on = coupling == ExtensionCoupling::On;
        for i in 0..k {
            let wi = dom.scatter(&basis.fields[i]);
            for b in 0..6 {
                if !active[b] {
                    continue;
                }
                let (xi, om) = unit_motion(b);
                let mut r = advect(&g, Adv::Rigid { xi, omega: om }, &wi);
                if b >= 3 {
                    let c = cross(&g, om, &wi);
                    crate::linalg::axpy(-1.0, &c, &mut r);
                }
                let col = project_full(&basis, &r);
                for j in 0..k {
                    transport[b][(j, i)] = col[j];
                }
                if ext_on {
                    let ub = &extension.basis[b];
                    let mut e = advect(&g, Adv::Faces(ub), &wi);
                    let e2 = advect(&g, Adv::Faces(&wi), ub);
                    crate::linalg::axpy(1.0, &e2, &mut e);
                    let col = project_full(&basis, &e);
                    for j in 0..k {
                        ext_coupling[b][(j, i)] = -col[j];
                    }
                }
            }
        }
        let mut ext_lap = vec![vec![0.0; k]; 6];
        let mut ext_mass = vec![vec![0.0; k]; 6];
        let mut ext_quad = vec![vec![0.0; k]; 36];
        for c in 0..6 {
            if !active[c] {
                continue;
            }
            let uc = &extension.basis[c];
            ext_lap[c] = project_full(&basis, &laplacian(&g, uc));
            ext_mass[c] = project_full(&basis, uc);
            for b in 0..6 {
                if !active[b] {
                    continue;
                }
                let (xi, om) = unit_motion(b);
                let mut r = advect(&g, Adv::Rigid { xi, omega: om }, uc);
                if b >= 3 {
                    crate::linalg::axpy(-1.0, &cross(&g, om, uc), &mut r);
                }
                ext_quad[b * 6 + c] = project_full(&basis, &r);
            }
        }
        let mut rotation_antisymmetry: f64 = 0.0;
        for b in 3..6 {
            let m = transport[b].amax();
            if m > 0.0 {
                rotation_antisymmetry = rotation_antisymmetry.max((&transport[b] + transport[b].transpose()).amax() / m);
            }
        }
        Ok(GalerkinOperators {
            basis,
            extension,
            coupling,
            transport,
            ext_coupling,
            ext_lap,
            ext_mass,
            ext_quad,
            active,
            rotation_antisymmetry,
        })
    }

    pub fn k(&self) -> usize {
        self.basis.k()
    }

    /// `B(t)`.
    pub fn coupling_matrix(&self, t: f64) -> DMatrix<f64> {
        let k = self.k();
        let m = motion_weights(&self.extension.motion, t, 0);
        let s = self.coupling.factor();
        let mut out = DMatrix::zeros(k, k);
        for b in 0..6 {
            if self.active[b] && m[b] != 0.0 {
                out += &self.transport[b] * m[b];
                if s != 0.0 {
                    out += &self.ext_coupling[b] * (s * m[b]);
                }
            }
        }
        out
    }

    /// `(f_c(t), w_j)`.
    pub fn extension_load(&self, t: f64) -> Vec<f64> {
        let k = self.k();
        let m = motion_weights(&self.extension.motion, t, 0);
        let md = motion_weights(&self.extension.motion, t, 1);
        let mut out = vec![0.0; k];
        for c in 0..6 {
            if !self.active[c] {
                continue;
            }
            crate::linalg::axpy(m[c], &self.ext_lap[c], &mut out);
            crate::linalg::axpy(-md[c], &self.ext_mass[c], &mut out);
            for b in 0..6 {
                if self.active[b] {
                    crate::linalg::axpy(m[b] * m[c], &self.ext_quad[b * 6 + c], &mut out);
                }
            }
        }
        out
    }
}

/// Operators plus a load sampled on a time grid.
pub struct GalerkinSystem {
    pub ops: Arc<GalerkinOperators>,
    pub tgrid: TimeGrid,
    pub lambda: Vec<f64>,
    /// `g(t_n)`, extension source included.
    pub load: Vec<Vec<f64>>,
}

impl GalerkinSystem {
    /// `data_load[n]` is `(f(t_n), w_j)`; pass zeros for `f = 0`.
    pub fn new(ops: Arc<GalerkinOperators>, tgrid: TimeGrid, data_load: Vec<Vec<f64>>) -> Result<Self> {
        let k = ops.k();
        if data_load.len() != tgrid.n || data_load.iter().any(|g| g.len() != k) {
            return Err(Error::Assembly(format!("load must be {} x {k}", tgrid.n)));
        }
        if (tgrid.period - ops.extension.motion.period).abs() > 1e-12 * tgrid.period {
            return Err(Error::Assembly("time grid period differs from the motion period".into()));
        }
        let load = data_load
            .into_iter()
            .enumerate()
            .map(|(n, mut g)| {
                let e = ops.extension_load(tgrid.time(n));
                crate::linalg::axpy(1.0, &e, &mut g);
                g
            })
            .collect();
        let lambda = ops.basis.eigenvalues.clone();
        Ok(GalerkinSystem { ops, tgrid, lambda, load })
    }

    pub fn k(&self) -> usize {
        self.lambda.len()
    }

    pub fn coupling_matrix(&self, t: f64) -> DMatrix<f64> {
        self.ops.coupling_matrix(t)
    }

    /// `g(t)` by trigonometric interpolation of the samples.
    pub fn load_at(&self, t: f64) -> Vec<f64> {
        self.tgrid.interpolate(&self.load, t)
    }

    /// Right-hand side `-Lambda c + B(t) c + g(t)`.
    pub fn rhs(&self, t: f64, c: &[f64], with_load: bool) -> Vec<f64> {
        let b = self.coupling_matrix(t);
        let cv = nalgebra::DVector::from_column_slice(c);
        let mut out: Vec<f64> = (b * cv).iter().copied().collect();
        for j in 0..c.len() {
            out[j] -= self.lambda[j] * c[j];
        }
        if with_load {
            crate::linalg::axpy(1.0, &self.load_at(t), &mut out);
        }
        out
    }

    pub fn is_trivial(&self) -> bool {
        self.load.iter().all(|g| g.iter().all(|v| *v == 0.0))
    }
}

/// `(f(t_n), w_j)` for a forcing preset.
pub fn project_forcing(basis: &StokesBasis, forcing: &crate::forcing::Forcing, tgrid: &TimeGrid) -> Vec<Vec<f64>> {
    let g = basis.domain.grid;
    let proj: Vec<Vec<f64>> = forcing.profiles(&g).iter().map(|p| project_full(basis, p)).collect();
    (0..tgrid.n)
        .map(|n| {
            let t = tgrid.time(n);
            let mut out = vec![0.0; basis.k()];
            for (time, p) in forcing.series().zip(&proj) {
                crate::linalg::axpy(time.eval(t), p, &mut out);
            }
            out
        })
        .collect()
}
