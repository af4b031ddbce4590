//! Discrete operators on the active faces of a truncated domain.

use crate::geometry::{TruncatedDomain, NONE};
use crate::linalg::{pcg, CgStats, Csr};
use crate::multigrid::Multigrid;
use std::sync::Arc;

/// Homogeneous face Laplacian (inactive neighbours count as zero), divergence
/// onto fluid cells and the pressure Poisson matrix `D D^T`.
pub struct Operators {
    pub domain: Arc<TruncatedDomain>,
    /// Discrete vector Laplacian on active faces (negative definite).
    pub lap: Csr,
    /// `-lap`, kept for the multigrid hierarchy.
    pub neg_lap: Csr,
    pub div: Csr,
    pub div_t: Csr,
    pub poisson: Csr,
}

const ORIENT_SHIFT: usize = 1 << 24;

impl Operators {
    pub fn new(domain: Arc<TruncatedDomain>) -> Self {
        let g = domain.grid;
        let h2 = 1.0 / (g.h * g.h);
        let na = domain.n_active();
        let mut t = Vec::with_capacity(7 * na);
        for (a, &f) in domain.active_faces.iter().enumerate() {
            let (d, c) = g.face_coords(f);
            t.push((a, a, -6.0 * h2));
            for e in 0..3 {
                for s in [-1isize, 1] {
                    if let Some(nb) = g.face_shift(d, c, e, s) {
                        let j = domain.face_to_active[g.face_index(d, nb)];
                        if j != NONE {
                            t.push((a, j as usize, h2));
                        }
                    }
                }
            }
        }
        let lap = Csr::from_triplets(na, na, t);
        let mut neg_lap = lap.clone();
        neg_lap.val.iter_mut().for_each(|v| *v = -*v);

        let inv_h = 1.0 / g.h;
        let nf = domain.n_fluid();
        let mut t = Vec::with_capacity(6 * nf);
        for (fi, &ci) in domain.fluid_cells.iter().enumerate() {
            let c = g.cell_coords(ci);
            for d in 0..3 {
                let lo = domain.face_to_active[g.face_index(d, c)];
                let mut hi_c = c;
                hi_c[d] += 1;
                let hi = domain.face_to_active[g.face_index(d, hi_c)];
                if lo != NONE {
                    t.push((fi, lo as usize, -inv_h));
                }
                if hi != NONE {
                    t.push((fi, hi as usize, inv_h));
                }
            }
        }
        let div = Csr::from_triplets(nf, na, t);
        let div_t = div.transpose();
        let poisson = div.matmul(&div_t);
        Operators { domain, lap, neg_lap, div, div_t, poisson }
    }

    /// Lattice coordinates for the face multigrid (orientation kept apart).
    pub fn face_coords(&self) -> Vec<[usize; 3]> {
        let g = self.domain.grid;
        self.domain
            .active_faces
            .iter()
            .map(|&f| {
                let (d, c) = g.face_coords(f);
                [c[0] + d * ORIENT_SHIFT, c[1], c[2]]
            })
            .collect()
    }

    pub fn cell_coords(&self) -> Vec<[usize; 3]> {
        let g = self.domain.grid;
        self.domain.fluid_cells.iter().map(|&c| g.cell_coords(c)).collect()
    }
}

/// Discrete Helmholtz-Weyl projector `P = I - D^T (D D^T)^+ D`.
pub struct LerayProjector {
    pub ops: Arc<Operators>,
    mg: Multigrid,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl LerayProjector {
    pub fn domain(&self) -> &TruncatedDomain {
        &self.ops.domain
    }

    pub fn n(&self) -> usize {
        self.ops.domain.n_active()
    }

    pub fn divergence(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ops.div.n_rows];
        self.ops.div.matvec(u, &mut out);
        out
    }

    /// Solves `D D^T phi = rhs` (mean-free) to the projector tolerance.
    pub fn poisson_solve(&self, rhs: &[f64], rel_tol: f64) -> (Vec<f64>, CgStats) {
        let a = &self.ops.poisson;
        let mut x = vec![0.0; rhs.len()];
        let st = pcg(
            &|u, v| a.matvec(u, v),
            &|r, z| self.mg.vcycle(r, z),
            rhs,
            &mut x,
            rel_tol,
            self.max_iter,
            true,
        );
        (x, st)
    }

    pub fn apply_with_stats(&self, u: &[f64]) -> (Vec<f64>, CgStats) {
        let du = self.divergence(u);
        let (phi, st) = self.poisson_solve(&du, self.rel_tol);
        let mut grad = vec![0.0; u.len()];
        self.ops.div_t.matvec(&phi, &mut grad);
        let out = u.iter().zip(&grad).map(|(a, b)| a - b).collect();
        (out, st)
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.apply_with_stats(u).0
    }

    /// Gradient part `(I - P) u`.
    pub fn gradient_part(&self, u: &[f64]) -> Vec<f64> {
        let pu = self.apply(u);
        u.iter().zip(&pu).map(|(a, b)| a - b).collect()
    }
}

/// Builds operators and the projector; fails if the domain has no fluid.
pub fn assemble_projector(domain: Arc<TruncatedDomain>) -> crate::error::Result<LerayProjector> {
    if domain.n_fluid() == 0 || domain.n_active() == 0 {
        return Err(crate::error::Error::Assembly("domain has no fluid faces".into()));
    }
    let ops = Arc::new(Operators::new(domain));
    let mut mg = Multigrid::new(ops.poisson.clone(), &ops.cell_coords(), true);
    mg.coarse_scale = 1.8;
    Ok(LerayProjector { ops, mg, rel_tol: 1e-12, max_iter: 500 })
}

/// Multigrid approximate inverse of `-lap`, used as eigen-preconditioner.
pub struct LaplacePreconditioner {
    mg: Multigrid,
}

impl LaplacePreconditioner {
    pub fn new(ops: &Operators) -> Self {
        let mut mg = Multigrid::new(ops.neg_lap.clone(), &ops.face_coords(), false);
        mg.coarse_scale = 1.3;
        LaplacePreconditioner { mg }
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.mg.vcycle(r, z)
    }
}
