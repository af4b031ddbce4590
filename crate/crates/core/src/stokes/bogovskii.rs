//! Right inverse of the divergence on a shell.
//!
//! Among all face fields vanishing on both shell walls with `div_h z = f`, the
//! one with least Dirichlet energy. A particular solution `z0 = D^T (D D^T)^+ f`
//! is corrected inside `ker D` by projected conjugate gradients on `P L P`,
//! which keeps the divergence at the level of the pressure solve.

use super::ops::{LaplacePreconditioner, LerayProjector};
use crate::error::{Error, Result};
use crate::geometry::{annulus_mean_zero_check, Annulus};
use crate::linalg::{dot, norm, pcg, CgStats};

/// Relative mean tolerated in the data.
pub const MEAN_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct BogovskiiSolution {
    /// Active faces of the shell domain.
    pub z: Vec<f64>,
    /// `||div_h z - f|| / ||f||`.
    pub div_residual: f64,
    /// `||z||_{1,2} / ||f||_2`.
    pub c0: f64,
    pub stats: CgStats,
}

/// Solver bound to one shell domain.
pub struct Bogovskii<'a> {
    pub projector: &'a LerayProjector,
    precond: LaplacePreconditioner,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl<'a> Bogovskii<'a> {
    /// `projector` must be assembled on a shell domain, e.g. from
    /// [`crate::geometry::TruncatedDomain::annulus_domain`].
    pub fn new(projector: &'a LerayProjector) -> Self {
        let precond = LaplacePreconditioner::new(&projector.ops);
        Bogovskii { projector, precond, rel_tol: 1e-10, max_iter: 400 }
    }

    /// `||z||_{1,2}^2 = ||z||^2 + ||grad_h z||^2`.
    pub fn h1_norm(&self, z: &[f64]) -> f64 {
        let ops = &self.projector.ops;
        let mut lz = vec![0.0; z.len()];
        ops.neg_lap.matvec(z, &mut lz);
        let dv = ops.domain.grid.cell_volume();
        ((dot(z, z) + dot(z, &lz)) * dv).sqrt()
    }

    /// `f` is indexed by fluid cell of the shell domain.
    pub fn solve(&self, f: &[f64]) -> Result<BogovskiiSolution> {
        let p = self.projector;
        let dom = p.domain();
        if f.len() != dom.n_fluid() {
            return Err(Error::Precondition(format!("data has {} cells, shell has {}", f.len(), dom.n_fluid())));
        }
        let fnorm = norm(f);
        let n = dom.n_active();
        if fnorm == 0.0 {
            return Ok(BogovskiiSolution {
                z: vec![0.0; n],
                div_residual: 0.0,
                c0: 0.0,
                stats: CgStats { iterations: 0, rel_residual: 0.0, converged: true },
            });
        }
        let mean = f.iter().sum::<f64>().abs() / (fnorm * (f.len() as f64).sqrt());
        if mean > MEAN_TOL {
            return Err(Error::Precondition(format!("data mean {mean:.3e} is not zero")));
        }
        let (phi, st) = p.poisson_solve(f, 1e-13);
        if !st.converged && st.rel_residual > 1e-10 {
            return Err(Error::Solver(format!("shell pressure solve stalled at {:.3e}", st.rel_residual)));
        }
        let mut z0 = vec![0.0; n];
        p.ops.div_t.matvec(&phi, &mut z0);
        // P L P y = -P L z0 on ker D.
        let mut lz0 = vec![0.0; n];
        p.ops.neg_lap.matvec(&z0, &mut lz0);
        let rhs: Vec<f64> = p.apply(&lz0).iter().map(|v| -v).collect();
        let apply = |x: &[f64], y: &mut [f64]| {
            let px = p.apply(x);
            let mut t = vec![0.0; n];
            p.ops.neg_lap.matvec(&px, &mut t);
            y.copy_from_slice(&p.apply(&t));
        };
        let pre = |r: &[f64], z: &mut [f64]| {
            let pr = p.apply(r);
            let mut t = vec![0.0; n];
            self.precond.apply(&pr, &mut t);
            z.copy_from_slice(&p.apply(&t));
        };
        let mut y = vec![0.0; n];
        let stats = pcg(&apply, &pre, &rhs, &mut y, self.rel_tol, self.max_iter, false);
        if !stats.converged && stats.rel_residual > 1e3 * self.rel_tol {
            return Err(Error::Solver(format!(
                "least-energy correction stalled at {:.3e} after {} iterations",
                stats.rel_residual, stats.iterations
            )));
        }
        let y = p.apply(&y);
        let z: Vec<f64> = z0.iter().zip(&y).map(|(a, b)| a + b).collect();
        let dz = p.divergence(&z);
        let div_residual = norm(&dz.iter().zip(f).map(|(a, b)| a - b).collect::<Vec<_>>()) / fnorm;
        let dv = dom.grid.cell_volume();
        let c0 = self.h1_norm(&z) / (fnorm * dv.sqrt());
        Ok(BogovskiiSolution { z, div_residual, c0, stats })
    }

    /// `f` indexed by grid cell and supported on `annulus`; the shell domain
    /// must be the one built from the same annulus.
    pub fn solve_on_cells(&self, annulus: &Annulus, f_cells: &[f64]) -> Result<BogovskiiSolution> {
        let dom = self.projector.domain();
        annulus_mean_zero_check(&dom.grid, annulus, f_cells)?;
        let f: Vec<f64> = dom.fluid_cells.iter().map(|&c| f_cells[c]).collect();
        self.solve(&f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_truncated_domain, BodySpec};
    use crate::stokes::assemble_projector;
    use std::sync::Arc;

    fn shell(h: f64) -> LerayProjector {
        let d = build_truncated_domain(BodySpec::sphere(1.0).unwrap(), 4.0, h).unwrap();
        let a = Arc::new(d.annulus_domain(2.0, 4.0).unwrap());
        assemble_projector(a).unwrap()
    }

    /// `f = div w` for a smooth `w` vanishing near both walls.
    fn data(p: &LerayProjector) -> Vec<f64> {
        let dom = p.domain();
        let g = dom.grid;
        let bump = |x: [f64; 3]| {
            let r = crate::mac::norm3(x);
            let s = ((r - 2.0) / 2.0).clamp(0.0, 1.0);
            (std::f64::consts::PI * s).sin().powi(4)
        };
        let full = g.sample_faces(|x| {
            let b = bump(x);
            [b * (1.0 + x[1]), b * x[0] * 0.5, -b * x[2] * x[0] * 0.2]
        });
        let w = dom.gather(&full);
        p.divergence(&w)
    }

    #[test]
    fn zero_data_gives_zero() {
        let p = shell(0.5);
        let b = Bogovskii::new(&p);
        let s = b.solve(&vec![0.0; p.domain().n_fluid()]).unwrap();
        assert!(s.z.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn nonzero_mean_is_rejected() {
        let p = shell(0.5);
        let b = Bogovskii::new(&p);
        assert!(matches!(b.solve(&vec![1.0; p.domain().n_fluid()]), Err(Error::Precondition(_))));
    }

    #[test]
    fn divergence_matches_and_constant_is_stable() {
        let mut c = Vec::new();
        for h in [0.5, 0.25] {
            let p = shell(h);
            let b = Bogovskii::new(&p);
            let f = data(&p);
            let s = b.solve(&f).unwrap();
            assert!(s.div_residual < 1e-8, "{}", s.div_residual);
            c.push(s.c0);
        }
        assert!((c[1] / c[0] - 1.0).abs() < 0.2, "{c:?}");
    }
}
