//! Reflection-parity decomposition of the face and cell spaces.
//!
//! A centred sphere on a centred grid is invariant under the eight reflections
//! `x_e -> -x_e`. Velocity transforms as a vector (the reflected component
//! flips sign), pressure as a scalar. For a parity class `sigma in {+1,-1}^3`
//! the columns of `E` are the normalised class projections of orbit
//! representatives; `E^T A E` is then the exact restriction of any operator
//! commuting with the reflections.

use super::ops::Operators;
use crate::geometry::{TruncatedDomain, NONE};
use crate::linalg::{pcg, Csr};
use crate::multigrid::Multigrid;

pub const CLASSES: [[i8; 3]; 8] = [
    [1, 1, 1],
    [1, 1, -1],
    [1, -1, 1],
    [1, -1, -1],
    [-1, 1, 1],
    [-1, 1, -1],
    [-1, -1, 1],
    [-1, -1, -1],
];

fn character(sigma: [i8; 3], s: usize) -> f64 {
    let mut c = 1.0;
    for e in 0..3 {
        if s >> e & 1 == 1 {
            c *= sigma[e] as f64;
        }
    }
    c
}

/// Embedding of one parity class into the full active-face (or fluid-cell) space.
fn embedding(
    n_full: usize,
    image: &dyn Fn(usize, usize) -> (usize, f64),
    sigma: [i8; 3],
) -> (Csr, Vec<usize>) {
    let mut t = Vec::new();
    let mut reps = Vec::new();
    let mut seen = vec![false; n_full];
    for f in 0..n_full {
        if seen[f] {
            continue;
        }
        let mut coef: Vec<(usize, f64)> = Vec::with_capacity(8);
        for s in 0..8 {
            let (g, sign) = image(f, s);
            seen[g] = true;
            let w = character(sigma, s) * sign;
            match coef.iter_mut().find(|(i, _)| *i == g) {
                Some(slot) => slot.1 += w,
                None => coef.push((g, w)),
            }
        }
        let nrm = coef.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if nrm < 1e-9 {
            continue;
        }
        let col = reps.len();
        reps.push(f);
        for (g, w) in coef {
            if w != 0.0 {
                t.push((g, col, w / nrm));
            }
        }
    }
    (Csr::from_triplets(n_full, reps.len(), t), reps)
}

/// True if the mask is invariant under the three coordinate reflections.
pub fn reflection_symmetric(dom: &TruncatedDomain) -> bool {
    let g = dom.grid;
    let n = g.n;
    (0..g.n_cells()).all(|ci| {
        let c = g.cell_coords(ci);
        (0..3).all(|e| {
            let mut m = c;
            m[e] = n - 1 - c[e];
            dom.cells[g.cell_index(m)] == dom.cells[ci]
        })
    })
}

/// True if the mask is invariant under swapping any two axes.
pub fn permutation_symmetric(dom: &TruncatedDomain) -> bool {
    let g = dom.grid;
    (0..g.n_cells()).all(|ci| {
        let c = g.cell_coords(ci);
        [(0, 1), (0, 2), (1, 2)].iter().all(|&(a, b)| {
            let mut m = c;
            m.swap(a, b);
            dom.cells[g.cell_index(m)] == dom.cells[ci]
        })
    })
}

/// Active-face vector of the field `x -> M u(M x)` where `M` swaps axes `a`, `b`.
pub fn swap_axes(dom: &TruncatedDomain, v: &[f64], a: usize, b: usize) -> Vec<f64> {
    let g = dom.grid;
    let tau = |e: usize| if e == a { b } else if e == b { a } else { e };
    let mut out = vec![0.0; v.len()];
    for (i, &f) in dom.active_faces.iter().enumerate() {
        let (d, c) = g.face_coords(f);
        let mut tc = [0usize; 3];
        for e in 0..3 {
            tc[tau(e)] = c[e];
        }
        let j = dom.face_to_active[g.face_index(tau(d), tc)];
        out[j as usize] = v[i];
    }
    out
}

/// Operators restricted to one parity class.
pub struct ClassSpace {
    pub sigma: [i8; 3],
    pub e_u: Csr,
    pub e_u_t: Csr,
    pub neg_lap: Csr,
    pub div: Csr,
    pub div_t: Csr,
    pub poisson: Csr,
    singular: bool,
    mg_p: Multigrid,
    mg_l: Multigrid,
}

impl ClassSpace {
    pub fn new(ops: &Operators, sigma: [i8; 3]) -> Self {
        let dom = &ops.domain;
        let g = dom.grid;
        let n = g.n;
        let face_image = |a: usize, s: usize| -> (usize, f64) {
            let (d, mut c) = g.face_coords(dom.active_faces[a]);
            let mut sign = 1.0;
            for e in 0..3 {
                if s >> e & 1 == 1 {
                    if e == d {
                        c[e] = n - c[e];
                        sign = -sign;
                    } else {
                        c[e] = n - 1 - c[e];
                    }
                }
            }
            let j = dom.face_to_active[g.face_index(d, c)];
            debug_assert!(j != NONE, "mask is not reflection symmetric");
            (j as usize, sign)
        };
        let cell_image = |a: usize, s: usize| -> (usize, f64) {
            let mut c = g.cell_coords(dom.fluid_cells[a]);
            for e in 0..3 {
                if s >> e & 1 == 1 {
                    c[e] = n - 1 - c[e];
                }
            }
            (dom.cell_to_fluid[g.cell_index(c)] as usize, 1.0)
        };
        let (e_u, reps_u) = embedding(dom.n_active(), &face_image, sigma);
        let (e_p, reps_p) = embedding(dom.n_fluid(), &cell_image, sigma);
        let e_u_t = e_u.transpose();
        let e_p_t = e_p.transpose();
        let neg_lap = e_u_t.matmul(&ops.neg_lap.matmul(&e_u));
        let div = e_p_t.matmul(&ops.div.matmul(&e_u));
        let div_t = div.transpose();
        let poisson = div.matmul(&div_t);
        let singular = sigma == [1, 1, 1];
        let full_face_coords = ops.face_coords();
        let fc: Vec<[usize; 3]> = reps_u.iter().map(|&r| full_face_coords[r]).collect();
        let cc: Vec<[usize; 3]> = reps_p.iter().map(|&r| g.cell_coords(dom.fluid_cells[r])).collect();
        let mut mg_p = Multigrid::new(poisson.clone(), &cc, singular);
        mg_p.coarse_scale = 1.8;
        let mut mg_l = Multigrid::new(neg_lap.clone(), &fc, false);
        mg_l.coarse_scale = 1.3;
        ClassSpace { sigma, e_u, e_u_t, neg_lap, div, div_t, poisson, singular, mg_p, mg_l }
    }

    pub fn dim(&self) -> usize {
        self.e_u.n_cols
    }

    /// Dimension of the solenoidal subspace of this class.
    pub fn dim_h(&self) -> usize {
        let rank_d = self.div.n_rows - usize::from(self.singular);
        self.dim().saturating_sub(rank_d)
    }

    pub fn apply_a(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.neg_lap.matvec(x, &mut y);
        y
    }

    pub fn project(&self, u: &[f64]) -> Vec<f64> {
        if self.div.n_rows == 0 {
            return u.to_vec();
        }
        let mut du = vec![0.0; self.div.n_rows];
        self.div.matvec(u, &mut du);
        let mut phi = vec![0.0; du.len()];
        let p = &self.poisson;
        pcg(
            &|a, b| p.matvec(a, b),
            &|r, z| self.mg_p.vcycle(r, z),
            &du,
            &mut phi,
            1e-12,
            500,
            self.singular,
        );
        let mut grad = vec![0.0; u.len()];
        self.div_t.matvec(&phi, &mut grad);
        u.iter().zip(&grad).map(|(a, b)| a - b).collect()
    }

    pub fn precond(&self, r: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; r.len()];
        self.mg_l.vcycle(r, &mut z);
        z
    }

    /// Full active-face vector of a class vector.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.e_u.n_rows];
        self.e_u.matvec(x, &mut y);
        y
    }

    pub fn restrict(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.e_u.n_cols];
        self.e_u_t.matvec(y, &mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_truncated_domain, BodySpec};
    use std::sync::Arc;

    #[test]
    fn classes_partition_the_face_space() {
        let d = Arc::new(build_truncated_domain(BodySpec::sphere(1.0).unwrap(), 4.0, 0.5).unwrap());
        let ops = Operators::new(d.clone());
        let spaces: Vec<ClassSpace> = CLASSES.iter().map(|&s| ClassSpace::new(&ops, s)).collect();
        let total: usize = spaces.iter().map(|c| c.dim()).sum();
        assert_eq!(total, d.n_active());
        let total_h: usize = spaces.iter().map(|c| c.dim_h()).sum();
        assert_eq!(total_h, d.n_active() - (d.n_fluid() - 1));
        // Restriction commutes with the Laplacian.
        let x: Vec<f64> = (0..spaces[5].dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        let full = spaces[5].expand(&x);
        let mut ax = vec![0.0; full.len()];
        ops.neg_lap.matvec(&full, &mut ax);
        let back = spaces[5].expand(&spaces[5].restrict(&ax));
        let err: f64 = ax.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }
}
