//! Geometric-aggregation multigrid used as a CG preconditioner.
//!
//! Unknowns carry integer lattice coordinates; each level merges 2x2x2 blocks
//! of coordinates into one aggregate and forms the Galerkin coarse operator
//! with piecewise-constant prolongation. Smoothing is symmetric Gauss-Seidel,
//! so the V-cycle is a symmetric operator.

use crate::linalg::Csr;
use nalgebra::DMatrix;

const COARSE_LIMIT: usize = 400;

struct Level {
    a: Csr,
    diag: Vec<f64>,
    agg: Vec<usize>,
    n_coarse: usize,
}

pub struct Multigrid {
    levels: Vec<Level>,
    coarse_inv: DMatrix<f64>,
    coarse_a: Csr,
    singular: bool,
    /// Over-correction applied to the coarse-grid update.
    pub coarse_scale: f64,
}

impl Multigrid {
    /// `coords[i]` is the lattice position of unknown `i`. `singular` marks an
    /// operator whose kernel is the constant vector (pure Neumann problems).
    pub fn new(a: Csr, coords: &[[usize; 3]], singular: bool) -> Self {
        assert_eq!(a.n_rows, coords.len());
        let mut levels = Vec::new();
        let mut a = a;
        let mut coords: Vec<[usize; 3]> = coords.to_vec();
        while a.n_rows > COARSE_LIMIT {
            let mut keys: Vec<([usize; 3], usize)> = coords
                .iter()
                .enumerate()
                .map(|(i, c)| ([c[0] / 2, c[1] / 2, c[2] / 2], i))
                .collect();
            keys.sort_unstable();
            let mut agg = vec![0usize; a.n_rows];
            let mut next_coords = Vec::new();
            let mut last: Option<[usize; 3]> = None;
            for (k, i) in keys {
                if last != Some(k) {
                    next_coords.push(k);
                    last = Some(k);
                }
                agg[i] = next_coords.len() - 1;
            }
            let n_coarse = next_coords.len();
            if n_coarse as f64 > 0.9 * a.n_rows as f64 {
                break;
            }
            let mut t = Vec::with_capacity(a.nnz());
            for r in 0..a.n_rows {
                for p in a.row_ptr[r]..a.row_ptr[r + 1] {
                    t.push((agg[r], agg[a.col[p]], a.val[p]));
                }
            }
            let ac = Csr::from_triplets(n_coarse, n_coarse, t);
            let diag = a.diagonal();
            levels.push(Level { a, diag, agg, n_coarse });
            a = ac;
            coords = next_coords;
        }
        let mut dense = a.to_dense();
        let n = dense.nrows();
        if singular {
            let s = dense.diagonal().mean().abs().max(1e-300) / n as f64;
            dense.add_scalar_mut(s);
        }
        let coarse_inv = dense
            .clone()
            .cholesky()
            .map(|c| c.inverse())
            .unwrap_or_else(|| dense.pseudo_inverse(1e-12).expect("coarse operator"));
        Multigrid {
            levels,
            coarse_inv,
            coarse_a: a,
            singular,
            coarse_scale: 1.0,
        }
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len() + 1
    }

    pub fn size(&self) -> usize {
        self.levels.first().map(|l| l.a.n_rows).unwrap_or(self.coarse_a.n_rows)
    }

    /// One V-cycle with zero initial guess: `x ~ A^{-1} b`.
    pub fn vcycle(&self, b: &[f64], x: &mut [f64]) {
        self.cycle(0, b, x);
    }

    fn cycle(&self, l: usize, b: &[f64], x: &mut [f64]) {
        if l == self.levels.len() {
            let v = &self.coarse_inv * nalgebra::DVector::from_column_slice(b);
            x.copy_from_slice(v.as_slice());
            if self.singular {
                crate::linalg::remove_mean(x);
            }
            return;
        }
        let lev = &self.levels[l];
        x.iter_mut().for_each(|v| *v = 0.0);
        gs_forward(&lev.a, &lev.diag, b, x);
        let mut r = vec![0.0; b.len()];
        lev.a.matvec(x, &mut r);
        let mut rc = vec![0.0; lev.n_coarse];
        for i in 0..b.len() {
            rc[lev.agg[i]] += b[i] - r[i];
        }
        let mut ec = vec![0.0; lev.n_coarse];
        self.cycle(l + 1, &rc, &mut ec);
        for i in 0..b.len() {
            x[i] += self.coarse_scale * ec[lev.agg[i]];
        }
        gs_backward(&lev.a, &lev.diag, b, x);
    }
}

fn gs_forward(a: &Csr, diag: &[f64], b: &[f64], x: &mut [f64]) {
    for r in 0..a.n_rows {
        let mut s = b[r];
        for p in a.row_ptr[r]..a.row_ptr[r + 1] {
            let c = a.col[p];
            if c != r {
                s -= a.val[p] * x[c];
            }
        }
        x[r] = s / diag[r];
    }
}

fn gs_backward(a: &Csr, diag: &[f64], b: &[f64], x: &mut [f64]) {
    for r in (0..a.n_rows).rev() {
        let mut s = b[r];
        for p in a.row_ptr[r]..a.row_ptr[r + 1] {
            let c = a.col[p];
            if c != r {
                s -= a.val[p] * x[c];
            }
        }
        x[r] = s / diag[r];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pcg;

    fn poisson(n: usize, neumann: bool) -> (Csr, Vec<[usize; 3]>) {
        let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
        let mut t = Vec::new();
        let mut coords = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    coords.push([i, j, k]);
                    let me = idx(i, j, k);
                    let mut diag = 0.0;
                    for (di, dj, dk) in [(1i64, 0i64, 0i64), (0, 1, 0), (0, 0, 1)] {
                        for s in [-1i64, 1] {
                            let (a, b, c) = (i as i64 + s * di, j as i64 + s * dj, k as i64 + s * dk);
                            let inside = a >= 0 && b >= 0 && c >= 0 && a < n as i64 && b < n as i64 && c < n as i64;
                            if inside {
                                t.push((me, idx(a as usize, b as usize, c as usize), -1.0));
                                diag += 1.0;
                            } else if !neumann {
                                diag += 1.0;
                            }
                        }
                    }
                    t.push((me, me, diag));
                }
            }
        }
        (Csr::from_triplets(n * n * n, n * n * n, t), coords)
    }

    #[test]
    fn preconditioned_cg_converges_quickly() {
        for neumann in [false, true] {
            let (a, coords) = poisson(20, neumann);
            let mg = Multigrid::new(a.clone(), &coords, neumann);
            assert!(mg.n_levels() >= 2);
            let b: Vec<f64> = (0..a.n_rows).map(|i| ((i * 7919) % 101) as f64 - 50.0).collect();
            let mut x = vec![0.0; a.n_rows];
            let st = pcg(&|u, v| a.matvec(u, v), &|r, z| mg.vcycle(r, z), &b, &mut x, 1e-10, 200, neumann);
            assert!(st.converged, "{st:?}");
            assert!(st.iterations < 60, "{st:?}");
        }
    }
}
