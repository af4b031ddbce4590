//! Stokes eigenpairs `P lap w = -lambda w` by preconditioned block iteration
//! (LOBPCG) on the discretely solenoidal subspace.

use super::ops::{LaplacePreconditioner, LerayProjector};
use super::symmetry::{permutation_symmetric, reflection_symmetric, swap_axes, ClassSpace, CLASSES};
use crate::error::{Error, Result};
use crate::geometry::TruncatedDomain;
use crate::linalg::{dot, norm, sym_eigen_sorted};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

#[derive(Clone, Debug)]
pub struct StokesBasis {
    pub domain: Arc<TruncatedDomain>,
    pub eigenvalues: Vec<f64>,
    /// Active-face vectors, unit `L^2` norm (`sum w^2 h^3 = 1`).
    pub fields: Vec<Vec<f64>>,
    /// `||P lap w + lambda w||_2 / lambda` per pair.
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

impl StokesBasis {
    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn h(&self) -> f64 {
        self.domain.grid.h
    }

    /// `L^2` inner product of two active-face vectors.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        dot(a, b) * self.domain.grid.cell_volume()
    }

    /// Coefficients `c_j = (u, w_j)`.
    pub fn coefficients(&self, u: &[f64]) -> Vec<f64> {
        self.fields.iter().map(|w| self.inner(u, w)).collect()
    }

    pub fn combine(&self, c: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.domain.n_active()];
        for (cj, w) in c.iter().zip(&self.fields) {
            if *cj != 0.0 {
                crate::linalg::axpy(*cj, w, &mut out);
            }
        }
        out
    }

    /// Keeps the first `k` pairs.
    pub fn truncate(&self, k: usize) -> StokesBasis {
        let k = k.min(self.k());
        StokesBasis {
            domain: self.domain.clone(),
            eigenvalues: self.eigenvalues[..k].to_vec(),
            fields: self.fields[..k].to_vec(),
            residuals: self.residuals[..k].to_vec(),
            iterations: self.iterations,
        }
    }

    pub fn gram_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.k() {
            for j in 0..self.k() {
                let g = self.inner(&self.fields[i], &self.fields[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub extra: usize,
    pub seed: u64,
    /// Split into reflection-parity classes when the grid allows it.
    pub use_symmetry: bool,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { tol: 1e-8, max_iter: 400, extra: 3, seed: 0x5eed, use_symmetry: true }
    }
}

type Block = Vec<Vec<f64>>;

/// A subspace on which the eigen-iteration runs.
pub trait EigenSpace {
    fn dim(&self) -> usize;
    fn dim_h(&self) -> usize;
    /// `-lap x`.
    fn apply_a(&self, x: &[f64]) -> Vec<f64>;
    fn project(&self, x: &[f64]) -> Vec<f64>;
    fn precond(&self, r: &[f64]) -> Vec<f64>;
}

impl EigenSpace for ClassSpace {
    fn dim(&self) -> usize {
        ClassSpace::dim(self)
    }
    fn dim_h(&self) -> usize {
        ClassSpace::dim_h(self)
    }
    fn apply_a(&self, x: &[f64]) -> Vec<f64> {
        ClassSpace::apply_a(self, x)
    }
    fn project(&self, x: &[f64]) -> Vec<f64> {
        ClassSpace::project(self, x)
    }
    fn precond(&self, r: &[f64]) -> Vec<f64> {
        ClassSpace::precond(self, r)
    }
}

struct FullSpace<'a> {
    projector: &'a LerayProjector,
    prec: LaplacePreconditioner,
}

impl EigenSpace for FullSpace<'_> {
    fn dim(&self) -> usize {
        self.projector.n()
    }
    fn dim_h(&self) -> usize {
        let d = self.projector.domain();
        d.n_active().saturating_sub(d.n_fluid().saturating_sub(1))
    }
    fn apply_a(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.projector.ops.neg_lap.matvec(x, &mut y);
        y
    }
    fn project(&self, x: &[f64]) -> Vec<f64> {
        self.projector.apply(x)
    }
    fn precond(&self, r: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; r.len()];
        self.prec.apply(r, &mut z);
        z
    }
}

fn combine(cols: &[&Vec<f64>], coef: &DMatrix<f64>, j: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (i, c) in cols.iter().enumerate() {
        let a = coef[(i, j)];
        if a != 0.0 {
            crate::linalg::axpy(a, c, &mut out);
        }
    }
    out
}

fn gram(a: &[&Vec<f64>], b: &[&Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| dot(a[i], b[j]))
}

/// Orthonormalises `s` (and applies the same map to `as_`), dropping
/// numerically dependent directions.
fn svqb(s: Block, as_: Block) -> (Block, Block) {
    if s.is_empty() {
        return (s, as_);
    }
    let refs: Vec<&Vec<f64>> = s.iter().collect();
    let m = gram(&refs, &refs);
    let d: Vec<f64> = (0..m.nrows()).map(|i| m[(i, i)].max(1e-300).sqrt()).collect();
    let scaled = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] / (d[i] * d[j]));
    let (vals, vecs) = sym_eigen_sorted(scaled);
    let vmax = vals.last().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 1e-12 * vmax).collect();
    let n = s[0].len();
    let coef = DMatrix::from_fn(s.len(), keep.len(), |i, jj| {
        let j = keep[jj];
        vecs[(i, j)] / (d[i] * vals[j].sqrt())
    });
    let arefs: Vec<&Vec<f64>> = as_.iter().collect();
    let s2 = (0..keep.len()).map(|j| combine(&refs, &coef, j, n)).collect();
    let a2 = (0..keep.len()).map(|j| combine(&arefs, &coef, j, n)).collect();
    (s2, a2)
}

/// Removes the components of `w` along orthonormal `x` (twice, for stability).
fn orthogonalize_against(w: &mut Block, x: &Block) {
    for _ in 0..2 {
        for v in w.iter_mut() {
            for q in x {
                let c = dot(v, q);
                crate::linalg::axpy(-c, q, v);
            }
        }
    }
}

fn rayleigh_ritz(s: &Block, as_: &Block, take: usize) -> (Vec<f64>, DMatrix<f64>) {
    let sr: Vec<&Vec<f64>> = s.iter().collect();
    let ar: Vec<&Vec<f64>> = as_.iter().collect();
    let g = gram(&sr, &ar);
    let (vals, vecs) = sym_eigen_sorted(g);
    let c = vecs.columns(0, take).into_owned();
    (vals[..take].to_vec(), c)
}

fn rotate(s: &Block, c: &DMatrix<f64>) -> Block {
    let n = s.first().map(|v| v.len()).unwrap_or(0);
    let sr: Vec<&Vec<f64>> = s.iter().collect();
    (0..c.ncols()).map(|j| combine(&sr, c, j, n)).collect()
}

/// Result of one block iteration: Ritz values, vectors and residuals.
struct BlockResult {
    theta: Vec<f64>,
    x: Block,
    res: Vec<f64>,
    iterations: usize,
}

/// LOBPCG for the `k` smallest eigenpairs of `A` restricted to the
/// solenoidal subspace of `space`.
fn lobpcg(space: &dyn EigenSpace, k: usize, extra: usize, opts: &EigenOptions, seed: u64) -> Result<BlockResult> {
    let n = space.dim();
    let m = (k + extra).min(space.dim_h());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0: Block = (0..m)
        .map(|_| {
            let v: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
            // One smoothing pass gives a better start than white noise.
            space.project(&space.precond(&v))
        })
        .collect();
    let ax0: Block = x0.iter().map(|v| space.apply_a(v)).collect();
    let (x0, ax0) = svqb(x0, ax0);
    if x0.len() < k {
        return Err(Error::Spectral("initial block is rank deficient".into()));
    }
    let mb = x0.len();
    let (mut theta, c) = rayleigh_ritz(&x0, &ax0, mb);
    let mut x = rotate(&x0, &c);
    let mut ax = rotate(&ax0, &c);
    let mut p: Block = Vec::new();
    let mut ap: Block = Vec::new();
    let mut res = vec![f64::INFINITY; mb];
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let mut w: Block = Vec::new();
        for j in 0..mb {
            let mut r = ax[j].clone();
            crate::linalg::axpy(-theta[j], &x[j], &mut r);
            let pr = space.project(&r);
            res[j] = norm(&pr) / (theta[j].abs().max(1e-300) * norm(&x[j]));
            if res[j] > opts.tol {
                w.push(space.project(&space.precond(&pr)));
            }
        }
        if res[..k].iter().all(|&r| r <= opts.tol) || it + 1 == opts.max_iter {
            break;
        }
        orthogonalize_against(&mut w, &x);
        let aw: Block = w.iter().map(|v| space.apply_a(v)).collect();
        let (w, aw) = svqb(w, aw);
        if !p.is_empty() {
            let mut basis = x.clone();
            basis.extend(w.iter().cloned());
            orthogonalize_against(&mut p, &basis);
            ap = p.iter().map(|v| space.apply_a(v)).collect();
            let (p2, ap2) = svqb(std::mem::take(&mut p), std::mem::take(&mut ap));
            p = p2;
            ap = ap2;
        }
        let mut s = x;
        s.extend(w);
        s.extend(p);
        let mut as_ = ax;
        as_.extend(aw);
        as_.extend(ap);
        let (t, c) = rayleigh_ritz(&s, &as_, mb);
        theta = t;
        x = rotate(&s, &c);
        ax = rotate(&as_, &c);
        // Search directions: the part of the update outside the old X block.
        let mut cp = c;
        for i in 0..mb {
            for j in 0..mb {
                cp[(i, j)] = 0.0;
            }
        }
        p = rotate(&s, &cp);
        ap = rotate(&as_, &cp);
        // Periodic re-projection guards against drift out of the solenoidal space.
        if it % 10 == 9 {
            let xs: Block = x.iter().map(|v| space.project(v)).collect();
            let axs: Block = xs.iter().map(|v| space.apply_a(v)).collect();
            let (xs, axs) = svqb(xs, axs);
            let (t, c) = rayleigh_ritz(&xs, &axs, xs.len());
            theta = t;
            x = rotate(&xs, &c);
            ax = rotate(&axs, &c);
            p.clear();
            ap.clear();
        }
    }
    let worst = res[..k].iter().cloned().fold(0.0, f64::max);
    if worst > opts.tol {
        return Err(Error::Spectral(format!(
            "{iterations} iterations, worst relative residual {worst:.3e} (target {:.1e})",
            opts.tol
        )));
    }
    Ok(BlockResult { theta, x, res, iterations })
}

/// Smallest `k` eigenpairs of the discrete Stokes operator.
///
/// On reflection-symmetric grids the problem splits into eight parity
/// classes; each class is solved for enough pairs that the merged lowest `k`
/// are guaranteed complete.
pub fn solve_stokes_eigs(projector: &LerayProjector, k: usize, opts: EigenOptions) -> Result<StokesBasis> {
    let dom = projector.domain();
    let dim_h = dom.n_active().saturating_sub(dom.n_fluid().saturating_sub(1));
    if k == 0 || k > dim_h {
        return Err(Error::Precondition(format!(
            "requested {k} modes but the solenoidal space has dimension {dim_h}"
        )));
    }
    let reflect = dom.grid.n % 2 == 0 && reflection_symmetric(dom);
    if !reflect || !opts.use_symmetry {
        let space = FullSpace { projector, prec: LaplacePreconditioner::new(&projector.ops) };
        let extra = opts.extra.max(k / 4);
        let r = lobpcg(&space, k, extra, &opts, opts.seed)?;
        let pairs = r.theta.into_iter().zip(r.x).take(k).collect();
        return finalize(projector, pairs, k, r.iterations);
    }
    // Classes related by an axis swap share their spectrum; solve one of each.
    let permute = permutation_symmetric(dom);
    let mut source: Vec<(usize, Option<(usize, usize)>)> = (0..8).map(|ci| (ci, None)).collect();
    if permute {
        for ci in 0..8 {
            for &(a, b) in &[(0usize, 1usize), (0, 2), (1, 2)] {
                let mut s = CLASSES[ci];
                s.swap(a, b);
                let cj = CLASSES.iter().position(|&t| t == s).unwrap();
                if cj < ci && source[cj].1.is_none() {
                    source[ci] = (cj, Some((a, b)));
                    break;
                }
            }
        }
    }
    let spaces: Vec<Option<ClassSpace>> = (0..8)
        .map(|ci| (source[ci].1.is_none()).then(|| ClassSpace::new(&projector.ops, CLASSES[ci])))
        .collect();
    let dim_h_of = |ci: usize| spaces[source[ci].0].as_ref().unwrap().dim_h();
    let mut want: Vec<usize> = (0..8).map(|ci| k.div_ceil(4).min(dim_h_of(ci))).collect();
    let mut solved: Vec<Option<BlockResult>> = (0..8).map(|_| None).collect();
    let mut iterations = 0;
    loop {
        for ci in 0..8 {
            let Some(sp) = spaces[ci].as_ref() else { continue };
            let have = solved[ci].as_ref().map(|r| r.theta.len().saturating_sub(opts.extra)).unwrap_or(0);
            if want[ci] == 0 || have >= want[ci] {
                continue;
            }
            let r = lobpcg(sp, want[ci], opts.extra, &opts, opts.seed ^ (ci as u64 + 1))?;
            iterations = iterations.max(r.iterations);
            solved[ci] = Some(r);
        }
        // Merge converged pairs and check that no class may hide lower modes.
        let mut all: Vec<f64> = Vec::new();
        for ci in 0..8 {
            let src = source[ci].0;
            if let Some(r) = &solved[src] {
                all.extend_from_slice(&r.theta[..want[src].min(r.theta.len())]);
            }
        }
        all.sort_by(|a, b| a.total_cmp(b));
        if all.len() < k {
            return Err(Error::Spectral("not enough modes across parity classes".into()));
        }
        let cutoff = all[k - 1];
        let mut again = false;
        for ci in 0..8 {
            if spaces[ci].is_none() {
                continue;
            }
            if want[ci] < dim_h_of(ci) {
                let top = solved[ci].as_ref().map(|r| r.theta[want[ci] - 1]).unwrap_or(f64::INFINITY);
                if want[ci] == 0 || top <= cutoff * (1.0 + 1e-9) {
                    want[ci] = (2 * want[ci]).max(1).min(dim_h_of(ci));
                    again = true;
                }
            }
        }
        if !again {
            let mut pairs = Vec::with_capacity(all.len());
            for ci in 0..8 {
                let (src, swap) = source[ci];
                let r = solved[src].as_ref().unwrap();
                let sp = spaces[src].as_ref().unwrap();
                for j in 0..want[src] {
                    if r.res[j] > opts.tol {
                        return Err(Error::Spectral(format!("class {src} pair {j} unconverged")));
                    }
                    let mut v = sp.expand(&r.x[j]);
                    if let Some((a, b)) = swap {
                        v = swap_axes(dom, &v, a, b);
                    }
                    pairs.push((r.theta[j], v));
                }
            }
            return finalize(projector, pairs, k, iterations);
        }
    }
}

fn finalize(projector: &LerayProjector, pairs: Vec<(f64, Vec<f64>)>, k: usize, iterations: usize) -> Result<StokesBasis> {
    let dom = projector.ops.domain.clone();
    let scale = 1.0 / dom.grid.cell_volume().sqrt();
    let mut pairs: Vec<(f64, Vec<f64>)> = pairs
        .into_iter()
        .map(|(t, mut v)| {
            let nv = norm(&v);
            v.iter_mut().for_each(|a| *a *= scale / nv);
            let big = v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
            if let Some(first) = v.iter().find(|a| a.abs() > 1e-8 * big) {
                if *first < 0.0 {
                    v.iter_mut().for_each(|a| *a = -*a);
                }
            }
            (t, v)
        })
        .collect();
    pairs.sort_by(|a, b| {
        if (a.0 - b.0).abs() <= 1e-8 * a.0.abs().max(b.0.abs()) {
            lex_cmp(&a.1, &b.1)
        } else {
            a.0.total_cmp(&b.0)
        }
    });
    pairs.truncate(k);
    let mut eigenvalues = Vec::with_capacity(k);
    let mut fields = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for (t, v) in pairs {
        let mut lv = vec![0.0; v.len()];
        projector.ops.lap.matvec(&v, &mut lv);
        let mut r = projector.apply(&lv);
        crate::linalg::axpy(t, &v, &mut r);
        residuals.push(norm(&r) / (t * norm(&v)));
        eigenvalues.push(t);
        fields.push(v);
    }
    Ok(StokesBasis { domain: dom, eigenvalues, fields, residuals, iterations })
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > 1e-12 {
            return x.total_cmp(y);
        }
    }
    std::cmp::Ordering::Equal
}
