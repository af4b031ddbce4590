//! Sparse matrices, conjugate gradients and small dense helpers.

#[derive(Clone, Debug, Default)]
pub struct Csr {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl Csr {
    /// Build from unsorted triplets; duplicates are summed.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col = Vec::with_capacity(t.len());
        let mut val: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *val.last_mut().unwrap() += v;
                continue;
            }
            col.push(c);
            val.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Csr { n_rows, n_cols, row_ptr, col, val }
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for (r, yr) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.val[p] * x[self.col[p]];
            }
            *yr = s;
        }
    }

    /// `y = A^T x`.
    pub fn matvec_t(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_rows);
        debug_assert_eq!(y.len(), self.n_cols);
        y.iter_mut().for_each(|v| *v = 0.0);
        for (r, &xr) in x.iter().enumerate() {
            if xr == 0.0 {
                continue;
            }
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.col[p]] += self.val[p] * xr;
            }
        }
    }

    pub fn transpose(&self) -> Csr {
        let mut t = Vec::with_capacity(self.nnz());
        for r in 0..self.n_rows {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                t.push((self.col[p], r, self.val[p]));
            }
        }
        Csr::from_triplets(self.n_cols, self.n_rows, t)
    }

    /// `A * B` for sparse `B`.
    pub fn matmul(&self, b: &Csr) -> Csr {
        assert_eq!(self.n_cols, b.n_rows);
        let mut t = Vec::new();
        let mut acc = vec![0.0; b.n_cols];
        let mut mark = vec![usize::MAX; b.n_cols];
        let mut touched = Vec::new();
        for r in 0..self.n_rows {
            touched.clear();
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                let k = self.col[p];
                let a = self.val[p];
                for q in b.row_ptr[k]..b.row_ptr[k + 1] {
                    let c = b.col[q];
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = 0.0;
                        touched.push(c);
                    }
                    acc[c] += a * b.val[q];
                }
            }
            for &c in &touched {
                t.push((r, c, acc[c]));
            }
        }
        Csr::from_triplets(self.n_rows, b.n_cols, t)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_rows];
        for (r, dr) in d.iter_mut().enumerate() {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.col[p] == r {
                    *dr += self.val[p];
                }
            }
        }
        d
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n_rows, self.n_cols);
        for r in 0..self.n_rows {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.col[p])] += self.val[p];
            }
        }
        m
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn remove_mean(x: &mut [f64]) {
    if x.is_empty() {
        return;
    }
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= m);
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub rel_residual: f64,
    pub converged: bool,
}

/// Preconditioned conjugate gradients for `A x = b` with SPD (or, with
/// `mean_free`, constant-kernel PSD) `A`. `x` holds the initial guess.
pub fn pcg(
    apply_a: &dyn Fn(&[f64], &mut [f64]),
    precond: &dyn Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
    mean_free: bool,
) -> CgStats {
    let n = b.len();
    let mut rhs = b.to_vec();
    if mean_free {
        remove_mean(&mut rhs);
    }
    let bnorm = norm(&rhs);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return CgStats { iterations: 0, rel_residual: 0.0, converged: true };
    }
    let mut r = vec![0.0; n];
    apply_a(x, &mut r);
    for i in 0..n {
        r[i] = rhs[i] - r[i];
    }
    if mean_free {
        remove_mean(&mut r);
    }
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    if mean_free {
        remove_mean(&mut z);
    }
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = norm(&r) / bnorm;
    let mut it = 0;
    while rel > rel_tol && it < max_iter {
        apply_a(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            break;
        }
        let alpha = rz / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        if mean_free {
            remove_mean(&mut r);
        }
        rel = norm(&r) / bnorm;
        it += 1;
        if rel <= rel_tol {
            break;
        }
        precond(&r, &mut z);
        if mean_free {
            remove_mean(&mut z);
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if mean_free {
        remove_mean(x);
    }
    CgStats { iterations: it, rel_residual: rel, converged: rel <= rel_tol }
}

/// Symmetric eigen-decomposition with eigenvalues in ascending order.
pub fn sym_eigen_sorted(m: nalgebra::DMatrix<f64>) -> (Vec<f64>, nalgebra::DMatrix<f64>) {
    let n = m.nrows();
    let sym = (&m + m.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = nalgebra::DMatrix::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}
