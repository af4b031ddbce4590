//! Periodic box `[-L/2, L/2)^3` with `n^3` collocation points and FFTs.

use crate::error::{Error, Result};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

pub type C64 = Complex64;

/// Three complex components on the box, point-major per component.
pub type VecField = [Vec<C64>; 3];

#[derive(Clone)]
pub struct SpectralBox {
    pub n: usize,
    pub l: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralBox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralBox").field("n", &self.n).field("l", &self.l).finish()
    }
}

impl SpectralBox {
    pub fn new(n: usize, l: f64) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::Resolution(format!("box resolution must be even and >= 8, got {n}")));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::BoxSize(format!("box length must be positive, got {l}")));
        }
        let mut p = FftPlanner::new();
        Ok(SpectralBox { n, l, fwd: p.plan_fft_forward(n), inv: p.plan_fft_inverse(n) })
    }

    pub fn dx(&self) -> f64 {
        self.l / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    /// Physical position of grid point `c`.
    #[inline]
    pub fn position(&self, c: [usize; 3]) -> [f64; 3] {
        let dx = self.dx();
        c.map(|v| -0.5 * self.l + v as f64 * dx)
    }

    /// Wavenumber of index `j` along one axis.
    #[inline]
    pub fn wavenumber(&self, j: usize) -> f64 {
        let n = self.n as isize;
        let m = if (j as isize) <= n / 2 { j as isize } else { j as isize - n };
        2.0 * PI / self.l * m as f64
    }

    /// Wavevector at flat index, with the Nyquist component zeroed for
    /// first derivatives.
    #[inline]
    pub fn kvec(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        c.map(|j| self.wavenumber(j))
    }

    #[inline]
    pub fn kvec_derivative(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        c.map(|j| if j == self.n / 2 { 0.0 } else { self.wavenumber(j) })
    }

    fn transform(&self, data: &mut [C64], inverse: bool) {
        let n = self.n;
        let plan = if inverse { &self.inv } else { &self.fwd };
        let mut scratch = vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        // contiguous axis
        plan.process_with_scratch(data, &mut scratch);
        // strided axes, gathered a plane of lines at a time
        let mut buf = vec![C64::new(0.0, 0.0); n * n];
        for axis in [1usize, 0] {
            let stride = if axis == 1 { n } else { n * n };
            for outer in 0..n {
                // lines share all indices but `axis`; `outer` runs over the
                // remaining non-contiguous index
                for line in 0..n {
                    let base = if axis == 1 { outer * n * n + line } else { outer * n + line };
                    for s in 0..n {
                        buf[line * n + s] = data[base + s * stride];
                    }
                }
                plan.process_with_scratch(&mut buf, &mut scratch);
                for line in 0..n {
                    let base = if axis == 1 { outer * n * n + line } else { outer * n + line };
                    for s in 0..n {
                        data[base + s * stride] = buf[line * n + s];
                    }
                }
            }
        }
        if inverse {
            let scale = 1.0 / self.len() as f64;
            for v in data.iter_mut() {
                *v *= scale;
            }
        }
    }

    pub fn forward(&self, data: &mut [C64]) {
        self.transform(data, false);
    }

    /// Inverse transform including the `1/n^3` factor.
    pub fn inverse(&self, data: &mut [C64]) {
        self.transform(data, true);
    }

    pub fn zeros(&self) -> Vec<C64> {
        vec![C64::new(0.0, 0.0); self.len()]
    }

    pub fn zero_field(&self) -> VecField {
        [self.zeros(), self.zeros(), self.zeros()]
    }

    /// Whether any index of the mode sits at the Nyquist frequency.
    #[inline]
    pub fn is_nyquist(&self, idx: usize) -> bool {
        self.coords(idx).contains(&(self.n / 2))
    }

    /// `v - k (k . v) / |k|^2` in Fourier space; the mean and Nyquist modes
    /// are removed.
    pub fn project(&self, v: &mut VecField) {
        for idx in 0..self.len() {
            let k = self.kvec(idx);
            if self.is_nyquist(idx) {
                for c in v.iter_mut() {
                    c[idx] = C64::new(0.0, 0.0);
                }
                continue;
            }
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if k2 == 0.0 {
                for c in v.iter_mut() {
                    c[idx] = C64::new(0.0, 0.0);
                }
                continue;
            }
            let dot = v[0][idx] * k[0] + v[1][idx] * k[1] + v[2][idx] * k[2];
            for d in 0..3 {
                v[d][idx] -= dot * (k[d] / k2);
            }
        }
    }

    /// Maximum of `|k . v| / (|k| |v|)` over modes, a divergence check.
    pub fn divergence_defect(&self, v: &VecField) -> f64 {
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        for idx in 0..self.len() {
            let k = self.kvec_derivative(idx);
            let d = v[0][idx] * k[0] + v[1][idx] * k[1] + v[2][idx] * k[2];
            num = num.max(d.norm());
            let kk = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
            let vv = (v[0][idx].norm_sqr() + v[1][idx].norm_sqr() + v[2][idx].norm_sqr()).sqrt();
            den = den.max(kk * vv);
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    fn wrap(&self, x: f64) -> (usize, f64) {
        let s = (x + 0.5 * self.l) / self.dx();
        let f = s.floor();
        let i = (f as isize).rem_euclid(self.n as isize) as usize;
        (i, s - f)
    }

    /// Adds `amount` at `x` with cloud-in-cell weights, preserving the sum
    /// and the first moment.
    pub fn deposit(&self, field: &mut [C64], x: [f64; 3], amount: f64) {
        let n = self.n;
        let (i, fx) = self.wrap(x[0]);
        let (j, fy) = self.wrap(x[1]);
        let (k, fz) = self.wrap(x[2]);
        for (di, wx) in [(0, 1.0 - fx), (1, fx)] {
            for (dj, wy) in [(0, 1.0 - fy), (1, fy)] {
                for (dk, wz) in [(0, 1.0 - fz), (1, fz)] {
                    let idx = self.index((i + di) % n, (j + dj) % n, (k + dk) % n);
                    field[idx] += C64::new(amount * wx * wy * wz, 0.0);
                }
            }
        }
    }

    /// Trilinear interpolation of the real part, periodic.
    pub fn interpolate(&self, field: &[C64], x: [f64; 3]) -> f64 {
        let n = self.n;
        let (i, fx) = self.wrap(x[0]);
        let (j, fy) = self.wrap(x[1]);
        let (k, fz) = self.wrap(x[2]);
        let mut s = 0.0;
        for (di, wx) in [(0, 1.0 - fx), (1, fx)] {
            for (dj, wy) in [(0, 1.0 - fy), (1, fy)] {
                for (dk, wz) in [(0, 1.0 - fz), (1, fz)] {
                    s += wx * wy * wz * field[self.index((i + di) % n, (j + dj) % n, (k + dk) % n)].re;
                }
            }
        }
        s
    }

    pub fn interpolate_vec(&self, v: &VecField, x: [f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|d| self.interpolate(&v[d], x))
    }

    /// Samples a real vector function at the grid points.
    pub fn sample(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> VecField {
        let mut out = self.zero_field();
        for idx in 0..self.len() {
            let v = f(self.position(self.coords(idx)));
            for d in 0..3 {
                out[d][idx] = C64::new(v[d], 0.0);
            }
        }
        out
    }

    /// `||v||_2` of a physical-space field.
    pub fn l2(&self, v: &VecField) -> f64 {
        let s: f64 = v.iter().flat_map(|c| c.iter()).map(|z| z.re * z.re).sum();
        (s * self.dx().powi(3)).sqrt()
    }

    /// `||v||_q`, `q = inf` allowed, of a physical-space field.
    pub fn lq(&self, v: &VecField, q: f64) -> f64 {
        let mags = (0..self.len()).map(|i| (v[0][i].re.powi(2) + v[1][i].re.powi(2) + v[2][i].re.powi(2)).sqrt());
        if q.is_infinite() {
            mags.fold(0.0, f64::max)
        } else {
            (mags.map(|m| m.powf(q)).sum::<f64>() * self.dx().powi(3)).powf(1.0 / q)
        }
    }

    /// Largest `|v|` on grid points within `width` of the box faces, over
    /// the largest `|v|` anywhere.
    pub fn edge_fraction(&self, v: &VecField, width: f64) -> f64 {
        let mut edge: f64 = 0.0;
        let mut all: f64 = 0.0;
        let half = 0.5 * self.l;
        for idx in 0..self.len() {
            let m = (v[0][idx].re.powi(2) + v[1][idx].re.powi(2) + v[2][idx].re.powi(2)).sqrt();
            all = all.max(m);
            let x = self.position(self.coords(idx));
            if x.iter().any(|&c| c.abs() > half - width) {
                edge = edge.max(m);
            }
        }
        if all == 0.0 {
            0.0
        } else {
            edge / all
        }
    }

    pub fn forward_field(&self, v: &mut VecField) {
        for c in v.iter_mut() {
            self.forward(c);
        }
    }

    pub fn inverse_field(&self, v: &mut VecField) {
        for c in v.iter_mut() {
            self.inverse(c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_derivative() {
        let b = SpectralBox::new(16, 2.0 * PI).unwrap();
        let mut f: Vec<C64> =
            (0..b.len()).map(|i| { let x = b.position(b.coords(i)); C64::new((x[0]).sin() * (2.0 * x[1]).cos() + x[2].cos(), 0.0) }).collect();
        let orig = f.clone();
        b.forward(&mut f);
        let mut df = f.clone();
        for (i, v) in df.iter_mut().enumerate() {
            *v *= C64::new(0.0, b.kvec_derivative(i)[0]);
        }
        b.inverse(&mut f);
        b.inverse(&mut df);
        for i in 0..b.len() {
            assert!((f[i] - orig[i]).norm() < 1e-12);
            let x = b.position(b.coords(i));
            assert!((df[i].re - x[0].cos() * (2.0 * x[1]).cos()).abs() < 1e-11);
        }
    }

    #[test]
    fn deposit_conserves_sum_and_moment() {
        let b = SpectralBox::new(8, 8.0).unwrap();
        let mut f = b.zeros();
        b.deposit(&mut f, [0.3, -1.7, 2.2], 2.0);
        let s: f64 = f.iter().map(|z| z.re).sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m: f64 = (0..b.len()).map(|i| f[i].re * b.position(b.coords(i))[1]).sum();
        assert!((m - 2.0 * -1.7).abs() < 1e-12);
        assert!((b.interpolate(&f, [0.0; 3])).is_finite());
    }

    #[test]
    fn projection_is_idempotent_and_solenoidal() {
        let b = SpectralBox::new(8, 4.0).unwrap();
        let mut v = b.sample(|x| [x[1].sin() + x[0].cos(), x[2] * 0.1, (x[0] * x[1]).cos()]);
        b.forward_field(&mut v);
        b.project(&mut v);
        assert!(b.divergence_defect(&v) < 1e-14);
        let once = v.clone();
        b.project(&mut v);
        for d in 0..3 {
            for i in 0..b.len() {
                assert!((v[d][i] - once[d][i]).norm() < 1e-13);
            }
        }
    }
}
