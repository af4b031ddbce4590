//! Time-periodic rigid motion `V(x, t) = xi(t) + omega(t) x x`.
//!
//! `xi` and `omega` are truncated Fourier series, so periodicity and the
//! Sobolev-in-time norms are exact. At ingestion the frame is rotated once so
//! the distinguished axis is the first coordinate axis: the mean of `xi` when
//! it is nonzero, otherwise the declared axis.

use crate::error::{Error, Result};
use crate::mac::{cross, dot3, norm3};
use nalgebra::Matrix3;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Real vector path `f(t) = sum_{|n| <= N} c_n e^{2 pi i n t / T}` stored by
/// its modes `c_0..c_N` (the negative modes are the conjugates).
#[derive(Clone, Debug, PartialEq)]
pub struct FourierPath {
    pub period: f64,
    pub coeffs: Vec<[Complex64; 3]>,
}

impl FourierPath {
    pub fn zero(period: f64) -> Self {
        FourierPath { period, coeffs: vec![[Complex64::new(0.0, 0.0); 3]] }
    }

    pub fn constant(period: f64, v: [f64; 3]) -> Self {
        FourierPath { period, coeffs: vec![v.map(|x| Complex64::new(x, 0.0))] }
    }

    /// `mean + sum_n (a_n cos(2 pi n t/T) + b_n sin(2 pi n t/T))`, with
    /// `harmonics[n-1] = (a_n, b_n)`.
    pub fn trig(period: f64, mean: [f64; 3], harmonics: &[([f64; 3], [f64; 3])]) -> Self {
        let mut coeffs = vec![mean.map(|x| Complex64::new(x, 0.0))];
        for (a, b) in harmonics {
            coeffs.push([0, 1, 2].map(|d| Complex64::new(0.5 * a[d], -0.5 * b[d])));
        }
        FourierPath { period, coeffs }
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn freq(&self, n: usize) -> f64 {
        2.0 * PI * n as f64 / self.period
    }

    /// `d^order f / dt^order` at `t`.
    pub fn derivative(&self, t: f64, order: u32) -> [f64; 3] {
        let mut out = [0.0; 3];
        if order == 0 {
            for d in 0..3 {
                out[d] = self.coeffs[0][d].re;
            }
        }
        for (n, c) in self.coeffs.iter().enumerate().skip(1) {
            let w = self.freq(n);
            let f = Complex64::new(0.0, w).powu(order) * Complex64::from_polar(1.0, w * t);
            for d in 0..3 {
                out[d] += 2.0 * (c[d] * f).re;
            }
        }
        out
    }

    pub fn eval(&self, t: f64) -> [f64; 3] {
        self.derivative(t, 0)
    }

    pub fn mean(&self) -> [f64; 3] {
        self.coeffs[0].map(|c| c.re)
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.max_coeff() == 0.0
    }

    /// `||f^{(j)}||^2_{L^2(0,T)}` by Parseval.
    pub fn derivative_l2_sq(&self, j: u32) -> f64 {
        let mut s = 0.0;
        for (n, c) in self.coeffs.iter().enumerate() {
            let w2j = self.freq(n).powi(2 * j as i32);
            let m: f64 = c.iter().map(|z| z.norm_sqr()).sum();
            s += if n == 0 { m * w2j } else { 2.0 * m * w2j };
        }
        self.period * s
    }

    /// `||f||_{W^{m,2}(0,T)}` from the modes.
    pub fn sobolev_norm(&self, m: u32) -> f64 {
        (0..=m).map(|j| self.derivative_l2_sq(j)).sum::<f64>().sqrt()
    }

    /// Same norm by trapezoidal quadrature on `samples` equispaced points
    /// (exact for trigonometric polynomials once `samples > 2N`).
    pub fn sobolev_norm_quadrature(&self, m: u32, samples: usize) -> f64 {
        let dt = self.period / samples as f64;
        let mut s = 0.0;
        for i in 0..samples {
            let t = i as f64 * dt;
            for j in 0..=m {
                let v = self.derivative(t, j);
                s += dot3(v, v) * dt;
            }
        }
        s.sqrt()
    }

    /// `int_0^t (f(s) - mean) ds`, exact.
    pub fn zero_mean_antiderivative(&self, t: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (n, c) in self.coeffs.iter().enumerate().skip(1) {
            let w = self.freq(n);
            let f = (Complex64::from_polar(1.0, w * t) - 1.0) / Complex64::new(0.0, w);
            for d in 0..3 {
                out[d] += 2.0 * (c[d] * f).re;
            }
        }
        out
    }

    /// Path of `R f(t)` for a fixed matrix `R`.
    pub fn rotated(&self, r: &Matrix3<f64>) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                let mut out = [Complex64::new(0.0, 0.0); 3];
                for i in 0..3 {
                    for j in 0..3 {
                        out[i] += c[j] * r[(i, j)];
                    }
                }
                out
            })
            .collect();
        FourierPath { period: self.period, coeffs }
    }

    pub fn scaled(&self, a: f64) -> Self {
        FourierPath { period: self.period, coeffs: self.coeffs.iter().map(|c| c.map(|z| z * a)).collect() }
    }

    /// Builds a path from `(index, re, im)` modes. Every mode `n != 0` must
    /// come with its partner `-n` holding the complex conjugate, and the zero
    /// mode must be real.
    pub fn from_modes(period: f64, modes: &[MotionMode]) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::Motion(format!("period must be positive, got {period}")));
        }
        let n_max = modes.iter().map(|m| m.index.unsigned_abs()).max().unwrap_or(0);
        if n_max > 4096 {
            return Err(Error::Motion(format!("mode index {n_max} too large")));
        }
        let n_max = n_max as usize;
        let mut pos: Vec<Option<[Complex64; 3]>> = vec![None; n_max + 1];
        let mut neg: Vec<Option<[Complex64; 3]>> = vec![None; n_max + 1];
        for m in modes {
            if m.re.iter().chain(&m.im).any(|x| !x.is_finite()) {
                return Err(Error::Motion(format!("non-finite coefficient in mode {}", m.index)));
            }
            let c = [0, 1, 2].map(|d| Complex64::new(m.re[d], m.im[d]));
            let slot = if m.index >= 0 { &mut pos[m.index as usize] } else { &mut neg[m.index.unsigned_abs() as usize] };
            if slot.is_some() {
                return Err(Error::Motion(format!("mode {} given twice", m.index)));
            }
            *slot = Some(c);
        }
        let zero = [Complex64::new(0.0, 0.0); 3];
        let mut coeffs = vec![zero; n_max + 1];
        if let Some(c0) = pos[0] {
            if c0.iter().any(|z| z.im != 0.0) {
                return Err(Error::Motion("mode 0 must be real".into()));
            }
            coeffs[0] = c0;
        }
        for n in 1..=n_max {
            match (pos[n], neg[n]) {
                (None, None) => {}
                (Some(p), Some(q)) => {
                    let scale = p.iter().map(|z| z.norm()).fold(1.0, f64::max);
                    if (0..3).any(|d| (p[d] - q[d].conj()).norm() > 1e-12 * scale) {
                        return Err(Error::Motion(format!("modes {n} and -{n} are not conjugate")));
                    }
                    coeffs[n] = p;
                }
                _ => return Err(Error::Motion(format!("mode {n} lacks its conjugate partner"))),
            }
        }
        Ok(FourierPath { period, coeffs })
    }

    /// Inverse of [`FourierPath::from_modes`]; zero modes are skipped.
    pub fn to_modes(&self) -> Vec<MotionMode> {
        let mut out = Vec::new();
        for (n, c) in self.coeffs.iter().enumerate() {
            if c.iter().all(|z| z.norm() == 0.0) {
                continue;
            }
            out.push(MotionMode { index: n as i64, re: c.map(|z| z.re), im: c.map(|z| z.im) });
            if n > 0 {
                out.push(MotionMode { index: -(n as i64), re: c.map(|z| z.re), im: c.map(|z| -z.im) });
            }
        }
        out
    }
}

/// One Fourier mode as it appears in a motion block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionMode {
    pub index: i64,
    pub re: [f64; 3],
    pub im: [f64; 3],
}

/// Motion block of a run manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionConfig {
    pub period: f64,
    #[serde(default)]
    pub xi: Vec<MotionMode>,
    #[serde(default)]
    pub omega: Vec<MotionMode>,
    #[serde(default = "default_axis")]
    pub axis: [f64; 3],
}

fn default_axis() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

impl MotionConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Manifest(e.to_string()))
    }

    pub fn to_spec(&self) -> Result<RigidMotionSpec> {
        let xi = FourierPath::from_modes(self.period, &self.xi)?;
        let omega = FourierPath::from_modes(self.period, &self.omega)?;
        RigidMotionSpec::new(xi, omega, self.axis)
    }
}

/// `T`-periodic rigid motion in the canonical frame.
#[derive(Clone, Debug, PartialEq)]
pub struct RigidMotionSpec {
    pub period: f64,
    pub xi: FourierPath,
    pub omega: FourierPath,
    /// Rotation applied at ingestion (`x_canonical = frame * x_input`).
    pub frame: Matrix3<f64>,
    /// `|mean xi|`.
    pub lambda: f64,
    /// `||xi||_{W^{2,2}} + ||omega||_{W^{2,2}}`.
    pub v0: f64,
}

pub const E1: [f64; 3] = [1.0, 0.0, 0.0];

/// Rotation taking the unit vector `u` to `e1`.
fn align_to_e1(u: [f64; 3]) -> Matrix3<f64> {
    let c = u[0];
    if c > 1.0 - 1e-15 {
        return Matrix3::identity();
    }
    if c < -1.0 + 1e-15 {
        return Matrix3::new(-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0);
    }
    let k = cross(u, E1);
    let s = norm3(k);
    let k = [k[0] / s, k[1] / s, k[2] / s];
    let kx = Matrix3::new(0.0, -k[2], k[1], k[2], 0.0, -k[0], -k[1], k[0], 0.0);
    Matrix3::identity() + kx * s + kx * kx * (1.0 - c)
}

impl RigidMotionSpec {
    pub fn new(xi: FourierPath, omega: FourierPath, axis: [f64; 3]) -> Result<Self> {
        let period = xi.period;
        if !(period > 0.0 && period.is_finite()) || omega.period != period {
            return Err(Error::Motion("xi and omega need one positive period".into()));
        }
        let mean = xi.mean();
        let lambda = norm3(mean);
        let dir = if lambda > 0.0 {
            [mean[0] / lambda, mean[1] / lambda, mean[2] / lambda]
        } else {
            let a = norm3(axis);
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::Motion("axis must be a nonzero vector".into()));
            }
            [axis[0] / a, axis[1] / a, axis[2] / a]
        };
        let frame = align_to_e1(dir);
        let xi = xi.rotated(&frame);
        let omega = omega.rotated(&frame);
        let v0 = xi.sobolev_norm(2) + omega.sobolev_norm(2);
        Ok(RigidMotionSpec { period, xi, omega, frame, lambda, v0 })
    }

    pub fn at_rest(period: f64) -> Self {
        RigidMotionSpec::new(FourierPath::zero(period), FourierPath::zero(period), E1).unwrap()
    }

    pub fn xi_at(&self, t: f64) -> [f64; 3] {
        self.xi.eval(t)
    }

    pub fn omega_at(&self, t: f64) -> [f64; 3] {
        self.omega.eval(t)
    }

    pub fn is_at_rest(&self) -> bool {
        self.xi.is_zero() && self.omega.is_zero()
    }

    /// Skew matrix with `A a = omega x a`.
    pub fn skew(&self, t: f64) -> Matrix3<f64> {
        skew(self.omega_at(t))
    }

    /// The same motion with both paths multiplied by `a`.
    pub fn scaled(&self, a: f64) -> Self {
        let xi = self.xi.scaled(a);
        let omega = self.omega.scaled(a);
        let v0 = xi.sobolev_norm(2) + omega.sobolev_norm(2);
        RigidMotionSpec { xi, omega, lambda: self.lambda * a.abs(), v0, ..self.clone() }
    }

    pub fn to_config(&self) -> MotionConfig {
        MotionConfig { period: self.period, xi: self.xi.to_modes(), omega: self.omega.to_modes(), axis: E1 }
    }
}

pub fn skew(w: [f64; 3]) -> Matrix3<f64> {
    Matrix3::new(0.0, -w[2], w[1], w[2], 0.0, -w[0], -w[1], w[0], 0.0)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Hypothesis {
    Holds,
    Violated(String),
}

impl Hypothesis {
    pub fn holds(&self) -> bool {
        matches!(self, Hypothesis::Holds)
    }
}

/// Hypothesis (H): `xi == 0`, or `xi(t)` and `omega(t)` both parallel to `e1`
/// at every collocation time (transverse parts below `1e-12 V0`).
pub fn validate_hypothesis_h(spec: &RigidMotionSpec) -> Hypothesis {
    if spec.xi.is_zero() {
        return Hypothesis::Holds;
    }
    let n = 8 * (spec.xi.n_modes().max(spec.omega.n_modes()) + 1);
    let tol = 1e-12 * spec.v0.max(f64::MIN_POSITIVE);
    for i in 0..n {
        let t = spec.period * i as f64 / n as f64;
        for (name, v) in [("xi", spec.xi_at(t)), ("omega", spec.omega_at(t))] {
            let tr = v[1].hypot(v[2]);
            if tr > tol {
                return Hypothesis::Violated(format!(
                    "{name}(t = {t:.4}) has transverse part {tr:.3e} while xi is not identically zero"
                ));
            }
        }
    }
    Hypothesis::Holds
}

/// `(lambda, e1)` with `lambda e1` the period mean of `xi`.
pub fn average_velocity(spec: &RigidMotionSpec) -> (f64, [f64; 3]) {
    (spec.lambda, E1)
}

/// `V(x, t) = xi(t) + omega(t) x x` at each point.
pub fn rigid_field(spec: &RigidMotionSpec, t: f64, points: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let xi = spec.xi_at(t);
    let om = spec.omega_at(t);
    points
        .iter()
        .map(|&x| {
            let r = cross(om, x);
            [xi[0] + r[0], xi[1] + r[1], xi[2] + r[2]]
        })
        .collect()
}

/// `Q(t)` and `x0(t)` on `t_i = i T / n_t`, `i = 0..=periods * n_t`.
#[derive(Clone, Debug)]
pub struct RotationPath {
    pub dt: f64,
    pub q: Vec<Matrix3<f64>>,
    pub x0: Vec<[f64; 3]>,
    /// `sup |x0|` over the samples.
    pub drift_bound: f64,
    /// Largest `||Q^T Q - I||` seen after re-projection.
    pub orthogonality_defect: f64,
}

impl RotationPath {
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }
}

fn orth_defect(q: &Matrix3<f64>) -> f64 {
    (q.transpose() * q - Matrix3::identity()).abs().max()
}

/// Nearest orthogonal matrix (polar factor).
fn polar(q: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = q.svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

/// RK4 for `Q' = Q A(t)`, `Q(0) = I`, re-projected onto the orthogonal group
/// after every step; `x0` is the exact antiderivative of `xi - lambda e1`.
pub fn integrate_rotation(spec: &RigidMotionSpec, n_t: usize, periods: usize) -> Result<RotationPath> {
    if n_t < 8 {
        return Err(Error::Precondition(format!("need at least 8 samples per period, got {n_t}")));
    }
    let dt = spec.period / n_t as f64;
    let steps = n_t * periods.max(1);
    let mut q = Matrix3::identity();
    let mut qs = Vec::with_capacity(steps + 1);
    qs.push(q);
    let mut worst: f64 = 0.0;
    // Sub-steps keep RK4 well inside its accuracy range for fast rotation.
    let wmax = (0..4 * n_t).map(|i| norm3(spec.omega_at(i as f64 * dt / 4.0))).fold(0.0, f64::max);
    let sub = ((wmax * dt / 0.01).ceil() as usize).max(4);
    let ds = dt / sub as f64;
    for i in 0..steps {
        for s in 0..sub {
            let t = i as f64 * dt + s as f64 * ds;
            let a1 = spec.skew(t);
            let a2 = spec.skew(t + 0.5 * ds);
            let a4 = spec.skew(t + ds);
            let k1 = q * a1;
            let k2 = (q + k1 * (0.5 * ds)) * a2;
            let k3 = (q + k2 * (0.5 * ds)) * a2;
            let k4 = (q + k3 * ds) * a4;
            q += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (ds / 6.0);
        }
        q = polar(&q);
        let d = orth_defect(&q);
        if d > 1e-8 {
            return Err(Error::IntegratorTolerance(format!("orthogonality drift {d:.3e} at step {i}")));
        }
        worst = worst.max(d);
        qs.push(q);
    }
    let x0: Vec<[f64; 3]> = (0..=steps).map(|i| spec.xi.zero_mean_antiderivative(i as f64 * dt)).collect();
    let drift_bound = x0.iter().map(|&v| norm3(v)).fold(0.0, f64::max);
    Ok(RotationPath { dt, q: qs, x0, drift_bound, orthogonality_defect: worst })
}
