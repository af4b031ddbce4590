//! Change of variables `y = Q(t) x + x0(t)`, `v(y, t) = Q(t) w(x, t)`, which
//! turns the body-frame drift into the constant `lambda d_1`.

use super::cauchy::{cic_weights, RealField};
use super::spectral::SpectralBox;
use crate::error::{Error, Result};
use crate::mac::norm3;
use crate::motion::{integrate_rotation, validate_hypothesis_h, Hypothesis, RigidMotionSpec};
use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

/// Tolerated `||Q(T) - I||` and `|x0(T) - x0(0)|`.
pub const PERIODICITY_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct MovingFrame {
    pub period: f64,
    pub lambda: f64,
    /// Samples at `t_n = n T / n_t`, `n = 0..n_t`.
    pub q: Vec<Matrix3<f64>>,
    pub x0: Vec<[f64; 3]>,
    pub drift_bound: f64,
    pub orthogonality_defect: f64,
    /// `max(||Q(T) - I||, |x0(T) - x0(0)|)`.
    pub periodicity_defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FrameReport {
    pub lambda: f64,
    pub drift_bound: f64,
    pub orthogonality_defect: f64,
    pub periodicity_defect: f64,
    pub axis_fixed_point_defect: f64,
    pub weight_constant: f64,
    pub weight_bound: f64,
}

#[inline]
fn mul(q: &Matrix3<f64>, v: [f64; 3]) -> [f64; 3] {
    let r = q * Vector3::new(v[0], v[1], v[2]);
    [r[0], r[1], r[2]]
}

#[inline]
fn mul_t(q: &Matrix3<f64>, v: [f64; 3]) -> [f64; 3] {
    let r = q.transpose() * Vector3::new(v[0], v[1], v[2]);
    [r[0], r[1], r[2]]
}

impl MovingFrame {
    /// Refuses motions violating (H), non-periodic frames, and drift beyond
    /// `guard`.
    pub fn new(spec: &RigidMotionSpec, n_t: usize, guard: f64) -> Result<Self> {
        if let Hypothesis::Violated(msg) = validate_hypothesis_h(spec) {
            return Err(Error::Hypothesis(msg));
        }
        let path = integrate_rotation(spec, n_t, 1)?;
        let qt = path.q[n_t];
        let dq = (qt - Matrix3::identity()).abs().max();
        let dx = norm3([0, 1, 2].map(|d| path.x0[n_t][d] - path.x0[0][d]));
        let periodicity_defect = dq.max(dx);
        if periodicity_defect > PERIODICITY_TOL {
            return Err(Error::Motion(format!(
                "frame is not periodic: ||Q(T) - I|| = {dq:.3e}, |x0(T) - x0(0)| = {dx:.3e}; the mean rotation angle must be a multiple of 2 pi"
            )));
        }
        if path.drift_bound > guard {
            return Err(Error::Drift(format!("sup |x0| = {:.4} exceeds the guard band {guard}", path.drift_bound)));
        }
        let mut q = path.q;
        let mut x0 = path.x0;
        q.truncate(n_t);
        x0.truncate(n_t);
        Ok(MovingFrame {
            period: spec.period,
            lambda: spec.lambda,
            q,
            x0,
            drift_bound: path.drift_bound,
            orthogonality_defect: path.orthogonality_defect,
            periodicity_defect,
        })
    }

    pub fn n_t(&self) -> usize {
        self.q.len()
    }

    /// Sample index of time `t` (must lie on the grid modulo `T`).
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let s = (t / self.period).rem_euclid(1.0) * self.n_t() as f64;
        let i = s.round();
        if (s - i).abs() > 1e-6 {
            return Err(Error::Precondition(format!("time {t} is not on the frame grid")));
        }
        Ok(i as usize % self.n_t())
    }

    /// `y = Q x + x0` at sample `n`.
    #[inline]
    pub fn to_frame(&self, n: usize, x: [f64; 3]) -> [f64; 3] {
        let y = mul(&self.q[n], x);
        [0, 1, 2].map(|d| y[d] + self.x0[n][d])
    }

    /// `x = Q^T (y - x0)`.
    #[inline]
    pub fn from_frame(&self, n: usize, y: [f64; 3]) -> [f64; 3] {
        mul_t(&self.q[n], [0, 1, 2].map(|d| y[d] - self.x0[n][d]))
    }

    #[inline]
    pub fn rotate(&self, n: usize, v: [f64; 3]) -> [f64; 3] {
        mul(&self.q[n], v)
    }

    #[inline]
    pub fn unrotate(&self, n: usize, v: [f64; 3]) -> [f64; 3] {
        mul_t(&self.q[n], v)
    }

    /// `max |Q^T (xi - lambda e1) - (xi - lambda e1)|` over the samples.
    pub fn axis_fixed_point_defect(&self, spec: &RigidMotionSpec) -> f64 {
        (0..self.n_t())
            .map(|n| {
                let t = n as f64 * self.period / self.n_t() as f64;
                let xi = spec.xi_at(t);
                let a = [xi[0] - self.lambda, xi[1], xi[2]];
                let b = self.unrotate(n, a);
                norm3([b[0] - a[0], b[1] - a[1], b[2] - a[2]])
            })
            .fold(0.0, f64::max)
    }

    /// Largest ratio `W(x) / W(Q x + x0)` of the first-order wake weight over
    /// `points` and all samples, with the bound `(1+M)(1+2 lambda (2M+1))`.
    pub fn weight_inequality(&self, points: &[[f64; 3]]) -> (f64, f64) {
        let w = super::wake::WakeWeight::new(self.lambda);
        let mut c: f64 = 0.0;
        for n in 0..self.n_t() {
            for &x in points {
                let y = self.to_frame(n, x);
                c = c.max(w.weight(x, 1) / w.weight(y, 1));
            }
        }
        let m = self.drift_bound;
        (c, (1.0 + m) * (1.0 + 2.0 * self.lambda * (2.0 * m + 1.0)))
    }

    pub fn report(&self, spec: &RigidMotionSpec, points: &[[f64; 3]]) -> FrameReport {
        let (weight_constant, weight_bound) = self.weight_inequality(points);
        FrameReport {
            lambda: self.lambda,
            drift_bound: self.drift_bound,
            orthogonality_defect: self.orthogonality_defect,
            periodicity_defect: self.periodicity_defect,
            axis_fixed_point_defect: self.axis_fixed_point_defect(spec),
            weight_constant,
            weight_bound,
        }
    }

    /// Resamples a body-frame box field into the moving frame at sample `n`:
    /// `v(y) = Q w(Q^T (y - x0))`, trilinear.
    pub fn push_field(&self, sbox: &SpectralBox, n: usize, w: &RealField) -> RealField {
        self.resample(sbox, w, |y| self.from_frame(n, y), |v| self.rotate(n, v))
    }

    /// Inverse of [`MovingFrame::push_field`]: `w(x) = Q^T v(Q x + x0)`.
    pub fn pull_field(&self, sbox: &SpectralBox, n: usize, v: &RealField) -> RealField {
        self.resample(sbox, v, |x| self.to_frame(n, x), |a| self.unrotate(n, a))
    }

    fn resample(
        &self,
        sbox: &SpectralBox,
        f: &RealField,
        map: impl Fn([f64; 3]) -> [f64; 3],
        turn: impl Fn([f64; 3]) -> [f64; 3],
    ) -> RealField {
        let len = sbox.len();
        let mut out: RealField = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        let mut wts = Vec::with_capacity(8);
        for idx in 0..len {
            let p = map(sbox.position(sbox.coords(idx)));
            wts.clear();
            cic_weights(sbox, p, &mut wts);
            let mut a = [0.0; 3];
            for &(j, c) in &wts {
                for d in 0..3 {
                    a[d] += c * f[d][j];
                }
            }
            let b = turn(a);
            for d in 0..3 {
                out[d][idx] = b[d];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::{FourierPath, E1};
    use std::f64::consts::PI;

    #[test]
    fn pure_translation_is_the_identity() {
        let t = 2.0;
        let spec = RigidMotionSpec::new(FourierPath::constant(t, [0.5, 0.0, 0.0]), FourierPath::zero(t), E1).unwrap();
        let f = MovingFrame::new(&spec, 16, 10.0).unwrap();
        for n in 0..16 {
            assert!((f.q[n] - Matrix3::identity()).abs().max() < 1e-15);
            assert!(norm3(f.x0[n]) < 1e-15);
        }
        assert!(f.axis_fixed_point_defect(&spec) < 1e-12);
    }

    #[test]
    fn coaxial_motion_fixes_the_axis() {
        let t = 2.0 * PI;
        let xi = FourierPath::trig(t, [0.5, 0.0, 0.0], &[([0.2, 0.0, 0.0], [0.0; 3])]);
        let om = FourierPath::trig(t, [1.0, 0.0, 0.0], &[([0.0; 3], [0.3, 0.0, 0.0])]);
        let spec = RigidMotionSpec::new(xi, om, E1).unwrap();
        let f = MovingFrame::new(&spec, 32, 10.0).unwrap();
        assert!(f.axis_fixed_point_defect(&spec) < 1e-12);
        assert!(f.periodicity_defect < PERIODICITY_TOL);
        let pts: Vec<[f64; 3]> = (0..50).map(|i| [i as f64 - 25.0, (i % 5) as f64 * 3.0, -(i as f64) * 0.5]).collect();
        let (c, bound) = f.weight_inequality(&pts);
        assert!(c <= bound, "{c} > {bound}");
    }

    #[test]
    fn refuses_bad_motions() {
        let t = 1.0;
        let oblique = RigidMotionSpec::new(FourierPath::constant(t, E1), FourierPath::constant(t, [0.0, 1.0, 0.0]), E1).unwrap();
        assert!(matches!(MovingFrame::new(&oblique, 16, 10.0), Err(Error::Hypothesis(_))));
        let open = RigidMotionSpec::new(FourierPath::zero(t), FourierPath::constant(t, [0.0, 0.0, 1.0]), E1).unwrap();
        assert!(matches!(MovingFrame::new(&open, 16, 10.0), Err(Error::Motion(_))));
        let drift = RigidMotionSpec::new(
            FourierPath::trig(t, [0.1, 0.0, 0.0], &[([5.0, 0.0, 0.0], [0.0; 3])]),
            FourierPath::zero(t),
            E1,
        )
        .unwrap();
        assert!(matches!(MovingFrame::new(&drift, 16, 0.1), Err(Error::Drift(_))));
    }

    #[test]
    fn rotation_of_a_linear_field_round_trips() {
        // xi = 0, omega = e3 with one turn per period; u = e3 x x is invariant
        let t = 2.0 * PI;
        let spec = RigidMotionSpec::new(FourierPath::zero(t), FourierPath::constant(t, [0.0, 0.0, 1.0]), E1).unwrap();
        let f = MovingFrame::new(&spec, 16, 1.0).unwrap();
        let sbox = SpectralBox::new(16, 8.0).unwrap();
        let len = sbox.len();
        let mut u: RealField = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        for i in 0..len {
            let x = sbox.position(sbox.coords(i));
            u[0][i] = -x[1];
            u[1][i] = x[0];
        }
        for n in [1, 3, 6] {
            let v = f.push_field(&sbox, n, &u);
            let back = f.pull_field(&sbox, n, &v);
            for i in 0..len {
                let x = sbox.position(sbox.coords(i));
                // interior points only; the linear field is not periodic
                if x.iter().all(|c| c.abs() < 1.5) {
                    assert!((v[0][i] + x[1]).abs() < 1e-6 && (v[1][i] - x[0]).abs() < 1e-6);
                    assert!((back[0][i] - u[0][i]).abs() < 1e-6 && (back[1][i] - u[1][i]).abs() < 1e-6);
                }
            }
        }
    }
}
