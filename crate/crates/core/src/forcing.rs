//! Body forces in divergence form, `f = div F`, with Fourier time dependence.
//!
//! The preset is a Gaussian tensor `F(x, t) = a(t) G(x) M` with
//! `G = exp(-|x - c|^2 / s^2)`, so `f_i = a(t) sum_j M_ij d_j G`. A Gaussian
//! point force `f = a(t) G(x) b` carries a net force; its tensor is
//! `b (x) grad phi` with `lap phi = G` in the whole space.

use crate::error::{Error, Result};
use crate::geometry::TruncatedDomain;
use crate::mac::Grid;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `a(t) = mean + sum_n (cos_n cos(n w t) + sin_n sin(n w t))`, `w = 2 pi / T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSeries {
    pub period: f64,
    #[serde(default)]
    pub mean: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl TimeSeries {
    pub fn constant(period: f64, v: f64) -> Self {
        TimeSeries { period, mean: v, cos: vec![], sin: vec![] }
    }

    pub fn cosine(period: f64, amp: f64) -> Self {
        TimeSeries { period, mean: 0.0, cos: vec![amp], sin: vec![] }
    }

    /// `d^order a / dt^order`.
    pub fn derivative(&self, t: f64, order: u32) -> f64 {
        let w = 2.0 * PI / self.period;
        let mut s = if order == 0 { self.mean } else { 0.0 };
        let n_max = self.cos.len().max(self.sin.len());
        for n in 1..=n_max {
            let a = self.cos.get(n - 1).copied().unwrap_or(0.0);
            let b = self.sin.get(n - 1).copied().unwrap_or(0.0);
            let k = n as f64 * w;
            let ph = k * t;
            // d^m/dt^m of cos and sin via phase shift m pi / 2
            let shift = order as f64 * PI / 2.0;
            s += k.powi(order as i32) * (a * (ph + shift).cos() + b * (ph + shift).sin());
        }
        s
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.derivative(t, 0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        TimeSeries {
            period: self.period,
            mean: c * self.mean,
            cos: self.cos.iter().map(|v| c * v).collect(),
            sin: self.sin.iter().map(|v| c * v).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mean == 0.0 && self.cos.iter().chain(&self.sin).all(|v| *v == 0.0)
    }

    /// Highest harmonic present.
    pub fn bandwidth(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianTensor {
    pub center: [f64; 3],
    pub width: f64,
    pub matrix: [[f64; 3]; 3],
    pub time: TimeSeries,
}

impl GaussianTensor {
    fn g(&self, x: [f64; 3]) -> f64 {
        let r2: f64 = (0..3).map(|i| (x[i] - self.center[i]).powi(2)).sum();
        (-r2 / (self.width * self.width)).exp()
    }

    /// Spatial part of `f` at `x` (without `a(t)`).
    pub fn profile(&self, x: [f64; 3]) -> [f64; 3] {
        let g = self.g(x);
        let s2 = self.width * self.width;
        let grad = [0, 1, 2].map(|j| -2.0 * (x[j] - self.center[j]) / s2 * g);
        [0, 1, 2].map(|i| (0..3).map(|j| self.matrix[i][j] * grad[j]).sum())
    }

    fn frobenius(&self) -> f64 {
        self.matrix.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianForce {
    pub center: [f64; 3],
    pub width: f64,
    pub vector: [f64; 3],
    pub time: TimeSeries,
}

impl GaussianForce {
    fn g(&self, x: [f64; 3]) -> f64 {
        let r2: f64 = (0..3).map(|i| (x[i] - self.center[i]).powi(2)).sum();
        (-r2 / (self.width * self.width)).exp()
    }

    pub fn profile(&self, x: [f64; 3]) -> [f64; 3] {
        let g = self.g(x);
        self.vector.map(|b| b * g)
    }

    /// `||grad phi||_2` for `lap phi = G` in the whole space.
    pub fn potential_norm(&self) -> f64 {
        let s = self.width;
        (2f64.sqrt() * PI.powf(1.5) * s.powi(5) / 4.0).sqrt()
    }

    fn magnitude(&self) -> f64 {
        crate::mac::norm3(self.vector)
    }

    /// `grad phi` for `lap phi = G` in the whole space, from the mass of `G`
    /// inside the ball through `x`.
    pub fn potential_gradient(&self, x: [f64; 3]) -> [f64; 3] {
        let d = [0, 1, 2].map(|i| x[i] - self.center[i]);
        let r = crate::mac::norm3(d);
        let s = self.width;
        let q = r / s;
        if q < 1e-4 {
            // mass ~ (4 pi / 3) r^3 near the centre
            return d.map(|v| v / 3.0);
        }
        let mass = PI.powf(1.5) * s.powi(3) * libm::erf(q) - 2.0 * PI * s * s * r * (-q * q).exp();
        let c = mass / (4.0 * PI * r * r * r);
        d.map(|v| c * v)
    }

    /// `int f dx` without `a(t)`.
    pub fn net_force(&self) -> [f64; 3] {
        let m = PI.powf(1.5) * self.width.powi(3);
        self.vector.map(|b| b * m)
    }
}

/// Sum of Gaussian tensor terms and point forces; empty means `f = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Forcing {
    #[serde(default)]
    pub terms: Vec<GaussianTensor>,
    #[serde(default)]
    pub forces: Vec<GaussianForce>,
}

/// Norms of the data over one period on a given domain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct DataNorms {
    pub f_l2l2: f64,
    pub f_w12l2: f64,
    pub calf_l2l2: f64,
    pub calf_w12l2: f64,
    pub xi_w12: f64,
    pub xi_w22: f64,
    pub omega_w12: f64,
    pub omega_w22: f64,
}

impl Forcing {
    pub fn zero() -> Self {
        Forcing { terms: vec![], forces: vec![] }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.time.is_zero() || t.frobenius() == 0.0)
            && self.forces.iter().all(|t| t.time.is_zero() || t.magnitude() == 0.0)
    }

    pub fn validate(&self, period: f64) -> Result<()> {
        let shapes = self.terms.iter().map(|t| (t.width, &t.time)).chain(self.forces.iter().map(|t| (t.width, &t.time)));
        for (width, time) in shapes {
            if !(width > 0.0 && width.is_finite()) {
                return Err(Error::Manifest(format!("forcing width must be positive, got {width}")));
            }
            if (time.period - period).abs() > 1e-12 * period {
                return Err(Error::Manifest(format!(
                    "forcing period {} differs from the motion period {period}",
                    time.period
                )));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Forcing {
            terms: self
                .terms
                .iter()
                .map(|t| GaussianTensor { time: t.time.scaled(c), ..t.clone() })
                .collect(),
            forces: self
                .forces
                .iter()
                .map(|t| GaussianForce { time: t.time.scaled(c), ..t.clone() })
                .collect(),
        }
    }

    pub fn bandwidth(&self) -> usize {
        self.series().map(|t| t.bandwidth()).max().unwrap_or(0)
    }

    /// Time factors of the tensor terms, then of the point forces, matching
    /// the order of [`Forcing::profiles`].
    pub fn series(&self) -> impl Iterator<Item = &TimeSeries> {
        self.terms.iter().map(|t| &t.time).chain(self.forces.iter().map(|t| &t.time))
    }

    /// `f(x, t)` evaluated pointwise.
    pub fn eval(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        let profs = self.terms.iter().map(|a| (a.profile(x), &a.time)).chain(self.forces.iter().map(|a| (a.profile(x), &a.time)));
        for (p, time) in profs {
            let a = time.eval(t);
            for d in 0..3 {
                out[d] += a * p[d];
            }
        }
        out
    }

    /// The tensor `B` with `div B = f`: `G M` for tensor terms and
    /// `v (x) grad phi` for point forces.
    pub fn tensor_at(&self, x: [f64; 3], t: f64) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for term in &self.terms {
            let a = term.time.eval(t) * term.g(x);
            for i in 0..3 {
                for j in 0..3 {
                    out[i][j] += a * term.matrix[i][j];
                }
            }
        }
        for force in &self.forces {
            let a = force.time.eval(t);
            let gp = force.potential_gradient(x);
            for i in 0..3 {
                for j in 0..3 {
                    out[i][j] += a * force.vector[i] * gp[j];
                }
            }
        }
        out
    }

    /// Spatial profiles on the full face grid, one per term (tensors first).
    pub fn profiles(&self, grid: &Grid) -> Vec<Vec<f64>> {
        self.terms
            .iter()
            .map(|t| grid.sample_faces(|x| t.profile(x)))
            .chain(self.forces.iter().map(|t| grid.sample_faces(|x| t.profile(x))))
            .collect()
    }

    /// `d^order f / dt^order` on the full face grid.
    pub fn sample(&self, grid: &Grid, profiles: &[Vec<f64>], t: f64, order: u32) -> Vec<f64> {
        let mut out = vec![0.0; grid.n_faces()];
        for (time, p) in self.series().zip(profiles) {
            let a = time.derivative(t, order);
            if a != 0.0 {
                crate::linalg::axpy(a, p, &mut out);
            }
        }
        out
    }

    /// Data norms by quadrature on `domain` over `samples` time points.
    pub fn norms(&self, domain: &TruncatedDomain, motion: &crate::motion::RigidMotionSpec, samples: usize) -> DataNorms {
        let g = domain.grid;
        let dv = g.cell_volume();
        let profiles: Vec<Vec<f64>> = self.profiles(&g).iter().map(|p| domain.gather(p)).collect();
        let series: Vec<&TimeSeries> = self.series().collect();
        let nf = series.len();
        // (f_m, f_n) on the active faces over every term
        let mut ff = vec![vec![0.0; nf]; nf];
        for a in 0..nf {
            for b in 0..nf {
                ff[a][b] = crate::linalg::dot(&profiles[a], &profiles[b]) * dv;
            }
        }
        // (G_m, G_n) * (M_m : M_n) on fluid cells for the tensor terms
        let nt = self.terms.len();
        let mut gg = vec![vec![0.0; nt]; nt];
        let gvals: Vec<Vec<f64>> = self
            .terms
            .iter()
            .map(|t| domain.fluid_cells.iter().map(|&c| t.g(g.cell_center(g.cell_coords(c)))).collect())
            .collect();
        for a in 0..nt {
            for b in 0..nt {
                let mm: f64 = (0..3)
                    .flat_map(|i| (0..3).map(move |j| (i, j)))
                    .map(|(i, j)| self.terms[a].matrix[i][j] * self.terms[b].matrix[i][j])
                    .sum();
                gg[a][b] = crate::linalg::dot(&gvals[a], &gvals[b]) * dv * mm;
            }
        }
        let period = motion.period;
        let dt = period / samples as f64;
        // point forces enter the tensor norm through the triangle inequality
        let quad = |gram: &Vec<Vec<f64>>, order: u32, with_forces: bool| -> f64 {
            (0..samples)
                .map(|s| {
                    let t = s as f64 * dt;
                    let m = gram.len();
                    let a: Vec<f64> = series.iter().take(m).map(|x| x.derivative(t, order)).collect();
                    let mut q = 0.0;
                    for i in 0..m {
                        for j in 0..m {
                            q += a[i] * a[j] * gram[i][j];
                        }
                    }
                    if with_forces {
                        let extra: f64 = self
                            .forces
                            .iter()
                            .map(|p| (p.time.derivative(t, order) * p.magnitude()).abs() * p.potential_norm())
                            .sum();
                        let r = q.max(0.0).sqrt() + extra;
                        r * r
                    } else {
                        q
                    }
                })
                .sum::<f64>()
                * dt
        };
        let f0 = quad(&ff, 0, false);
        let f1 = quad(&ff, 1, false);
        let c0 = quad(&gg, 0, true);
        let c1 = quad(&gg, 1, true);
        DataNorms {
            f_l2l2: f0.sqrt(),
            f_w12l2: (f0 + f1).sqrt(),
            calf_l2l2: c0.sqrt(),
            calf_w12l2: (c0 + c1).sqrt(),
            xi_w12: motion.xi.sobolev_norm(1),
            xi_w22: motion.xi.sobolev_norm(2),
            omega_w12: motion.omega.sobolev_norm(1),
            omega_w22: motion.omega.sobolev_norm(2),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_series_derivatives() {
        let a = TimeSeries { period: 2.0, mean: 0.5, cos: vec![1.0, 0.0], sin: vec![0.0, 0.3] };
        let w = PI;
        let t = 0.41;
        let exact = |t: f64| 0.5 + (w * t).cos() + 0.3 * (2.0 * w * t).sin();
        let d1 = -w * (w * t).sin() + 0.6 * w * (2.0 * w * t).cos();
        let d2 = -w * w * (w * t).cos() - 1.2 * w * w * (2.0 * w * t).sin();
        assert!((a.eval(t) - exact(t)).abs() < 1e-14);
        assert!((a.derivative(t, 1) - d1).abs() < 1e-12);
        assert!((a.derivative(t, 2) - d2).abs() < 1e-12);
    }

    #[test]
    fn point_force_potential_norm_matches_quadrature() {
        // ||grad phi||^2 = int |G^|^2 / |k|^2 dk / (2 pi)^3, radial quadrature
        let p = GaussianForce { center: [0.0; 3], width: 0.7, vector: [1.0, 0.0, 0.0], time: TimeSeries::constant(1.0, 1.0) };
        let s = p.width;
        let n = 20000;
        let kmax = 40.0 / s;
        let dk = kmax / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let k = (i as f64 + 0.5) * dk;
            let gh = PI.powf(1.5) * s.powi(3) * (-s * s * k * k / 4.0).exp();
            acc += gh * gh * 4.0 * PI * dk;
        }
        let quad = (acc / (8.0 * PI.powi(3))).sqrt();
        assert!((quad / p.potential_norm() - 1.0).abs() < 1e-8);
        let f = p.net_force();
        assert!((f[0] - PI.powf(1.5) * s.powi(3)).abs() < 1e-14);
    }

    #[test]
    fn profile_is_divergence_of_tensor() {
        let term = GaussianTensor {
            center: [0.5, -0.2, 0.1],
            width: 0.8,
            matrix: [[1.0, 0.2, 0.0], [0.0, 0.5, -0.3], [0.1, 0.0, 1.0]],
            time: TimeSeries::constant(1.0, 1.0),
        };
        let x = [0.9, 0.3, -0.4];
        let eps = 1e-5;
        let f = term.profile(x);
        for i in 0..3 {
            let mut div = 0.0;
            for j in 0..3 {
                let mut xp = x;
                xp[j] += eps;
                let mut xm = x;
                xm[j] -= eps;
                div += term.matrix[i][j] * (term.g(xp) - term.g(xm)) / (2.0 * eps);
            }
            assert!((div - f[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn tensor_divergence_reproduces_the_force() {
        let f = Forcing {
            terms: vec![GaussianTensor {
                center: [0.2, 0.0, -0.3],
                width: 0.9,
                matrix: [[0.3, 0.0, 1.0], [0.2, -0.4, 0.0], [0.0, 0.1, 0.5]],
                time: TimeSeries::cosine(2.0, 1.5),
            }],
            forces: vec![GaussianForce {
                center: [-0.4, 0.5, 0.1],
                width: 0.6,
                vector: [1.0, -0.5, 0.25],
                time: TimeSeries { period: 2.0, mean: 0.7, cos: vec![], sin: vec![0.4] },
            }],
        };
        let t = 0.3;
        let eps = 1e-4;
        for x in [[0.9, 0.3, -0.4], [-0.4, 0.5, 0.1], [2.5, -1.0, 0.7]] {
            let mut div = [0.0; 3];
            for j in 0..3 {
                let mut xp = x;
                xp[j] += eps;
                let mut xm = x;
                xm[j] -= eps;
                let (bp, bm) = (f.tensor_at(xp, t), f.tensor_at(xm, t));
                for i in 0..3 {
                    div[i] += (bp[i][j] - bm[i][j]) / (2.0 * eps);
                }
            }
            let exact = f.eval(x, t);
            for i in 0..3 {
                assert!((div[i] - exact[i]).abs() < 1e-6, "{x:?} {div:?} {exact:?}");
            }
        }
    }
}
