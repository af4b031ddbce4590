//! Bochner and Sobolev-in-time norms of sampled fields and scalar paths.
//!
//! Time integrals use the periodic trapezoid rule on the field's time grid,
//! space integrals the midpoint rule over fluid cells. The second-order
//! seminorm is evaluated as `||lap u||_2`.

use crate::fields::laplacian;
use crate::geometry::TruncatedDomain;
use crate::linalg::dot;
use crate::linear::estimates::{grad_norm_full, lq_norm};
use crate::linear::PeriodicField;
use crate::motion::FourierPath;
use crate::nonlinear::norms::weighted_sup;
use crate::time::TimeGrid;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

/// `||.||_{L^2(0,T;B)}` and `||.||_{L^inf(0,T;B)}` of one quantity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Bochner {
    pub l2: f64,
    pub linf: f64,
}

impl Bochner {
    /// From per-sample spatial norms.
    pub fn from_samples(tgrid: &TimeGrid, values: &[f64]) -> Self {
        let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
        Bochner { l2: tgrid.integrate(&sq).sqrt(), linf: values.iter().copied().fold(0.0, f64::max) }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct NormBundle {
    pub period: f64,
    pub n_t: usize,
    pub l2: Bochner,
    pub l3: Bochner,
    pub l6: Bochner,
    pub d12: Bochner,
    pub d22: Bochner,
    /// `[u]_{inf,1,lambda}` and `[u]_{inf,2,lambda}` as grid sups.
    pub weighted_1: f64,
    pub weighted_2: f64,
    /// `int_0^T ||u||_2^2` by quadrature and by the sum over time modes.
    pub energy_quadrature: f64,
    pub energy_modes: f64,
    pub parseval_defect: f64,
}

impl NormBundle {
    /// `||u||_{L^2(L^2)} <= sqrt(T) ||u||_{L^inf(L^2)}`, with rounding slack.
    pub fn time_embedding_holds(&self) -> bool {
        self.l2.l2 <= self.period.sqrt() * self.l2.linf * (1.0 + 1e-12)
    }
}

fn l2_active(dom: &TruncatedDomain, full: &[f64]) -> f64 {
    let a = dom.gather(full);
    (dot(&a, &a) * dom.grid.cell_volume()).sqrt()
}

/// `T sum_k |a_k|^2` with `a_k` the discrete Fourier coefficients in time of
/// every active-face component.
pub fn mode_energy(dom: &TruncatedDomain, tgrid: &TimeGrid, samples: &[Vec<f64>]) -> f64 {
    let n = samples.len();
    if n == 0 {
        return 0.0;
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let active: Vec<Vec<f64>> = samples.iter().map(|s| dom.gather(s)).collect();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut total = 0.0;
    for f in 0..active[0].len() {
        for (b, s) in buf.iter_mut().zip(&active) {
            *b = Complex64::new(s[f], 0.0);
        }
        fft.process(&mut buf);
        total += buf.iter().map(|c| c.norm_sqr()).sum::<f64>();
    }
    let nf = n as f64;
    tgrid.period * total / (nf * nf) * dom.grid.cell_volume()
}

/// Norms of the full velocity `u = v + u~` of a periodic field.
pub fn compute_norms(field: &PeriodicField, lambda: f64) -> NormBundle {
    let dom = &field.basis.domain;
    let tg = field.tgrid;
    let g = dom.grid;
    let samples: Vec<Vec<f64>> = (0..field.n_samples()).map(|n| field.u_full(n)).collect();
    let per = |f: &dyn Fn(&Vec<f64>) -> f64| -> Vec<f64> { samples.iter().map(f).collect() };
    let l2 = per(&|u| l2_active(dom, u));
    let (mut w1, mut w2) = (0.0f64, 0.0f64);
    for u in &samples {
        w1 = w1.max(weighted_sup(dom, u, lambda, 1).0);
        w2 = w2.max(weighted_sup(dom, u, lambda, 2).0);
    }
    let energy_quadrature = tg.integrate(&l2.iter().map(|v| v * v).collect::<Vec<_>>());
    let energy_modes = mode_energy(dom, &tg, &samples);
    let scale = energy_quadrature.abs().max(energy_modes.abs());
    NormBundle {
        period: tg.period,
        n_t: tg.n,
        l2: Bochner::from_samples(&tg, &l2),
        l3: Bochner::from_samples(&tg, &per(&|u| lq_norm(dom, u, 3.0))),
        l6: Bochner::from_samples(&tg, &per(&|u| lq_norm(dom, u, 6.0))),
        d12: Bochner::from_samples(&tg, &per(&|u| grad_norm_full(dom, u))),
        d22: Bochner::from_samples(&tg, &per(&|u| l2_active(dom, &laplacian(&g, u)))),
        weighted_1: w1,
        weighted_2: w2,
        energy_quadrature,
        energy_modes,
        parseval_defect: if scale > 0.0 { (energy_quadrature - energy_modes).abs() / scale } else { 0.0 },
    }
}

/// `W^{m,2}(0,T)` norms of a vector path, `m = 0, 1, 2`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PathNorms {
    /// From the Fourier coefficients.
    pub modes: [f64; 3],
    /// Trapezoid rule on `samples` points.
    pub quadrature: [f64; 3],
    pub parseval_defect: f64,
}

pub fn path_norms(path: &FourierPath, samples: usize) -> PathNorms {
    let modes = [0, 1, 2].map(|m| path.sobolev_norm(m));
    let quadrature = [0, 1, 2].map(|m| path.sobolev_norm_quadrature(m, samples));
    let parseval_defect = modes
        .iter()
        .zip(&quadrature)
        .map(|(a, b)| if a.max(*b) > 0.0 { (a - b).abs() / a.max(*b) } else { 0.0 })
        .fold(0.0, f64::max);
    PathNorms { modes, quadrature, parseval_defect }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::Preset;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_in_time_is_sqrt_t_times_space_norm() {
        let tg = TimeGrid::new(3.0, 8).unwrap();
        let b = Bochner::from_samples(&tg, &[2.0; 8]);
        assert!((b.l2 - 3f64.sqrt() * 2.0).abs() < 1e-14);
        assert_eq!(b.linf, 2.0);
    }

    #[test]
    fn cosine_path_norms_match_closed_form() {
        let t = 2.5;
        let p = FourierPath::trig(t, [0.0; 3], &[([1.0, 0.0, 0.0], [0.0; 3])]);
        let n = path_norms(&p, 64);
        let w = 2.0 * PI / t;
        let l2sq = t / 2.0;
        assert!((n.modes[0] - l2sq.sqrt()).abs() < 1e-12);
        assert!((n.modes[1] - (l2sq * (1.0 + w * w)).sqrt()).abs() < 1e-12);
        assert!((n.modes[2] - (l2sq * (1.0 + w * w + w.powi(4))).sqrt()).abs() < 1e-12);
        assert!(n.parseval_defect < 1e-12, "{}", n.parseval_defect);
    }

    #[test]
    fn field_parseval_and_embedding() {
        let cfg = Preset::Smooth.linear_config(4.0, 0.5, 6, 8, 1.0);
        let run = crate::linear::run_linear(&cfg).unwrap();
        let b = compute_norms(&run.field, cfg.motion.lambda);
        assert!(b.parseval_defect < 1e-8, "{}", b.parseval_defect);
        assert!(b.time_embedding_holds());
        assert!(b.l2.l2 > 0.0 && b.d12.linf > 0.0 && b.d22.l2 > 0.0);
        // weight >= 1, so the weighted sup dominates the plain one
        assert!(b.weighted_2 >= b.weighted_1);
    }

    proptest! {
        #[test]
        fn l2_in_time_is_dominated_by_sup(v in (2usize..20).prop_flat_map(|n| prop::collection::vec(0.0f64..1e3, 2 * n)), t in 0.1f64..10.0) {
            let tg = TimeGrid::new(t, v.len()).unwrap();
            let b = Bochner::from_samples(&tg, &v);
            prop_assert!(b.l2 <= t.sqrt() * b.linf * (1.0 + 1e-12));
        }

        #[test]
        fn random_path_parseval(c in prop::collection::vec(-1.0f64..1.0, 6), t in 0.5f64..5.0) {
            let p = FourierPath::trig(t, [c[0], 0.0, c[1]], &[([c[2], c[3], 0.0], [0.0, c[4], c[5]])]);
            prop_assert!(path_norms(&p, 32).parseval_defect < 1e-8);
        }
    }
}
