//! Solenoidal extension of the rigid boundary motion.
//!
//! `u~ = curl(zeta Psi)` with `Psi = xi x x / 2 - |x|^2 omega / 2`, whose curl
//! is `xi + omega x x`. The curl is taken discretely from edge samples, so
//! `div_h u~ = 0` to rounding and `u~ = V` on faces whose surrounding edges
//! sit in the plateau `zeta = 1`. `zeta` is a Hopf-type log cut-off in the
//! distance `d = |x| - radius`: 1 for `d <= a`, 0 for `d >= b`, a smoothed
//! `log(b/d) / log(b/a)` in between. Thinning the layer (smaller `a`) lowers
//! `eps`, the convective coupling constant.
//!
//! The field is linear in `(xi, omega)`, so six basis fields (one per
//! component) cover every time sample.

use super::eigen::StokesBasis;
use super::ops::LerayProjector;
use crate::error::{Error, Result};
use crate::fields::{advect, curl_edges, edge_pos, inner, sample_edges, Adv};
use crate::geometry::{smooth_step, TruncatedDomain};
use crate::linalg::sym_eigen_sorted;
use crate::mac::{cross, norm3, Grid};
use crate::motion::RigidMotionSpec;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Number of random solenoidal probes added to the eps certificate.
const RANDOM_PROBES: usize = 4;
/// Time samples per period for the eps sup.
const EPS_TIME_SAMPLES: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HopfCutoff {
    pub radius: f64,
    pub a: f64,
    pub b: f64,
}

impl HopfCutoff {
    pub fn value(&self, x: [f64; 3]) -> f64 {
        let d = norm3(x) - self.radius;
        if d <= self.a {
            1.0
        } else if d >= self.b {
            0.0
        } else {
            1.0 - smooth_step((d / self.a).ln() / (self.b / self.a).ln())
        }
    }
}

/// `u~(t) = sum_b m_b(t) basis[b]`, `m = (xi_1, xi_2, xi_3, omega_1, omega_2, omega_3)`.
#[derive(Clone, Debug)]
pub struct ExtensionField {
    pub grid: Grid,
    pub motion: RigidMotionSpec,
    pub cutoff: HopfCutoff,
    /// Support radius: `u~ = 0` on faces with `|x| >= rho`.
    pub rho: f64,
    /// Full face arrays.
    pub basis: Vec<Vec<f64>>,
    /// Measured eps of the convective smallness condition.
    pub epsilon: f64,
    /// Layers tried, `(a, eps)`.
    pub attempts: Vec<(f64, f64)>,
}

/// Unit motion of component `b`.
pub fn unit_motion(b: usize) -> ([f64; 3], [f64; 3]) {
    let mut xi = [0.0; 3];
    let mut om = [0.0; 3];
    if b < 3 {
        xi[b] = 1.0;
    } else {
        om[b - 3] = 1.0;
    }
    (xi, om)
}

/// `(xi, omega)` components (or their time derivatives) at time `t`.
pub fn motion_weights(motion: &RigidMotionSpec, t: f64, order: u32) -> [f64; 6] {
    let xi = motion.xi.derivative(t, order);
    let om = motion.omega.derivative(t, order);
    [xi[0], xi[1], xi[2], om[0], om[1], om[2]]
}

fn extension_basis(grid: &Grid, cut: &HopfCutoff) -> Vec<Vec<f64>> {
    (0..6)
        .map(|b| {
            let (xi, om) = unit_motion(b);
            let a = sample_edges(grid, |x| {
                let z = cut.value(x);
                if z == 0.0 {
                    return [0.0; 3];
                }
                let t = cross(xi, x);
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                [0, 1, 2].map(|e| z * (0.5 * t[e] - 0.5 * r2 * om[e]))
            });
            curl_edges(grid, &a)
        })
        .collect()
}

impl ExtensionField {
    pub fn is_zero(&self) -> bool {
        self.motion.is_at_rest()
    }

    fn combine(&self, w: &[f64; 6]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.n_faces()];
        for (b, &m) in w.iter().enumerate() {
            if m != 0.0 {
                crate::linalg::axpy(m, &self.basis[b], &mut out);
            }
        }
        out
    }

    /// `u~(t)` on the full grid.
    pub fn at(&self, t: f64) -> Vec<f64> {
        self.combine(&motion_weights(&self.motion, t, 0))
    }

    /// `d^order u~ / dt^order` at `t`, exact in time.
    pub fn time_derivative(&self, t: f64, order: u32) -> Vec<f64> {
        self.combine(&motion_weights(&self.motion, t, order))
    }

    /// Largest `|u~ - (xi + omega x x)|` over the body boundary faces at `t`.
    pub fn trace_error(&self, domain: &TruncatedDomain, t: f64) -> f64 {
        let u = self.at(t);
        let xi = self.motion.xi_at(t);
        let om = self.motion.omega_at(t);
        let g = &self.grid;
        domain
            .boundary_faces
            .iter()
            .filter(|(_, w)| *w == crate::geometry::Wall::Body)
            .map(|&(f, _)| {
                let (d, c) = g.face_coords(f);
                let x = g.face_pos(d, c);
                let v = xi[d] + cross(om, x)[d];
                (u[f] - v).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// `eps = sup_t sup_v |(v . grad u~(t), v)| / ||grad v||^2`, with `v` over the
/// span of the basis (exact generalized eigenvalue) and a few random
/// discretely solenoidal fields.
fn measure_epsilon(
    grid: &Grid,
    basis_fields: &[Vec<f64>],
    motion: &RigidMotionSpec,
    stokes: &StokesBasis,
    projector: &LerayProjector,
    seed: u64,
) -> f64 {
    let dom = &stokes.domain;
    let k = stokes.k();
    let full_w: Vec<Vec<f64>> = stokes.fields.iter().map(|w| dom.scatter(w)).collect();
    // N_b[i][j] = (w_i . grad u~_b, w_j)
    let mut nb: Vec<DMatrix<f64>> = Vec::with_capacity(6);
    for ub in basis_fields {
        let mut m = DMatrix::zeros(k, k);
        for i in 0..k {
            let a = advect(grid, Adv::Faces(&full_w[i]), ub);
            for j in 0..k {
                m[(i, j)] = inner(grid, &a, &full_w[j]);
            }
        }
        nb.push((&m + m.transpose()) * 0.5);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probes: Vec<(Vec<f64>, f64)> = (0..RANDOM_PROBES)
        .map(|_| {
            let raw: Vec<f64> = (0..dom.n_active()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v = projector.apply(&raw);
            let mut lv = vec![0.0; v.len()];
            projector.ops.neg_lap.matvec(&v, &mut lv);
            let grad2 = crate::linalg::dot(&v, &lv) * grid.cell_volume();
            (dom.scatter(&v), grad2)
        })
        .collect();
    let probe_forms: Vec<[f64; 6]> = probes
        .iter()
        .map(|(v, _)| {
            let mut out = [0.0; 6];
            for (b, ub) in basis_fields.iter().enumerate() {
                out[b] = inner(grid, &advect(grid, Adv::Faces(v), ub), v);
            }
            out
        })
        .collect();
    let inv_sqrt: Vec<f64> = stokes.eigenvalues.iter().map(|l| 1.0 / l.sqrt()).collect();
    let mut eps: f64 = 0.0;
    for s in 0..EPS_TIME_SAMPLES {
        let t = motion.period * s as f64 / EPS_TIME_SAMPLES as f64;
        let w = motion_weights(motion, t, 0);
        if k > 0 {
            let mut m = DMatrix::zeros(k, k);
            for b in 0..6 {
                if w[b] != 0.0 {
                    m += &nb[b] * w[b];
                }
            }
            for i in 0..k {
                for j in 0..k {
                    m[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
                }
            }
            let (vals, _) = sym_eigen_sorted(m);
            eps = eps.max(vals.iter().fold(0.0f64, |a, v| a.max(v.abs())));
        }
        for (form, (_, g2)) in probe_forms.iter().zip(&probes) {
            let q: f64 = (0..6).map(|b| w[b] * form[b]).sum();
            if *g2 > 0.0 {
                eps = eps.max(q.abs() / g2);
            }
        }
    }
    eps
}

/// Builds `u~` with support radius `rho`, halving the inner layer radius until
/// the measured eps reaches `eps_target` or the plateau no longer covers the
/// edges of the discrete body faces (see [`plateau_radius`]).
pub fn build_extension(
    motion: &RigidMotionSpec,
    stokes: &StokesBasis,
    projector: &LerayProjector,
    rho: f64,
    eps_target: f64,
) -> Result<ExtensionField> {
    let dom = &stokes.domain;
    let grid = dom.grid;
    let h = grid.h;
    if !(rho < 0.5 * dom.r) {
        return Err(Error::Precondition(format!("rho = {rho} must be below R/2 = {}", 0.5 * dom.r)));
    }
    if !(eps_target > 0.0 && eps_target <= 0.25) {
        return Err(Error::Precondition(format!("eps target {eps_target} outside (0, 1/4]")));
    }
    let radius = dom.body.radius;
    // Faces at |x| >= rho only see edges at |x| >= rho - h / sqrt 2.
    let b = rho - radius - h * std::f64::consts::FRAC_1_SQRT_2;
    let a_min = plateau_radius(dom).max(1e-3 * h);
    if b <= a_min {
        return Err(Error::Resolution(format!(
            "extension layer [{a_min}, {b}] empty; rho = {rho} is too close to the body at h = {h}"
        )));
    }
    if motion.is_at_rest() {
        let cutoff = HopfCutoff { radius, a: 0.5 * b, b };
        return Ok(ExtensionField {
            grid,
            motion: motion.clone(),
            cutoff,
            rho,
            basis: vec![vec![0.0; grid.n_faces()]; 6],
            epsilon: 0.0,
            attempts: vec![(cutoff.a, 0.0)],
        });
    }
    let mut a = (0.5 * b).max(a_min);
    let mut attempts = Vec::new();
    loop {
        let cutoff = HopfCutoff { radius, a, b };
        let basis = extension_basis(&grid, &cutoff);
        let eps = measure_epsilon(&grid, &basis, motion, stokes, projector, 0xe95);
        attempts.push((a, eps));
        if eps <= eps_target {
            return Ok(ExtensionField { grid, motion: motion.clone(), cutoff, rho, basis, epsilon: eps, attempts });
        }
        if 0.5 * a < a_min {
            return Err(Error::ExtensionSmallness { achieved: eps, target: eps_target });
        }
        a *= 0.5;
    }
}

/// Same construction with a fixed layer and no eps gate (eps still measured).
pub fn build_extension_fixed(
    motion: &RigidMotionSpec,
    stokes: &StokesBasis,
    projector: &LerayProjector,
    rho: f64,
    a: f64,
) -> Result<ExtensionField> {
    let dom = &stokes.domain;
    let grid = dom.grid;
    let b = rho - dom.body.radius - grid.h * std::f64::consts::FRAC_1_SQRT_2;
    if !(a >= plateau_radius(dom) && a < b) {
        return Err(Error::Resolution(format!("layer [{a}, {b}] empty")));
    }
    let cutoff = HopfCutoff { radius: dom.body.radius, a, b };
    let basis = extension_basis(&grid, &cutoff);
    let epsilon = if motion.is_at_rest() { 0.0 } else { measure_epsilon(&grid, &basis, motion, stokes, projector, 0xe95) };
    Ok(ExtensionField { grid, motion: motion.clone(), cutoff, rho, basis, epsilon, attempts: vec![(a, epsilon)] })
}

/// Largest distance to the sphere over the edges bounding body faces; the
/// plateau `zeta = 1` must reach this far for the trace to be exact.
pub fn plateau_radius(domain: &TruncatedDomain) -> f64 {
    let g = &domain.grid;
    let radius = domain.body.radius;
    let mut out: f64 = 0.0;
    for &(f, w) in &domain.boundary_faces {
        if w != crate::geometry::Wall::Body {
            continue;
        }
        let (d, c) = g.face_coords(f);
        let (p, q) = ((d + 1) % 3, (d + 2) % 3);
        let mut cp = c;
        cp[p] += 1;
        let mut cq = c;
        cq[q] += 1;
        for (e, ec) in [(q, c), (q, cp), (p, c), (p, cq)] {
            out = out.max(norm3(edge_pos(g, e, ec)) - radius);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_truncated_domain, BodySpec};
    use crate::motion::FourierPath;
    use crate::stokes::{assemble_projector, solve_stokes_eigs, EigenOptions};
    use std::sync::Arc;

    fn setup(r: f64, h: f64, k: usize) -> (LerayProjector, StokesBasis) {
        let d = Arc::new(build_truncated_domain(BodySpec::sphere(1.0).unwrap(), r, h).unwrap());
        let p = assemble_projector(d).unwrap();
        let b = solve_stokes_eigs(&p, k, EigenOptions::default()).unwrap();
        (p, b)
    }

    fn translation(amp: f64) -> RigidMotionSpec {
        RigidMotionSpec::new(
            FourierPath::trig(1.0, [amp, 0.0, 0.0], &[]),
            FourierPath::zero(1.0),
            crate::motion::E1,
        )
        .unwrap()
    }

    #[test]
    fn rest_gives_zero_field() {
        let (p, b) = setup(4.0, 0.5, 4);
        let m = RigidMotionSpec::at_rest(1.0);
        let e = build_extension(&m, &b, &p, 1.9, 0.25).unwrap();
        assert_eq!(e.epsilon, 0.0);
        assert!(e.at(0.3).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn solenoidal_supported_and_exact_on_body() {
        let (p, b) = setup(4.0, 0.5, 8);
        let m = RigidMotionSpec::new(
            FourierPath::trig(1.0, [0.1, 0.0, 0.0], &[([0.0, 0.05, 0.0], [0.02, 0.0, 0.0])]),
            FourierPath::trig(1.0, [0.0; 3], &[([0.0, 0.0, 0.1], [0.0; 3])]),
            crate::motion::E1,
        )
        .unwrap();
        let e = build_extension_fixed(&m, &b, &p, 1.9, plateau_radius(&b.domain)).unwrap();
        let g = e.grid;
        for s in 0..5 {
            let t = 0.2 * s as f64;
            let u = e.at(t);
            let div = crate::fields::divergence(&g, &u);
            assert!(div.iter().all(|v| v.abs() < 1e-10));
            assert!(e.trace_error(&b.domain, t) < 1e-12, "{}", e.trace_error(&b.domain, t));
            for f in 0..g.n_faces() {
                let (d, c) = g.face_coords(f);
                if norm3(g.face_pos(d, c)) >= e.rho {
                    assert_eq!(u[f], 0.0);
                }
            }
        }
        // exact periodicity
        let a = e.at(0.25);
        let b2 = e.at(1.25);
        assert!(a.iter().zip(&b2).all(|(x, y)| (x - y).abs() < 1e-14));
    }

    #[test]
    fn eps_is_linear_in_amplitude() {
        let (p, b) = setup(4.0, 0.5, 8);
        let a = plateau_radius(&b.domain);
        let e1 = build_extension_fixed(&translation(0.1), &b, &p, 1.9, a).unwrap();
        let e2 = build_extension_fixed(&translation(0.2), &b, &p, 1.9, a).unwrap();
        eprintln!("eps {} {} a {}", e1.epsilon, e2.epsilon, a);
        assert!((e2.epsilon - 2.0 * e1.epsilon).abs() < 1e-9 * e1.epsilon.max(1e-12));
    }

    #[test]
    fn small_translation_meets_target() {
        let d = Arc::new(build_truncated_domain(BodySpec::sphere(1.0).unwrap(), 4.0, 1.0 / 6.0).unwrap());
        let p = assemble_projector(d).unwrap();
        let b = solve_stokes_eigs(&p, 8, EigenOptions::default()).unwrap();
        let e = build_extension(&translation(0.1), &b, &p, 1.9, 0.25).unwrap();
        eprintln!("attempts {:?}", e.attempts);
        assert!(e.epsilon <= 0.25);
    }
}
