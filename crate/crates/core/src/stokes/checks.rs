//! Functional inequalities replayed on the discrete basis.

use super::eigen::StokesBasis;
use super::ops::LerayProjector;
use crate::fields::{advect, cross, Adv};
use crate::geometry::TruncatedDomain;
use crate::linalg::{dot, norm};
use crate::mac::norm3;

/// `||u||_{1,2}` of an active-face vector.
pub fn h1_norm(p: &LerayProjector, u: &[f64]) -> f64 {
    let mut lu = vec![0.0; u.len()];
    p.ops.neg_lap.matvec(u, &mut lu);
    ((dot(u, u) + dot(u, &lu)) * p.domain().grid.cell_volume()).sqrt()
}

/// `||(I - P)(a x u - (b + a x x) . grad u)|| / ||u||_{1,2}`.
pub fn membership_check_h(p: &LerayProjector, u: &[f64], a: [f64; 3], b: [f64; 3]) -> f64 {
    let dom = p.domain();
    let g = dom.grid;
    let nrm = h1_norm(p, u);
    if nrm == 0.0 {
        return 0.0;
    }
    let full = dom.scatter(u);
    let rot = cross(&g, a, &full);
    let adv = advect(&g, Adv::Rigid { xi: b, omega: a }, &full);
    let r: Vec<f64> = rot.iter().zip(&adv).map(|(x, y)| x - y).collect();
    let r = dom.gather(&r);
    norm(&p.gradient_part(&r)) * g.cell_volume().sqrt() / nrm
}

/// Faces whose value is known: active faces and wall faces (zero).
fn known_faces(dom: &TruncatedDomain) -> Vec<bool> {
    let mut known = vec![false; dom.grid.n_faces()];
    for &f in &dom.active_faces {
        known[f] = true;
    }
    for &(f, _) in &dom.boundary_faces {
        known[f] = true;
    }
    known
}

/// `||D^2 w||_2` over faces whose second-difference stencil only touches
/// active or wall faces.
pub fn hessian_norm(dom: &TruncatedDomain, w: &[f64]) -> f64 {
    let g = dom.grid;
    let known = known_faces(dom);
    let full = dom.scatter(w);
    let ih2 = 1.0 / (g.h * g.h);
    let at = |d: usize, c: [usize; 3], off: [isize; 3]| -> Option<f64> {
        let mut q = c;
        for e in 0..3 {
            let v = c[e] as isize + off[e];
            let lim = g.face_dims(d)[e] as isize;
            if v < 0 || v >= lim {
                return None;
            }
            q[e] = v as usize;
        }
        let f = g.face_index(d, q);
        known[f].then(|| full[f])
    };
    let mut sum = 0.0;
    for &f in &dom.active_faces {
        let (d, c) = g.face_coords(f);
        let mut local = 0.0;
        let mut ok = true;
        'outer: for e in 0..3 {
            for e2 in e..3 {
                let val = if e == e2 {
                    let mut m = [0isize; 3];
                    m[e] = -1;
                    let mut p = [0isize; 3];
                    p[e] = 1;
                    match (at(d, c, m), at(d, c, p)) {
                        (Some(a), Some(b)) => (a - 2.0 * full[f] + b) * ih2,
                        _ => {
                            ok = false;
                            break 'outer;
                        }
                    }
                } else {
                    let mut acc = 0.0;
                    for (s1, s2, sg) in [(1, 1, 1.0), (-1, -1, 1.0), (1, -1, -1.0), (-1, 1, -1.0)] {
                        let mut o = [0isize; 3];
                        o[e] = s1;
                        o[e2] = s2;
                        match at(d, c, o) {
                            Some(v) => acc += sg * v,
                            None => {
                                ok = false;
                                break 'outer;
                            }
                        }
                    }
                    // off-diagonal entries appear twice in |D^2 w|^2
                    acc * 0.25 * ih2 * std::f64::consts::SQRT_2
                };
                local += val * val;
            }
        }
        if ok {
            sum += local;
        }
    }
    (sum * g.cell_volume()).sqrt()
}

/// `max_j ||D^2 w_j|| / (||P lap w_j|| + ||grad w_j||)`.
pub fn heywood_constant(b: &StokesBasis) -> f64 {
    b.fields
        .iter()
        .zip(&b.eigenvalues)
        .map(|(w, &l)| {
            let wn = b.inner(w, w).sqrt();
            hessian_norm(&b.domain, w) / ((l + l.sqrt()) * wn)
        })
        .fold(0.0, f64::max)
}

/// `max_j int |w_j|^2 / |x|^2 / ||grad w_j||^2`; bounded by 4 in the continuum.
pub fn hardy_ratio(b: &StokesBasis) -> f64 {
    let g = b.domain.grid;
    let weights: Vec<f64> = b
        .domain
        .active_faces
        .iter()
        .map(|&f| {
            let (d, c) = g.face_coords(f);
            let r = norm3(g.face_pos(d, c));
            1.0 / (r * r)
        })
        .collect();
    b.fields
        .iter()
        .zip(&b.eigenvalues)
        .map(|(w, &l)| {
            let num: f64 = w.iter().zip(&weights).map(|(v, q)| v * v * q).sum::<f64>() * g.cell_volume();
            num / (l * b.inner(w, w))
        })
        .fold(0.0, f64::max)
}

/// `max_j ||w_j||_{L^2(Omega_rho)} / ||grad w_j||`.
pub fn poincare_constant(b: &StokesBasis, rho: f64) -> f64 {
    let g = b.domain.grid;
    let inside: Vec<bool> = b
        .domain
        .active_faces
        .iter()
        .map(|&f| {
            let (d, c) = g.face_coords(f);
            norm3(g.face_pos(d, c)) < rho
        })
        .collect();
    b.fields
        .iter()
        .zip(&b.eigenvalues)
        .map(|(w, &l)| {
            let s: f64 = w.iter().zip(&inside).filter(|(_, i)| **i).map(|(v, _)| v * v).sum::<f64>();
            (s * g.cell_volume()).sqrt() / (l * b.inner(w, w)).sqrt()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_truncated_domain, BodySpec};
    use crate::stokes::{assemble_projector, solve_stokes_eigs, EigenOptions};
    use std::sync::Arc;

    #[test]
    fn inequalities_on_small_domain() {
        let d = Arc::new(build_truncated_domain(BodySpec::sphere(1.0).unwrap(), 4.0, 0.5).unwrap());
        let p = assemble_projector(d).unwrap();
        let b = solve_stokes_eigs(&p, 8, EigenOptions::default()).unwrap();
        let hardy = hardy_ratio(&b);
        assert!(hardy <= 4.0 * (1.0 + 5.0 * 0.5), "{hardy}");
        let hey = heywood_constant(&b);
        assert!(hey.is_finite() && hey > 0.0);
        let poin = poincare_constant(&b, 2.0);
        assert!(poin > 0.0 && poin <= 1.0 / b.eigenvalues[0].sqrt() + 1e-12);
        let zero = vec![0.0; p.n()];
        assert_eq!(membership_check_h(&p, &zero, [1.0, 0.0, 0.0], [0.0; 3]), 0.0);
    }

    #[test]
    fn membership_defect_shrinks_with_h() {
        let mut res = Vec::new();
        for h in [0.5, 0.25] {
            let d = Arc::new(build_truncated_domain(BodySpec::sphere(1.0).unwrap(), 4.0, h).unwrap());
            let p = assemble_projector(d).unwrap();
            let b = solve_stokes_eigs(&p, 1, EigenOptions::default()).unwrap();
            let m1 = membership_check_h(&p, &b.fields[0], [1.0, 0.0, 0.0], [0.0; 3]);
            let m2 = membership_check_h(&p, &b.fields[0], [0.0; 3], [1.0, 0.0, 0.0]);
            eprintln!("h {h} membership {m1:.3e} {m2:.3e}");
            res.push((m1, m2));
        }
        assert!(res[1].0 < 0.75 * res[0].0 && res[1].1 < 0.75 * res[0].1, "{res:?}");
    }
}
