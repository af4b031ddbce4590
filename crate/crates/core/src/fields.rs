//! Pointwise operators on full MAC face arrays.
//!
//! Fields are indexed by global face index; faces outside a domain simply hold
//! zero, so the same routines serve zero-extended solenoidal fields and the
//! extension field, which lives on the whole grid. Off-grid neighbours count
//! as zero throughout.

use crate::mac::Grid;

/// Advecting velocity for [`advect`].
#[derive(Clone, Copy)]
pub enum Adv<'a> {
    /// `xi + omega x x`, evaluated exactly at face centres.
    Rigid { xi: [f64; 3], omega: [f64; 3] },
    /// A face field, moved to other orientations by four-face averages.
    Faces(&'a [f64]),
}

/// Average of component `e` over the four `e`-faces around the `d`-face `c`
/// (`e != d`); missing faces count as zero and the divisor stays 4.
#[inline]
pub fn face_avg(g: &Grid, u: &[f64], d: usize, c: [usize; 3], e: usize) -> f64 {
    let n = g.n;
    let mut s = 0.0;
    for dd in [0usize, 1] {
        if (dd == 0 && c[d] == 0) || (dd == 1 && c[d] == n) {
            continue;
        }
        for de in [0usize, 1] {
            let mut q = c;
            q[d] = c[d] + dd - 1;
            q[e] = c[e] + de;
            s += u[g.face_index(e, q)];
        }
    }
    0.25 * s
}

#[inline]
fn shifted(g: &Grid, u: &[f64], d: usize, c: [usize; 3], e: usize, s: isize) -> f64 {
    match g.face_shift(d, c, e, s) {
        Some(q) => u[g.face_index(d, q)],
        None => 0.0,
    }
}

/// Seven-point Laplacian of every face component.
pub fn laplacian(g: &Grid, u: &[f64]) -> Vec<f64> {
    let ih2 = 1.0 / (g.h * g.h);
    (0..g.n_faces())
        .map(|f| {
            let (d, c) = g.face_coords(f);
            let mut s = -6.0 * u[f];
            for e in 0..3 {
                s += shifted(g, u, d, c, e, -1) + shifted(g, u, d, c, e, 1);
            }
            s * ih2
        })
        .collect()
}

/// Component `e` of the advecting velocity at the centre of face `(d, c)`.
#[inline]
pub fn adv_component(g: &Grid, a: Adv, d: usize, c: [usize; 3], e: usize) -> f64 {
    match a {
        Adv::Rigid { xi, omega } => {
            let x = g.face_pos(d, c);
            let r = crate::mac::cross(omega, x);
            xi[e] + r[e]
        }
        Adv::Faces(v) => {
            if e == d {
                v[g.face_index(d, c)]
            } else {
                face_avg(g, v, d, c, e)
            }
        }
    }
}

/// `(a . grad) u` with centred differences at every face.
pub fn advect(g: &Grid, a: Adv, u: &[f64]) -> Vec<f64> {
    let i2h = 0.5 / g.h;
    (0..g.n_faces())
        .map(|f| {
            let (d, c) = g.face_coords(f);
            let mut s = 0.0;
            for e in 0..3 {
                let ae = adv_component(g, a, d, c, e);
                if ae != 0.0 {
                    s += ae * (shifted(g, u, d, c, e, 1) - shifted(g, u, d, c, e, -1));
                }
            }
            s * i2h
        })
        .collect()
}

/// Transpose of [`advect`] with respect to the face dot product.
pub fn advect_transpose(g: &Grid, a: Adv, w: &[f64]) -> Vec<f64> {
    let i2h = 0.5 / g.h;
    (0..g.n_faces())
        .map(|f| {
            let (d, c) = g.face_coords(f);
            let mut s = 0.0;
            for e in 0..3 {
                if let Some(q) = g.face_shift(d, c, e, -1) {
                    s += adv_component(g, a, d, q, e) * w[g.face_index(d, q)];
                }
                if let Some(q) = g.face_shift(d, c, e, 1) {
                    s -= adv_component(g, a, d, q, e) * w[g.face_index(d, q)];
                }
            }
            s * i2h
        })
        .collect()
}

/// `w x u`, off-orientation components by four-face averages.
pub fn cross(g: &Grid, w: [f64; 3], u: &[f64]) -> Vec<f64> {
    (0..g.n_faces())
        .map(|f| {
            let (d, c) = g.face_coords(f);
            let (i, j) = ((d + 1) % 3, (d + 2) % 3);
            // (w x u)_d = w_i u_j - w_j u_i
            let mut s = 0.0;
            if w[i] != 0.0 {
                s += w[i] * face_avg(g, u, d, c, j);
            }
            if w[j] != 0.0 {
                s -= w[j] * face_avg(g, u, d, c, i);
            }
            s
        })
        .collect()
}

/// Cell divergence of a face field.
pub fn divergence(g: &Grid, u: &[f64]) -> Vec<f64> {
    let ih = 1.0 / g.h;
    (0..g.n_cells())
        .map(|ci| {
            let c = g.cell_coords(ci);
            let mut s = 0.0;
            for d in 0..3 {
                let mut hi = c;
                hi[d] += 1;
                s += u[g.face_index(d, hi)] - u[g.face_index(d, c)];
            }
            s * ih
        })
        .collect()
}

/// Edge lattice: an edge of orientation `e` has `c[e] < n` (centre position)
/// and nodal positions `c[o] <= n` along the other axes.
pub fn edge_dims(g: &Grid, e: usize) -> [usize; 3] {
    let mut d = [g.n + 1; 3];
    d[e] = g.n;
    d
}

pub fn edges_per_orientation(g: &Grid) -> usize {
    g.n * (g.n + 1) * (g.n + 1)
}

#[inline]
pub fn edge_index(g: &Grid, e: usize, c: [usize; 3]) -> usize {
    let dims = edge_dims(g, e);
    e * edges_per_orientation(g) + (c[0] * dims[1] + c[1]) * dims[2] + c[2]
}

pub fn edge_pos(g: &Grid, e: usize, c: [usize; 3]) -> [f64; 3] {
    let m = 0.5 * g.n as f64;
    let mut x = [0.0; 3];
    for a in 0..3 {
        x[a] = if a == e { (c[a] as f64 + 0.5 - m) * g.h } else { (c[a] as f64 - m) * g.h };
    }
    x
}

/// Samples `f(x)[e]` at every edge of orientation `e`.
pub fn sample_edges(g: &Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Vec<f64> {
    let mut out = vec![0.0; 3 * edges_per_orientation(g)];
    for e in 0..3 {
        let dims = edge_dims(g, e);
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                for k in 0..dims[2] {
                    let c = [i, j, k];
                    out[edge_index(g, e, c)] = f(edge_pos(g, e, c))[e];
                }
            }
        }
    }
    out
}

/// Discrete curl from edges to faces; its divergence vanishes identically.
pub fn curl_edges(g: &Grid, a: &[f64]) -> Vec<f64> {
    let ih = 1.0 / g.h;
    (0..g.n_faces())
        .map(|f| {
            let (d, c) = g.face_coords(f);
            let (p, q) = ((d + 1) % 3, (d + 2) % 3);
            // (curl a)_d = d_p a_q - d_q a_p
            let mut cp = c;
            cp[p] += 1;
            let mut cq = c;
            cq[q] += 1;
            let dp_aq = a[edge_index(g, q, cp)] - a[edge_index(g, q, c)];
            let dq_ap = a[edge_index(g, p, cq)] - a[edge_index(g, p, c)];
            (dp_aq - dq_ap) * ih
        })
        .collect()
}

/// Face dot product times the cell volume.
pub fn inner(g: &Grid, a: &[f64], b: &[f64]) -> f64 {
    crate::linalg::dot(a, b) * g.cell_volume()
}
