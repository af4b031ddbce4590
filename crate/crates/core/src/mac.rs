//! Staggered (MAC) grid indexing on a cube `[-a, a]^3`.
//!
//! Cells are indexed `(i, j, k)` with `i, j, k < n`. A face of orientation `d`
//! sits at integer position `idx[d]` along axis `d` (`0..=n`) and at cell-centre
//! positions along the other two axes. Face-normal velocity components live on
//! faces, pressure lives in cells.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Cells per side.
    pub n: usize,
    /// Mesh width.
    pub h: f64,
}

impl Grid {
    pub fn new(n: usize, h: f64) -> Self {
        Grid { n, h }
    }

    /// Grid whose box is `[-half_width, half_width]^3` with mesh width `h`.
    /// Returns `None` if `2 * half_width / h` is not (close to) an integer.
    pub fn covering(half_width: f64, h: f64) -> Option<Self> {
        let m = 2.0 * half_width / h;
        let n = m.round();
        if n < 2.0 || (m - n).abs() > 1e-9 * m.max(1.0) {
            return None;
        }
        Some(Grid { n: n as usize, h })
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.n as f64 * self.h
    }

    pub fn origin(&self) -> f64 {
        -self.half_width()
    }

    pub fn cell_volume(&self) -> f64 {
        self.h * self.h * self.h
    }

    pub fn n_cells(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn cell_index(&self, c: [usize; 3]) -> usize {
        (c[0] * self.n + c[1]) * self.n + c[2]
    }

    #[inline]
    pub fn cell_coords(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    /// Coordinates are formed as `(index - n/2) * h` so that mirror images
    /// are exact negatives of each other.
    #[inline]
    pub fn cell_center(&self, c: [usize; 3]) -> [f64; 3] {
        let m = 0.5 * self.n as f64;
        let h = self.h;
        [
            (c[0] as f64 + 0.5 - m) * h,
            (c[1] as f64 + 0.5 - m) * h,
            (c[2] as f64 + 0.5 - m) * h,
        ]
    }

    /// Index extents of faces with orientation `d`.
    #[inline]
    pub fn face_dims(&self, d: usize) -> [usize; 3] {
        let mut dims = [self.n; 3];
        dims[d] += 1;
        dims
    }

    #[inline]
    pub fn faces_per_orientation(&self) -> usize {
        (self.n + 1) * self.n * self.n
    }

    pub fn n_faces(&self) -> usize {
        3 * self.faces_per_orientation()
    }

    #[inline]
    pub fn face_index(&self, d: usize, c: [usize; 3]) -> usize {
        let dims = self.face_dims(d);
        d * self.faces_per_orientation() + (c[0] * dims[1] + c[1]) * dims[2] + c[2]
    }

    /// Inverse of [`Grid::face_index`].
    #[inline]
    pub fn face_coords(&self, idx: usize) -> (usize, [usize; 3]) {
        let per = self.faces_per_orientation();
        let d = idx / per;
        let r = idx % per;
        let dims = self.face_dims(d);
        (d, [r / (dims[1] * dims[2]), (r / dims[2]) % dims[1], r % dims[2]])
    }

    #[inline]
    pub fn face_pos(&self, d: usize, c: [usize; 3]) -> [f64; 3] {
        let m = 0.5 * self.n as f64;
        let h = self.h;
        let mut x = [0.0; 3];
        for e in 0..3 {
            x[e] = if e == d {
                (c[e] as f64 - m) * h
            } else {
                (c[e] as f64 + 0.5 - m) * h
            };
        }
        x
    }

    /// Face of orientation `d` shifted by `s` (-1 or +1) along axis `e`, if it exists.
    #[inline]
    pub fn face_shift(&self, d: usize, c: [usize; 3], e: usize, s: isize) -> Option<[usize; 3]> {
        let dims = self.face_dims(d);
        let v = c[e] as isize + s;
        if v < 0 || v >= dims[e] as isize {
            return None;
        }
        let mut out = c;
        out[e] = v as usize;
        Some(out)
    }

    /// Sample a vector field at face centres (normal component only).
    pub fn sample_faces(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_faces()];
        for (idx, slot) in out.iter_mut().enumerate() {
            let (d, c) = self.face_coords(idx);
            *slot = f(self.face_pos(d, c))[d];
        }
        out
    }

    /// Cell-centred values of a face field (average of the two normal faces).
    pub fn faces_to_cells(&self, u: &[f64]) -> Vec<[f64; 3]> {
        let mut out = vec![[0.0; 3]; self.n_cells()];
        for (ci, slot) in out.iter_mut().enumerate() {
            let c = self.cell_coords(ci);
            for d in 0..3 {
                let mut hi = c;
                hi[d] += 1;
                slot[d] = 0.5 * (u[self.face_index(d, c)] + u[self.face_index(d, hi)]);
            }
        }
        out
    }

    /// Trilinear interpolation of component `d` of a face field at `x`.
    /// Points outside the sampled lattice are clamped to its hull.
    pub fn interp_face_component(&self, u: &[f64], d: usize, x: [f64; 3]) -> f64 {
        let dims = self.face_dims(d);
        let o = self.origin();
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for e in 0..3 {
            let shift = if e == d { 0.0 } else { 0.5 };
            let s = (x[e] - o) / self.h - shift;
            let max = (dims[e] - 1) as f64;
            let s = s.clamp(0.0, max);
            let b = (s.floor() as usize).min(dims[e].saturating_sub(2));
            base[e] = b;
            frac[e] = s - b as f64;
        }
        let mut acc = 0.0;
        for corner in 0..8 {
            let mut c = base;
            let mut w = 1.0;
            for e in 0..3 {
                let bit = (corner >> e) & 1;
                c[e] += bit;
                w *= if bit == 1 { frac[e] } else { 1.0 - frac[e] };
            }
            if w != 0.0 {
                acc += w * u[self.face_index(d, c)];
            }
        }
        acc
    }

    pub fn interp_face_field(&self, u: &[f64], x: [f64; 3]) -> [f64; 3] {
        [
            self.interp_face_component(u, 0, x),
            self.interp_face_component(u, 1, x),
            self.interp_face_component(u, 2, x),
        ]
    }
}

/// `|x|` summed in a fixed order of magnitudes, so it is invariant under
/// coordinate reflections and permutations.
#[inline]
pub fn sym_norm3(x: [f64; 3]) -> f64 {
    let mut a = [x[0].abs(), x[1].abs(), x[2].abs()];
    a.sort_by(|p, q| p.total_cmp(q));
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

#[inline]
pub fn norm3(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

#[inline]
pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn face_index_roundtrip() {
        let g = Grid::new(5, 0.3);
        for idx in 0..g.n_faces() {
            let (d, c) = g.face_coords(idx);
            assert_eq!(g.face_index(d, c), idx);
        }
    }

    #[test]
    fn covering_rejects_misaligned_box() {
        assert!(Grid::covering(4.0, 0.5).is_some());
        assert!(Grid::covering(4.0, 0.3).is_none());
    }

    #[test]
    fn trilinear_is_exact_for_linear_fields() {
        let g = Grid::new(6, 0.5);
        let u = g.sample_faces(|x| [1.0 + 2.0 * x[1], x[0] - x[2], 3.0 * x[2] + x[0]]);
        let p = [0.13, -0.41, 0.77];
        let v = g.interp_face_field(&u, p);
        assert!((v[0] - (1.0 + 2.0 * p[1])).abs() < 1e-12);
        assert!((v[1] - (p[0] - p[2])).abs() < 1e-12);
        assert!((v[2] - (3.0 * p[2] + p[0])).abs() < 1e-12);
    }
}
