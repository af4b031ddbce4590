//! Body, truncated domains on masked MAC grids, annuli and cut-off functions.

use crate::error::{Error, Result};
use crate::mac::{norm3, sym_norm3, Grid};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// A sphere centred at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodySpec {
    pub radius: f64,
}

impl BodySpec {
    pub fn sphere(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Geometry(format!("body radius must be positive, got {radius}")));
        }
        Ok(BodySpec { radius })
    }

    /// Twice the body diameter.
    pub fn r_star(&self) -> f64 {
        4.0 * self.radius
    }

    pub fn contains(&self, x: [f64; 3]) -> bool {
        norm3(x) <= self.radius
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[repr(u8)]
pub enum CellKind {
    Solid = 0,
    Fluid = 1,
    Exterior = 2,
}

impl CellKind {
    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(CellKind::Solid),
            1 => Some(CellKind::Fluid),
            2 => Some(CellKind::Exterior),
            _ => None,
        }
    }
}

/// Which wall a boundary face touches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wall {
    Body,
    Outer,
}

/// `Omega_R` on a MAC grid over `[-R, R]^3`.
#[derive(Clone, Debug)]
pub struct TruncatedDomain {
    pub body: BodySpec,
    pub r: f64,
    pub grid: Grid,
    pub cells: Vec<CellKind>,
    pub fluid_cells: Vec<usize>,
    pub cell_to_fluid: Vec<u32>,
    /// Faces between two fluid cells, in global face order.
    pub active_faces: Vec<usize>,
    pub face_to_active: Vec<u32>,
    /// Faces with exactly one fluid neighbour.
    pub boundary_faces: Vec<(usize, Wall)>,
}

pub const NONE: u32 = u32::MAX;

/// Fails with a geometry error unless `r >= R_*`, `h` tiles `[-R, R]` and the
/// body spans at least two cells in radius.
pub fn build_truncated_domain(body: BodySpec, r: f64, h: f64) -> Result<TruncatedDomain> {
    if r < body.r_star() {
        return Err(Error::DomainTooSmall { r, r_star: body.r_star() });
    }
    if !(h > 0.0) {
        return Err(Error::Resolution(format!("grid spacing must be positive, got {h}")));
    }
    let grid = Grid::covering(r, h)
        .ok_or_else(|| Error::Resolution(format!("h = {h} does not divide 2R = {}", 2.0 * r)))?;
    if body.radius < 2.0 * h {
        return Err(Error::Resolution(format!(
            "body radius {} spans fewer than 2 cells at h = {h}",
            body.radius
        )));
    }
    TruncatedDomain::from_grid(body, r, grid)
}

impl TruncatedDomain {
    pub fn from_grid(body: BodySpec, r: f64, grid: Grid) -> Result<Self> {
        let cells = (0..grid.n_cells())
            .map(|ci| {
                let rc = sym_norm3(grid.cell_center(grid.cell_coords(ci)));
                if rc <= body.radius {
                    CellKind::Solid
                } else if rc < r {
                    CellKind::Fluid
                } else {
                    CellKind::Exterior
                }
            })
            .collect();
        Self::from_mask(body, r, grid, cells)
    }

    /// Domain with an explicit cell classification; the fluid cells must be
    /// face-connected.
    pub fn from_mask(body: BodySpec, r: f64, grid: Grid, cells: Vec<CellKind>) -> Result<Self> {
        let nc = grid.n_cells();
        if cells.len() != nc {
            return Err(Error::Geometry(format!("mask has {} cells, grid has {nc}", cells.len())));
        }
        let mut fluid_cells = Vec::new();
        let mut cell_to_fluid = vec![NONE; nc];
        for (ci, kind) in cells.iter().enumerate() {
            if *kind == CellKind::Fluid {
                cell_to_fluid[ci] = fluid_cells.len() as u32;
                fluid_cells.push(ci);
            }
        }
        if fluid_cells.is_empty() {
            return Err(Error::Geometry("no fluid cells".into()));
        }
        let n = grid.n;
        let kind_at = |c: [isize; 3]| -> Option<CellKind> {
            if c.iter().any(|&v| v < 0 || v >= n as isize) {
                None
            } else {
                Some(cells[grid.cell_index([c[0] as usize, c[1] as usize, c[2] as usize])])
            }
        };
        let mut active_faces = Vec::new();
        let mut face_to_active = vec![NONE; grid.n_faces()];
        let mut boundary_faces = Vec::new();
        for f in 0..grid.n_faces() {
            let (d, c) = grid.face_coords(f);
            let hi = [c[0] as isize, c[1] as isize, c[2] as isize];
            let mut lo = hi;
            lo[d] -= 1;
            let a = kind_at(lo);
            let b = kind_at(hi);
            let fa = a == Some(CellKind::Fluid);
            let fb = b == Some(CellKind::Fluid);
            if fa && fb {
                face_to_active[f] = active_faces.len() as u32;
                active_faces.push(f);
            } else if fa || fb {
                let other = if fa { b } else { a };
                let wall = if other == Some(CellKind::Solid) { Wall::Body } else { Wall::Outer };
                boundary_faces.push((f, wall));
            }
        }
        let dom = TruncatedDomain {
            body,
            r,
            grid,
            cells,
            fluid_cells,
            cell_to_fluid,
            active_faces,
            face_to_active,
            boundary_faces,
        };
        if dom.fluid_components() != 1 {
            return Err(Error::Geometry("fluid region is not connected".into()));
        }
        Ok(dom)
    }

    pub fn h(&self) -> f64 {
        self.grid.h
    }

    pub fn n_fluid(&self) -> usize {
        self.fluid_cells.len()
    }

    pub fn n_active(&self) -> usize {
        self.active_faces.len()
    }

    pub fn fluid_volume(&self) -> f64 {
        self.n_fluid() as f64 * self.grid.cell_volume()
    }

    pub fn body_boundary_face_count(&self) -> usize {
        self.boundary_faces.iter().filter(|(_, w)| *w == Wall::Body).count()
    }

    /// Number of connected components of the fluid cells (face adjacency).
    pub fn fluid_components(&self) -> usize {
        let g = &self.grid;
        let mut seen = vec![false; self.n_fluid()];
        let mut comps = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.n_fluid() {
            if seen[start] {
                continue;
            }
            comps += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(fi) = queue.pop_front() {
                let c = g.cell_coords(self.fluid_cells[fi]);
                for d in 0..3 {
                    for s in [-1isize, 1] {
                        let v = c[d] as isize + s;
                        if v < 0 || v >= g.n as isize {
                            continue;
                        }
                        let mut nb = c;
                        nb[d] = v as usize;
                        let j = self.cell_to_fluid[g.cell_index(nb)];
                        if j != NONE && !seen[j as usize] {
                            seen[j as usize] = true;
                            queue.push_back(j as usize);
                        }
                    }
                }
            }
        }
        comps
    }

    /// Scatter an active-face vector into a full face array (zeros elsewhere).
    pub fn scatter(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.n_faces()];
        for (a, &f) in self.active_faces.iter().enumerate() {
            out[f] = v[a];
        }
        out
    }

    pub fn gather(&self, full: &[f64]) -> Vec<f64> {
        self.active_faces.iter().map(|&f| full[f]).collect()
    }

    /// Fluid cells whose centres satisfy `r_in < |x| < r_out`.
    pub fn annulus(&self, r_in: f64, r_out: f64) -> Result<Annulus> {
        let cells: Vec<usize> = self
            .fluid_cells
            .iter()
            .copied()
            .filter(|&ci| {
                let rc = sym_norm3(self.grid.cell_center(self.grid.cell_coords(ci)));
                rc > r_in && rc < r_out
            })
            .collect();
        if cells.is_empty() {
            return Err(Error::Geometry(format!("empty annulus {r_in} < |x| < {r_out}")));
        }
        Ok(Annulus { r_in, r_out, cells })
    }

    /// The shell cells of [`TruncatedDomain::annulus`] as a domain of their
    /// own; everything else counts as solid, so faces on both spheres are walls.
    pub fn annulus_domain(&self, r_in: f64, r_out: f64) -> Result<TruncatedDomain> {
        let ann = self.annulus(r_in, r_out)?;
        let mut cells = vec![CellKind::Solid; self.grid.n_cells()];
        for &c in &ann.cells {
            cells[c] = CellKind::Fluid;
        }
        TruncatedDomain::from_mask(self.body, self.r, self.grid, cells)
    }

    pub fn mask_dump(&self) -> MaskDump {
        MaskDump {
            n: self.grid.n,
            h: self.grid.h,
            r: self.r,
            radius: self.body.radius,
            mask: self.cells.clone(),
        }
    }
}

/// Cells of a domain lying in an open spherical shell.
#[derive(Clone, Debug)]
pub struct Annulus {
    pub r_in: f64,
    pub r_out: f64,
    pub cells: Vec<usize>,
}

/// `|sum f| / (||f||_2 * vol^{1/2})` over the annulus; `f` is indexed by grid cell.
pub fn annulus_mean_zero_check(grid: &Grid, annulus: &Annulus, f: &[f64]) -> Result<f64> {
    if annulus.cells.is_empty() {
        return Err(Error::Geometry("empty annulus".into()));
    }
    let dv = grid.cell_volume();
    let mut sum = 0.0;
    let mut sq = 0.0;
    for &c in &annulus.cells {
        sum += f[c] * dv;
        sq += f[c] * f[c] * dv;
    }
    let vol = annulus.cells.len() as f64 * dv;
    if sq == 0.0 {
        return Ok(0.0);
    }
    Ok(sum.abs() / (sq.sqrt() * vol.sqrt()))
}

/// C-infinity step: 0 for `t <= 0`, 1 for `t >= 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

pub fn smooth_step_deriv(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        let da = a / (t * t);
        let db = -b / ((1.0 - t) * (1.0 - t));
        (da * (a + b) - a * (da + db)) / ((a + b) * (a + b))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CutoffKind {
    /// `chi(|x|/R)`: 1 on `|x| <= R/2`, 0 on `|x| >= R`.
    RadialChi,
    /// Axisymmetric about `e1`, elongated along the axis: 1 inside the
    /// spheroid `q(x) <= 2R`, 0 outside `q(x) >= 4R^2/a`, with
    /// `q = (x1^2/a^2 + x2^2 + x3^2)^{1/2}` and `a = (2R)^{1/2}`. Its gradient
    /// lives in `2R < |x| < 4R^2` and is orthogonal to `e1 x x`.
    UniquenessPsi,
    /// Purely radial variant of the above, `1 - S(log_{2R}|x| - 1)`; orthogonal
    /// to `omega x x` for every `omega`.
    UniquenessPsiRadial,
}

/// Analytic cut-off profile with value and gradient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffProfile {
    pub kind: CutoffKind,
    pub scale: f64,
}

impl CutoffProfile {
    pub fn new(kind: CutoffKind, scale: f64) -> Self {
        CutoffProfile { kind, scale }
    }

    /// Radius beyond which the cut-off is constant.
    pub fn outer_radius(&self) -> f64 {
        match self.kind {
            CutoffKind::RadialChi => self.scale,
            CutoffKind::UniquenessPsi | CutoffKind::UniquenessPsiRadial => 4.0 * self.scale * self.scale,
        }
    }

    /// Value at infinity (0 for every kind).
    pub fn far_value(&self) -> f64 {
        0.0
    }

    fn psi_params(&self) -> (f64, f64, f64) {
        let r = self.scale;
        let a = (2.0 * r).sqrt();
        (a, 2.0 * r, 4.0 * r * r / a)
    }

    pub fn value(&self, x: [f64; 3]) -> f64 {
        match self.kind {
            CutoffKind::RadialChi => {
                let s = norm3(x) / self.scale;
                1.0 - smooth_step(2.0 * s - 1.0)
            }
            CutoffKind::UniquenessPsi => {
                let (a, c1, c2) = self.psi_params();
                let q = (x[0] * x[0] / (a * a) + x[1] * x[1] + x[2] * x[2]).sqrt();
                if q <= c1 {
                    return 1.0;
                }
                1.0 - smooth_step((q / c1).ln() / (c2 / c1).ln())
            }
            CutoffKind::UniquenessPsiRadial => {
                let c1 = 2.0 * self.scale;
                let r = norm3(x);
                if r <= c1 {
                    return 1.0;
                }
                1.0 - smooth_step((r / c1).ln() / c1.ln())
            }
        }
    }

    pub fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        match self.kind {
            CutoffKind::RadialChi => {
                let r = norm3(x);
                if r == 0.0 {
                    return [0.0; 3];
                }
                let s = r / self.scale;
                let g = -2.0 * smooth_step_deriv(2.0 * s - 1.0) / (self.scale * r);
                [g * x[0], g * x[1], g * x[2]]
            }
            CutoffKind::UniquenessPsi => {
                let (a, c1, c2) = self.psi_params();
                let q = (x[0] * x[0] / (a * a) + x[1] * x[1] + x[2] * x[2]).sqrt();
                if q <= c1 {
                    return [0.0; 3];
                }
                let span = (c2 / c1).ln();
                let ds = -smooth_step_deriv((q / c1).ln() / span) / (span * q);
                let dq = [x[0] / (a * a * q), x[1] / q, x[2] / q];
                [ds * dq[0], ds * dq[1], ds * dq[2]]
            }
            CutoffKind::UniquenessPsiRadial => {
                let c1 = 2.0 * self.scale;
                let r = norm3(x);
                if r <= c1 {
                    return [0.0; 3];
                }
                let span = c1.ln();
                let g = -smooth_step_deriv((r / c1).ln() / span) / (span * r * r);
                [g * x[0], g * x[1], g * x[2]]
            }
        }
    }
}

/// A cut-off sampled at the cell centres of a grid.
#[derive(Clone, Debug)]
pub struct CutoffFunction {
    pub profile: CutoffProfile,
    pub grid: Grid,
    pub values: Vec<f64>,
}

pub fn make_cutoff(kind: CutoffKind, scale: f64, grid: &Grid) -> Result<CutoffFunction> {
    if !(scale > 0.0) {
        return Err(Error::Geometry(format!("cut-off scale must be positive, got {scale}")));
    }
    let profile = CutoffProfile::new(kind, scale);
    if profile.outer_radius() > grid.half_width() + 1e-12 {
        return Err(Error::Coverage(format!(
            "support radius {} exceeds grid half-width {}",
            profile.outer_radius(),
            grid.half_width()
        )));
    }
    let values = (0..grid.n_cells())
        .map(|ci| profile.value(grid.cell_center(grid.cell_coords(ci))))
        .collect();
    Ok(CutoffFunction { profile, grid: *grid, values })
}

impl CutoffFunction {
    pub fn at(&self, x: [f64; 3]) -> f64 {
        self.profile.value(x)
    }

    /// Finite-difference estimates of `max R|grad chi|` and `max R^2|D^2 chi|`
    /// over the sampled cells.
    pub fn derivative_constants(&self) -> (f64, f64) {
        let g = &self.grid;
        let n = g.n;
        let h = g.h;
        let r = self.profile.scale;
        let mut c1: f64 = 0.0;
        let mut c2: f64 = 0.0;
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                for k in 1..n - 1 {
                    let at = |a: usize, b: usize, c: usize| self.values[g.cell_index([a, b, c])];
                    let v = at(i, j, k);
                    let gx = (at(i + 1, j, k) - at(i - 1, j, k)) / (2.0 * h);
                    let gy = (at(i, j + 1, k) - at(i, j - 1, k)) / (2.0 * h);
                    let gz = (at(i, j, k + 1) - at(i, j, k - 1)) / (2.0 * h);
                    let dxx = (at(i + 1, j, k) - 2.0 * v + at(i - 1, j, k)) / (h * h);
                    let dyy = (at(i, j + 1, k) - 2.0 * v + at(i, j - 1, k)) / (h * h);
                    let dzz = (at(i, j, k + 1) - 2.0 * v + at(i, j, k - 1)) / (h * h);
                    let dxy = (at(i + 1, j + 1, k) - at(i + 1, j - 1, k) - at(i - 1, j + 1, k)
                        + at(i - 1, j - 1, k))
                        / (4.0 * h * h);
                    let dxz = (at(i + 1, j, k + 1) - at(i + 1, j, k - 1) - at(i - 1, j, k + 1)
                        + at(i - 1, j, k - 1))
                        / (4.0 * h * h);
                    let dyz = (at(i, j + 1, k + 1) - at(i, j + 1, k - 1) - at(i, j - 1, k + 1)
                        + at(i, j - 1, k - 1))
                        / (4.0 * h * h);
                    let grad = (gx * gx + gy * gy + gz * gz).sqrt();
                    let hess = (dxx * dxx + dyy * dyy + dzz * dzz + 2.0 * (dxy * dxy + dxz * dxz + dyz * dyz)).sqrt();
                    c1 = c1.max(r * grad);
                    c2 = c2.max(r * r * hess);
                }
            }
        }
        (c1, c2)
    }
}

/// `int |d_1 psi| / |x|^2` over `R^3`, by axisymmetric quadrature in
/// `(x1, rho)` (the integrand vanishes outside the transition shell).
pub fn psi_axial_quadrature(profile: &CutoffProfile, n: usize) -> f64 {
    let outer = profile.outer_radius();
    let inner = match profile.kind {
        CutoffKind::RadialChi => 0.5 * profile.scale,
        _ => 2.0 * profile.scale,
    };
    // Log-spaced radial nodes and Gauss-free midpoint rule in the polar angle.
    let (lr0, lr1) = (inner.ln(), outer.ln());
    let mut acc = 0.0;
    let nt = 4 * n;
    for a in 0..n {
        let lr = lr0 + (a as f64 + 0.5) * (lr1 - lr0) / n as f64;
        let r = lr.exp();
        let dr = r * (lr1 - lr0) / n as f64;
        for b in 0..nt {
            let th = (b as f64 + 0.5) * std::f64::consts::PI / nt as f64;
            let x = [r * th.cos(), r * th.sin(), 0.0];
            let d1 = profile.gradient(x)[0].abs();
            // volume element 2 pi r^2 sin(th) dr dth, divided by r^2.
            acc += d1 * 2.0 * std::f64::consts::PI * th.sin() * dr * std::f64::consts::PI / nt as f64;
        }
    }
    acc
}

/// Binary mask dump: `b"TPNSMASK"`, `u32` version, `u64` n, `f64` h, `f64` R,
/// `f64` radius (all little-endian), then `n^3` mask bytes in cell order.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskDump {
    pub n: usize,
    pub h: f64,
    pub r: f64,
    pub radius: f64,
    pub mask: Vec<CellKind>,
}

const MASK_MAGIC: &[u8; 8] = b"TPNSMASK";
const MASK_VERSION: u32 = 1;
const MAX_DUMP_CELLS: usize = 1 << 27;

impl MaskDump {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(44 + self.mask.len());
        out.extend_from_slice(MASK_MAGIC);
        out.extend_from_slice(&MASK_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out.extend_from_slice(&self.h.to_le_bytes());
        out.extend_from_slice(&self.r.to_le_bytes());
        out.extend_from_slice(&self.radius.to_le_bytes());
        out.extend(self.mask.iter().map(|&k| k as u8));
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut rd = crate::bytes::Reader::new(bytes);
        if rd.take(8)? != MASK_MAGIC {
            return Err(Error::Decode("bad mask magic".into()));
        }
        let version = rd.u32()?;
        if version != MASK_VERSION {
            return Err(Error::Decode(format!("unsupported mask version {version}")));
        }
        let n = rd.u64()? as usize;
        let h = rd.f64()?;
        let r = rd.f64()?;
        let radius = rd.f64()?;
        if n == 0 || n > 1 << 9 {
            return Err(Error::Decode(format!("implausible grid size {n}")));
        }
        let cells = n * n * n;
        if cells > MAX_DUMP_CELLS {
            return Err(Error::Decode("mask too large".into()));
        }
        for (name, v) in [("h", h), ("R", r), ("radius", radius)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Decode(format!("{name} must be positive and finite")));
            }
        }
        let raw = rd.take(cells)?;
        rd.finish()?;
        let mask = raw
            .iter()
            .map(|&b| CellKind::from_byte(b).ok_or_else(|| Error::Decode(format!("bad mask byte {b}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(MaskDump { n, h, r, radius, mask })
    }

    pub fn to_csv(&self) -> String {
        let g = Grid::new(self.n, self.h);
        let mut s = String::from("i,j,k,x,y,z,kind\n");
        for (ci, kind) in self.mask.iter().enumerate() {
            let c = g.cell_coords(ci);
            let x = g.cell_center(c);
            let name = match kind {
                CellKind::Solid => "solid",
                CellKind::Fluid => "fluid",
                CellKind::Exterior => "exterior",
            };
            s.push_str(&format!("{},{},{},{},{},{},{}\n", c[0], c[1], c[2], x[0], x[1], x[2], name));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sphere() -> BodySpec {
        BodySpec::sphere(1.0).unwrap()
    }

    #[test]
    fn fluid_volume_matches_shell_r4() {
        let d = build_truncated_domain(sphere(), 4.0, 0.25).unwrap();
        let exact = 4.0 / 3.0 * PI * (64.0 - 1.0);
        assert!((d.fluid_volume() - exact).abs() / exact < 0.1);
        assert_eq!(d.fluid_components(), 1);
    }

    #[test]
    fn fluid_volume_matches_shell_r8() {
        let d = build_truncated_domain(sphere(), 8.0, 0.5).unwrap();
        let exact = 4.0 / 3.0 * PI * (512.0 - 1.0);
        assert!((d.fluid_volume() - exact).abs() / exact < 0.1);
    }

    #[test]
    fn small_domain_rejected() {
        assert!(matches!(
            build_truncated_domain(sphere(), 1.9, 0.1),
            Err(Error::DomainTooSmall { .. })
        ));
        assert!(matches!(build_truncated_domain(sphere(), 4.0, 0.75), Err(Error::Resolution(_))));
        assert!(matches!(build_truncated_domain(sphere(), 4.0, 0.3), Err(Error::Resolution(_))));
    }

    #[test]
    fn body_boundary_faces_scale_like_surface() {
        let a = build_truncated_domain(sphere(), 4.0, 0.25).unwrap().body_boundary_face_count() as f64;
        let b = build_truncated_domain(sphere(), 4.0, 0.125).unwrap().body_boundary_face_count() as f64;
        let ratio = b / a;
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn every_fluid_solid_interface_is_a_boundary_face() {
        let d = build_truncated_domain(sphere(), 4.0, 0.5).unwrap();
        let g = &d.grid;
        let mut count = 0;
        for f in 0..g.n_faces() {
            let (dd, c) = g.face_coords(f);
            if c[dd] == 0 || c[dd] == g.n {
                continue;
            }
            let mut lo = c;
            lo[dd] -= 1;
            let a = d.cells[g.cell_index(lo)];
            let b = d.cells[g.cell_index(c)];
            let mixed = (a == CellKind::Fluid && b == CellKind::Solid) || (a == CellKind::Solid && b == CellKind::Fluid);
            if mixed {
                count += 1;
                assert!(d.boundary_faces.contains(&(f, Wall::Body)));
            }
        }
        assert_eq!(count, d.body_boundary_face_count());
    }

    #[test]
    fn chi_values() {
        let p = CutoffProfile::new(CutoffKind::RadialChi, 4.0);
        assert_eq!(p.value([1.0, 0.0, 0.0]), 1.0);
        assert_eq!(p.value([5.0, 0.0, 0.0]), 0.0);
        assert_eq!(p.value([0.0, 2.0, 0.0]), 1.0);
        assert_eq!(p.value([0.0, 0.0, 4.0]), 0.0);
    }

    #[test]
    fn chi_derivative_constants_scale_invariant() {
        let mut consts = Vec::new();
        for r in [4.0, 8.0, 16.0] {
            let g = Grid::covering(r, r / 16.0).unwrap();
            let c = make_cutoff(CutoffKind::RadialChi, r, &g).unwrap();
            consts.push(c.derivative_constants());
        }
        for w in consts.windows(2) {
            assert!((w[0].0 / w[1].0 - 1.0).abs() < 1e-9);
            assert!((w[0].1 / w[1].1 - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn psi_is_tangential_to_rotation_about_e1() {
        let p = CutoffProfile::new(CutoffKind::UniquenessPsi, 2.0);
        let g = Grid::covering(16.0, 0.5).unwrap();
        let mut worst: f64 = 0.0;
        for ci in 0..g.n_cells() {
            let x = g.cell_center(g.cell_coords(ci));
            let grad = p.gradient(x);
            let rot = crate::mac::cross([1.0, 0.0, 0.0], x);
            worst = worst.max(crate::mac::dot3(grad, rot).abs());
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn psi_support_and_range() {
        for r in [2.0, 4.0, 8.0] {
            for kind in [CutoffKind::UniquenessPsi, CutoffKind::UniquenessPsiRadial] {
                let p = CutoffProfile::new(kind, r);
                for &(x, y) in &[(0.5, 0.3), (2.0 * r - 1e-9, 0.0), (0.0, 2.0 * r - 1e-9)] {
                    assert_eq!(p.value([x, y, 0.0]), 1.0);
                }
                assert_eq!(p.value([4.0 * r * r + 1e-9, 0.0, 0.0]), 0.0);
                assert_eq!(p.value([0.0, 4.0 * r * r + 1e-9, 0.0]), 0.0);
                for t in 0..200 {
                    let s = t as f64 / 200.0 * 4.5 * r * r;
                    let v = p.value([s * 0.6, s * 0.8, 0.0]);
                    assert!((0.0..=1.0).contains(&v));
                    let gr = p.gradient([s * 0.6, s * 0.8, 0.0]);
                    if norm3(gr) > 0.0 {
                        assert!(s > 2.0 * r && s < 4.0 * r * r);
                    }
                }
            }
        }
    }

    #[test]
    fn axial_quadrature_decreases_for_elongated_psi() {
        let q: Vec<f64> = [2.0, 4.0, 8.0]
            .iter()
            .map(|&r| psi_axial_quadrature(&CutoffProfile::new(CutoffKind::UniquenessPsi, r), 400))
            .collect();
        assert!(q[0] > q[1] && q[1] > q[2], "{q:?}");
        // Closed form: 2 pi * ln(a^2) / (a^2 - 1) for the total variation 1 profile.
        for (i, &r) in [2.0f64, 4.0, 8.0].iter().enumerate() {
            let a2 = 2.0 * r;
            let exact = 2.0 * PI * a2.ln() / (a2 - 1.0);
            assert!((q[i] - exact).abs() / exact < 2e-3, "{} vs {exact}", q[i]);
        }
    }

    #[test]
    fn annulus_mean_zero_examples() {
        let d = build_truncated_domain(sphere(), 8.0, 0.5).unwrap();
        let ann = d.annulus(2.0, 4.0).unwrap();
        let g = d.grid;
        let odd: Vec<f64> = (0..g.n_cells()).map(|c| g.cell_center(g.cell_coords(c))[0]).collect();
        assert!(annulus_mean_zero_check(&g, &ann, &odd).unwrap() < 1e-12);
        let ones = vec![1.0; g.n_cells()];
        assert!((annulus_mean_zero_check(&g, &ann, &ones).unwrap() - 1.0).abs() < 1e-12);
        assert!(d.annulus(3.0, 3.01).is_err());
    }

    #[test]
    fn mask_dump_roundtrip() {
        let d = build_truncated_domain(sphere(), 4.0, 0.5).unwrap();
        let dump = d.mask_dump();
        let bytes = dump.encode();
        assert_eq!(MaskDump::decode(&bytes).unwrap(), dump);
        assert!(MaskDump::decode(&bytes[..bytes.len() - 1]).is_err());
        let csv = dump.to_csv();
        assert_eq!(csv.lines().count(), 1 + 16 * 16 * 16);
    }
}
