//! Time-periodic forcing of `v_t = lap v + lambda d_1 v - grad q + G` on the
//! periodic box, solved exactly per wavenumber.
//!
//! With `a(k) = -|k|^2 + i lambda k_1` and the band-limited time expansion
//! `G = sum_m G_m e^{i m W t}`, the forced part with zero initial data is
//! `v1 = sum_m P G_m (e^{i m W t} - e^{a t}) / (i m W - a)` and the free part
//! is `v2 = e^{a t} P w0`.

use super::spectral::{SpectralBox, VecField, C64};
use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Relative source magnitude tolerated outside radius `L/4`.
pub const SUPPORT_TOL: f64 = 1e-6;

/// Body-force densities at box points, one map per uniform time sample.
#[derive(Clone, Debug, Default)]
pub struct SparseSource {
    pub period: f64,
    pub samples: Vec<BTreeMap<usize, [f64; 3]>>,
}

impl SparseSource {
    pub fn new(period: f64, n_t: usize) -> Self {
        SparseSource { period, samples: vec![BTreeMap::new(); n_t] }
    }

    pub fn n_t(&self) -> usize {
        self.samples.len()
    }

    pub fn add(&mut self, n: usize, idx: usize, v: [f64; 3]) {
        let e = self.samples[n].entry(idx).or_insert([0.0; 3]);
        for d in 0..3 {
            e[d] += v[d];
        }
    }

    /// Cloud-in-cell deposit of a point force `v` (an integral, not a density).
    pub fn deposit(&mut self, sbox: &SpectralBox, n: usize, y: [f64; 3], v: [f64; 3]) {
        let inv = 1.0 / sbox.dx().powi(3);
        let mut w8 = Vec::with_capacity(8);
        cic_weights(sbox, y, &mut w8);
        for (idx, w) in w8 {
            self.add(n, idx, [v[0] * w * inv, v[1] * w * inv, v[2] * w * inv]);
        }
    }

    /// `int G(y, t_n) dy` per sample.
    pub fn net_force(&self, sbox: &SpectralBox) -> Vec<[f64; 3]> {
        let dv = sbox.dx().powi(3);
        self.samples
            .iter()
            .map(|s| {
                let mut f = [0.0; 3];
                for v in s.values() {
                    for d in 0..3 {
                        f[d] += v[d] * dv;
                    }
                }
                f
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|s| s.values().all(|v| v.iter().all(|c| *c == 0.0)))
    }

    /// Largest `|y|` carrying a nonzero value.
    pub fn support_radius(&self, sbox: &SpectralBox) -> f64 {
        let mut r: f64 = 0.0;
        for s in &self.samples {
            for (idx, v) in s {
                if v.iter().any(|c| *c != 0.0) {
                    r = r.max(crate::mac::norm3(sbox.position(sbox.coords(*idx))));
                }
            }
        }
        r
    }
}

/// The eight cloud-in-cell weights around `y`.
pub fn cic_weights(sbox: &SpectralBox, y: [f64; 3], out: &mut Vec<(usize, f64)>) {
    let n = sbox.n;
    let dx = sbox.dx();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for d in 0..3 {
        let s = (y[d] + 0.5 * sbox.l) / dx;
        let f = s.floor();
        base[d] = (f as isize).rem_euclid(n as isize) as usize;
        frac[d] = s - f;
    }
    for di in 0..2 {
        for dj in 0..2 {
            for dk in 0..2 {
                let w = [di, dj, dk]
                    .iter()
                    .zip(frac)
                    .map(|(o, f)| if *o == 0 { 1.0 - f } else { f })
                    .product::<f64>();
                let idx = sbox.index((base[0] + di) % n, (base[1] + dj) % n, (base[2] + dk) % n);
                out.push((idx, w));
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct CauchyConfig {
    pub lambda: f64,
    /// First output time; outputs are `horizon + j T / n_out`.
    pub horizon: f64,
    pub n_out: usize,
    /// Gaussian mollifier width applied to the source and initial field;
    /// zero leaves them untouched.
    pub filter_width: f64,
    /// Times at which the free part is sampled for the `t^{-1/4}` replay.
    pub free_probe_times: Vec<f64>,
}

/// Real field with three components.
pub type RealField = [Vec<f64>; 3];

#[derive(Clone, Debug)]
pub struct FreeDecaySample {
    pub t: f64,
    pub l2: f64,
    pub sup: f64,
    /// `sup * t^{1/4} / ||w0||_6`.
    pub scaled: f64,
}

#[derive(Clone, Debug)]
pub struct OseenCauchySolution {
    pub sbox: SpectralBox,
    pub lambda: f64,
    pub period: f64,
    pub times: Vec<f64>,
    pub v1: Vec<RealField>,
    pub v2: Vec<RealField>,
    /// Pressure of the forced part at the output times.
    pub pressure: Vec<Vec<f64>>,
    /// Largest relative `|k . v|` over the outputs.
    pub div_defect: f64,
    pub w0_l6: f64,
    pub free_decay: Vec<FreeDecaySample>,
}

impl OseenCauchySolution {
    pub fn n_out(&self) -> usize {
        self.times.len()
    }

    /// `v1 + v2` at output `j`.
    pub fn v(&self, j: usize) -> RealField {
        [0, 1, 2].map(|d| self.v1[j][d].iter().zip(&self.v2[j][d]).map(|(a, b)| a + b).collect())
    }

    /// Pressure `L^r` norms at output `j`.
    pub fn pressure_norm(&self, j: usize, r: f64) -> f64 {
        let dv = self.sbox.dx().powi(3);
        (self.pressure[j].iter().map(|p| p.abs().powf(r)).sum::<f64>() * dv).powf(1.0 / r)
    }
}

fn to_real(v: &VecField) -> RealField {
    [0, 1, 2].map(|d| v[d].iter().map(|z| z.re).collect())
}

pub fn real_lq(sbox: &SpectralBox, v: &RealField, q: f64) -> f64 {
    let mags = (0..sbox.len()).map(|i| (v[0][i].powi(2) + v[1][i].powi(2) + v[2][i].powi(2)).sqrt());
    if q.is_infinite() {
        mags.fold(0.0, f64::max)
    } else {
        (mags.map(|m| m.powf(q)).sum::<f64>() * sbox.dx().powi(3)).powf(1.0 / q)
    }
}

/// Trilinear periodic interpolation of a real field.
pub fn interpolate_real(sbox: &SpectralBox, v: &RealField, y: [f64; 3]) -> [f64; 3] {
    let mut w = Vec::with_capacity(8);
    cic_weights(sbox, y, &mut w);
    let mut out = [0.0; 3];
    for (idx, c) in w {
        for d in 0..3 {
            out[d] += c * v[d][idx];
        }
    }
    out
}

/// `a(k)` at flat index.
#[inline]
pub fn symbol(sbox: &SpectralBox, idx: usize, lambda: f64) -> C64 {
    let k = sbox.kvec(idx);
    C64::new(-(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]), lambda * k[0])
}

/// `exp(-|k|^2 s^2 / 2)`.
#[inline]
pub fn filter(sbox: &SpectralBox, idx: usize, width: f64) -> f64 {
    if width == 0.0 {
        return 1.0;
    }
    let k = sbox.kvec(idx);
    (-(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) * width * width / 2.0).exp()
}

fn check_support(sbox: &SpectralBox, source: &SparseSource, w0: Option<&VecField>) -> Result<()> {
    let lim = 0.25 * sbox.l;
    let mut inside: f64 = 0.0;
    let mut outside: f64 = 0.0;
    for s in &source.samples {
        for (idx, v) in s {
            let m = crate::mac::norm3(*v);
            if crate::mac::norm3(sbox.position(sbox.coords(*idx))) < lim {
                inside = inside.max(m);
            } else {
                outside = outside.max(m);
            }
        }
    }
    if outside > SUPPORT_TOL * inside.max(f64::MIN_POSITIVE) {
        return Err(Error::BoxSize(format!(
            "source reaches radius {:.3} beyond L/4 = {lim:.3} (relative size {:.3e})",
            source.support_radius(sbox),
            outside / inside.max(f64::MIN_POSITIVE)
        )));
    }
    if let Some(w) = w0 {
        let (mut a, mut b): (f64, f64) = (0.0, 0.0);
        for idx in 0..sbox.len() {
            let m = (w[0][idx].norm_sqr() + w[1][idx].norm_sqr() + w[2][idx].norm_sqr()).sqrt();
            if crate::mac::norm3(sbox.position(sbox.coords(idx))) < lim {
                a = a.max(m);
            } else {
                b = b.max(m);
            }
        }
        if b > SUPPORT_TOL * a.max(f64::MIN_POSITIVE) {
            return Err(Error::BoxSize(format!("initial field reaches beyond L/4 (relative size {:.3e})", b / a)));
        }
    }
    Ok(())
}

pub fn solve_oseen_cauchy(
    sbox: &SpectralBox,
    source: &SparseSource,
    w0: Option<&VecField>,
    cfg: &CauchyConfig,
) -> Result<OseenCauchySolution> {
    let nt = source.n_t();
    if nt < 2 || nt % 2 != 0 {
        return Err(Error::Resolution(format!("source needs an even number of time samples, got {nt}")));
    }
    if cfg.n_out == 0 || !(cfg.horizon >= 0.0) {
        return Err(Error::Resolution("need at least one output at a nonnegative time".into()));
    }
    check_support(sbox, source, w0)?;
    let period = source.period;
    let big_w = 2.0 * PI / period;
    let len = sbox.len();
    let times: Vec<f64> = (0..cfg.n_out).map(|j| cfg.horizon + j as f64 * period / cfg.n_out as f64).collect();

    // e^{a t_j} per output
    let decay: Vec<Vec<C64>> = times
        .iter()
        .map(|&t| (0..len).map(|i| (symbol(sbox, i, cfg.lambda) * t).exp()).collect())
        .collect();

    let mut acc: Vec<VecField> = (0..cfg.n_out).map(|_| sbox.zero_field()).collect();
    let mut pacc: Vec<Vec<C64>> = (0..cfg.n_out).map(|_| sbox.zeros()).collect();

    // time DFT on the union of supports
    let mut support: BTreeMap<usize, Vec<[f64; 3]>> = BTreeMap::new();
    for (n, s) in source.samples.iter().enumerate() {
        for (idx, v) in s {
            support.entry(*idx).or_insert_with(|| vec![[0.0; 3]; nt])[n] = *v;
        }
    }
    if !support.is_empty() {
        for m in 0..nt {
            let mut g = sbox.zero_field();
            let mut any = false;
            for (idx, series) in &support {
                for d in 0..3 {
                    let mut z = C64::new(0.0, 0.0);
                    for (n, v) in series.iter().enumerate() {
                        if v[d] != 0.0 {
                            let ph = -2.0 * PI * (m * n) as f64 / nt as f64;
                            z += C64::from_polar(v[d], ph);
                        }
                    }
                    z /= nt as f64;
                    any |= z.norm() > 0.0;
                    g[d][*idx] = z;
                }
            }
            if !any {
                continue;
            }
            sbox.forward_field(&mut g);
            // frequencies carried by this coefficient, with weights
            let freqs: Vec<(f64, f64)> = if m < nt / 2 {
                vec![(m as f64, 1.0)]
            } else if m > nt / 2 {
                vec![(m as f64 - nt as f64, 1.0)]
            } else {
                vec![(m as f64, 0.5), (-(m as f64), 0.5)]
            };
            for idx in 0..len {
                let k = sbox.kvec(idx);
                let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                if k2 == 0.0 || sbox.is_nyquist(idx) {
                    continue;
                }
                let damp = filter(sbox, idx, cfg.filter_width);
                let gv = [g[0][idx] * damp, g[1][idx] * damp, g[2][idx] * damp];
                let kdot = gv[0] * k[0] + gv[1] * k[1] + gv[2] * k[2];
                let pg = [0, 1, 2].map(|d| gv[d] - kdot * (k[d] / k2));
                let q = -C64::i() * kdot / k2;
                let a = symbol(sbox, idx, cfg.lambda);
                for &(f, wgt) in &freqs {
                    let iw = C64::new(0.0, f * big_w);
                    let res = wgt / (iw - a);
                    for (j, &t) in times.iter().enumerate() {
                        let osc = (iw * t).exp();
                        let c = res * (osc - decay[j][idx]);
                        for d in 0..3 {
                            acc[j][d][idx] += pg[d] * c;
                        }
                        pacc[j][idx] += q * osc * wgt;
                    }
                }
            }
        }
    }

    let mut div_defect: f64 = 0.0;
    let mut v1 = Vec::with_capacity(cfg.n_out);
    for mut a in acc {
        div_defect = div_defect.max(sbox.divergence_defect(&a));
        sbox.inverse_field(&mut a);
        v1.push(to_real(&a));
    }
    let pressure: Vec<Vec<f64>> = pacc
        .into_iter()
        .map(|mut p| {
            sbox.inverse(&mut p);
            p.iter().map(|z| z.re).collect()
        })
        .collect();

    // free part
    let mut w0_hat = match w0 {
        Some(w) => {
            let mut c = w.clone();
            sbox.forward_field(&mut c);
            sbox.project(&mut c);
            if cfg.filter_width > 0.0 {
                for idx in 0..len {
                    let damp = filter(sbox, idx, cfg.filter_width);
                    for comp in c.iter_mut() {
                        comp[idx] *= damp;
                    }
                }
            }
            Some(c)
        }
        None => None,
    };
    let w0_l6 = w0.map(|w| sbox.lq(w, 6.0)).unwrap_or(0.0);
    let evolve = |hat: &VecField, t: f64, table: Option<&Vec<C64>>| -> VecField {
        let mut out = sbox.zero_field();
        for idx in 0..len {
            let e = match table {
                Some(tb) => tb[idx],
                None => (symbol(sbox, idx, cfg.lambda) * t).exp(),
            };
            for d in 0..3 {
                out[d][idx] = hat[d][idx] * e;
            }
        }
        out
    };
    let mut v2 = Vec::with_capacity(cfg.n_out);
    for (j, &t) in times.iter().enumerate() {
        match &w0_hat {
            Some(h) => {
                let mut f = evolve(h, t, Some(&decay[j]));
                div_defect = div_defect.max(sbox.divergence_defect(&f));
                sbox.inverse_field(&mut f);
                v2.push(to_real(&f));
            }
            None => v2.push([vec![0.0; len], vec![0.0; len], vec![0.0; len]]),
        }
    }
    let mut free_decay = Vec::new();
    if let Some(h) = w0_hat.take() {
        for &t in &cfg.free_probe_times {
            let mut f = evolve(&h, t, None);
            sbox.inverse_field(&mut f);
            let sup = sbox.lq(&f, f64::INFINITY);
            let scaled = if w0_l6 > 0.0 { sup * t.powf(0.25) / w0_l6 } else { 0.0 };
            free_decay.push(FreeDecaySample { t, l2: sbox.l2(&f), sup, scaled });
        }
    }
    Ok(OseenCauchySolution {
        sbox: sbox.clone(),
        lambda: cfg.lambda,
        period,
        times,
        v1,
        v2,
        pressure,
        div_defect,
        w0_l6,
        free_decay,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::TimeGrid;

    fn cfg(lambda: f64, horizon: f64, n_out: usize, probes: Vec<f64>) -> CauchyConfig {
        CauchyConfig { lambda, horizon, n_out, filter_width: 0.0, free_probe_times: probes }
    }

    #[test]
    fn zero_data_gives_zero() {
        let sb = SpectralBox::new(8, 10.0).unwrap();
        let s = solve_oseen_cauchy(&sb, &SparseSource::new(1.0, 4), None, &cfg(0.5, 3.0, 2, vec![])).unwrap();
        assert!(s.v(0).iter().chain(s.v(1).iter()).all(|c| c.iter().all(|v| *v == 0.0)));
    }

    /// `w0 = curl (0, 0, psi)` with a Gaussian `psi`, which the heat flow
    /// keeps Gaussian.
    fn stream(tau: f64, x: [f64; 3], t: f64) -> [f64; 3] {
        let s = tau + t;
        let amp = (tau / s).powf(1.5);
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        let psi = amp * (-r2 / (4.0 * s)).exp();
        [-x[1] / (2.0 * s) * psi, x[0] / (2.0 * s) * psi, 0.0]
    }

    #[test]
    fn free_part_follows_the_heat_kernel() {
        let sb = SpectralBox::new(48, 16.0).unwrap();
        let tau = 0.2;
        let w0 = sb.sample(|x| stream(tau, x, 0.0));
        let s = solve_oseen_cauchy(&sb, &SparseSource::new(1.0, 2), Some(&w0), &cfg(0.0, 0.5, 1, vec![])).unwrap();
        let exact = sb.sample(|x| stream(tau, x, 0.5));
        let mut err: f64 = 0.0;
        let mut top: f64 = 0.0;
        for d in 0..3 {
            for i in 0..sb.len() {
                err = err.max((s.v2[0][d][i] - exact[d][i].re).abs());
                top = top.max(exact[d][i].re.abs());
            }
        }
        assert!(err < 1e-8 * top, "{err:.3e} vs {top:.3e}");
    }

    #[test]
    fn free_energy_decays_and_drift_is_neutral() {
        let sb = SpectralBox::new(32, 24.0).unwrap();
        let w0 = sb.sample(|x| {
            let a = stream(0.4, [x[0] - 0.5, x[1], x[2] + 0.3], 0.0);
            [a[0], a[1] + 0.2 * a[0], a[2]]
        });
        let probes = vec![0.1, 0.2, 0.4, 0.8, 1.6, 3.2];
        let a = solve_oseen_cauchy(&sb, &SparseSource::new(1.0, 2), Some(&w0), &cfg(0.7, 0.0, 1, probes.clone())).unwrap();
        let b = solve_oseen_cauchy(&sb, &SparseSource::new(1.0, 2), Some(&w0), &cfg(0.0, 0.0, 1, probes)).unwrap();
        for w in a.free_decay.windows(2) {
            assert!(w[1].l2 <= w[0].l2 * (1.0 + 1e-12));
        }
        for (p, q) in a.free_decay.iter().zip(&b.free_decay) {
            assert!((p.l2 - q.l2).abs() < 1e-12 * q.l2);
            assert!(p.scaled.is_finite() && p.scaled <= a.free_decay[0].scaled.max(1.0) * 10.0);
        }
    }

    #[test]
    fn forced_part_matches_mode_by_mode_integration() {
        let sb = SpectralBox::new(8, 2.0 * PI).unwrap();
        let period = 1.5;
        let nt = 8;
        let lambda = 0.6;
        let mut src = SparseSource::new(period, nt);
        let pts = [sb.index(4, 4, 4), sb.index(5, 4, 3), sb.index(3, 5, 4)];
        for n in 0..nt {
            let t = n as f64 * period / nt as f64;
            for (j, &p) in pts.iter().enumerate() {
                let ph = 2.0 * PI * t / period;
                src.add(n, p, [(ph + j as f64).cos(), 0.5 * (2.0 * ph).sin(), 0.3 + 0.1 * j as f64]);
            }
        }
        let horizon = 0.37;
        let s = solve_oseen_cauchy(&sb, &src, None, &cfg(lambda, horizon, 2, vec![])).unwrap();
        // RK4 per mode on the trigonometric interpolant of the samples
        let grid = TimeGrid::new(period, nt).unwrap();
        let mut hats: Vec<VecField> = (0..nt)
            .map(|n| {
                let mut g = sb.zero_field();
                for (idx, v) in &src.samples[n] {
                    for d in 0..3 {
                        g[d][*idx] = C64::new(v[d], 0.0);
                    }
                }
                sb.forward_field(&mut g);
                sb.project(&mut g);
                g
            })
            .collect();
        let forcing = |t: f64, idx: usize, d: usize, h: &Vec<VecField>| -> C64 {
            grid.interp_weights(t).iter().zip(h).map(|(w, g)| g[d][idx] * *w).sum()
        };
        for (j, &tend) in s.times.iter().enumerate() {
            let steps = 800;
            let dt = tend / steps as f64;
            let mut out = sb.zero_field();
            for idx in 0..sb.len() {
                let a = symbol(&sb, idx, lambda);
                for d in 0..3 {
                    let mut y = C64::new(0.0, 0.0);
                    for st in 0..steps {
                        let t = st as f64 * dt;
                        let f = |t: f64, y: C64| a * y + forcing(t, idx, d, &hats);
                        let k1 = f(t, y);
                        let k2 = f(t + dt / 2.0, y + k1 * (dt / 2.0));
                        let k3 = f(t + dt / 2.0, y + k2 * (dt / 2.0));
                        let k4 = f(t + dt, y + k3 * dt);
                        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
                    }
                    out[d][idx] = y;
                }
            }
            sb.inverse_field(&mut out);
            for d in 0..3 {
                for i in 0..sb.len() {
                    assert!((out[d][i].re - s.v1[j][d][i]).abs() < 1e-9, "{} vs {}", out[d][i].re, s.v1[j][d][i]);
                }
            }
        }
        hats.clear();
        assert!(s.div_defect < 1e-14);
    }

    #[test]
    fn overflowing_support_is_refused() {
        let sb = SpectralBox::new(8, 8.0).unwrap();
        let mut src = SparseSource::new(1.0, 2);
        src.add(0, sb.index(0, 0, 0), [1.0, 0.0, 0.0]);
        assert!(matches!(solve_oseen_cauchy(&sb, &src, None, &cfg(0.0, 1.0, 1, vec![])), Err(Error::BoxSize(_))));
    }
}
