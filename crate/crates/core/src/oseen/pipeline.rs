//! Far-field run: linear solve, cut-off transfer, moving-frame Cauchy solve on
//! nested periodic boxes, and the decay report back in the body frame.
//!
//! A single periodic box biases the far field by its image lattice (the mean
//! flow removed with the zero mode decays only like `1/L`). The fine solve is
//! therefore corrected by `big - coarse`, where `coarse` repeats the fine box
//! at `n / f` points and `big` is `f` times larger at `n` points: both see the
//! same smoothed source, so their difference cancels the image field of the
//! fine box and replaces it with the much weaker one of the big box.

use super::cauchy::{interpolate_real, solve_oseen_cauchy, CauchyConfig, FreeDecaySample, OseenCauchySolution, SparseSource};
use super::frame::{FrameReport, MovingFrame};
use super::spectral::{SpectralBox, VecField};
use super::transfer::{cutoff_transfer, TransferReport, WholeSpaceProblem};
use super::wake::{fit_rays, rays, RayFamily, RayFit, WakeWeight};
use crate::error::{Error, Result};
use crate::linear::{run_linear, LinearConfig, LinearReport};
use crate::mac::norm3;
use serde::{Deserialize, Serialize};

/// Relative size of the free part against the forced wake norm that ends the
/// period count.
pub const FREE_PART_FRACTION: f64 = 0.01;

/// Accepted exponent bands.
pub const WAKE_BAND: (f64, f64) = (-1.3, -0.7);
pub const UPSTREAM_BAND: (f64, f64) = (-2.4, -1.6);
pub const WINDOW_SHIFT: f64 = 1.2;
pub const WEIGHTED_STABILITY: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct OseenConfig {
    pub linear: LinearConfig,
    pub r_bar: f64,
    pub box_n: usize,
    /// Box edge; `None` picks [`default_box_len`].
    pub box_l: Option<f64>,
    /// Refinement factor of the image correction; 0 turns it off.
    pub image_factor: usize,
    /// Source mollifier width in units of the box spacing.
    pub filter: f64,
    pub n_out: usize,
    pub ray_samples: usize,
    /// Guard band for `sup |x0|`; `None` means `R_bar`.
    pub drift_guard: Option<f64>,
    /// Number of periods before the first output; `None` uses [`horizon_periods`].
    pub periods: Option<usize>,
}

impl OseenConfig {
    pub fn new(linear: LinearConfig, r_bar: f64) -> Self {
        OseenConfig {
            linear,
            r_bar,
            box_n: 128,
            box_l: None,
            image_factor: 8,
            filter: 0.5,
            n_out: 4,
            ray_samples: 16,
            drift_guard: None,
            periods: None,
        }
    }

    pub fn box_len(&self) -> f64 {
        self.box_l.unwrap_or_else(|| default_box_len(self.r_bar))
    }

    /// Fit window `[4 R_bar, L / 4]`.
    pub fn window(&self) -> (f64, f64) {
        (4.0 * self.r_bar, 0.25 * self.box_len())
    }
}

/// Smallest multiple of 64 above both `8 R_bar^2` and `180 R_bar`, so the fit
/// window holds a decade with room to shift it.
pub fn default_box_len(r_bar: f64) -> f64 {
    let need = (8.0 * r_bar * r_bar).max(180.0 * r_bar);
    (need / 64.0).ceil() * 64.0
}

/// Periods needed for the window `r <= r_max` to settle: diffusive
/// `4 r_max^2` without drift, else the advective `2 r_max / lambda`, capped so
/// the wake does not wrap into the window.
pub fn horizon_periods(lambda: f64, r_max: f64, box_l: f64, period: f64) -> usize {
    let h = if lambda > 0.0 { (2.0 * r_max / lambda).min((box_l - r_max) / lambda) } else { 4.0 * r_max * r_max };
    ((h / period).ceil() as usize).max(2)
}

/// Free-part period count: smallest `n` with `(n T)^{-1/4} ||w0||_6` below
/// [`FREE_PART_FRACTION`] of the forced wake norm.
pub fn free_part_periods(w0_l6: f64, forced_wake_norm: f64, period: f64) -> usize {
    if w0_l6 == 0.0 {
        return 0;
    }
    if forced_wake_norm <= 0.0 {
        return usize::MAX;
    }
    let t = (w0_l6 / (FREE_PART_FRACTION * forced_wake_norm)).powi(4);
    (t / period).ceil().max(1.0) as usize
}

/// Fine box plus optional image correction, evaluated at frame positions.
pub struct FarField {
    pub fine: OseenCauchySolution,
    pub correction: Option<(OseenCauchySolution, OseenCauchySolution)>,
}

impl FarField {
    pub fn n_out(&self) -> usize {
        self.fine.n_out()
    }

    fn at(sol: &OseenCauchySolution, j: usize, y: [f64; 3], forced_only: bool) -> [f64; 3] {
        let mut v = interpolate_real(&sol.sbox, &sol.v1[j], y);
        if !forced_only {
            let b = interpolate_real(&sol.sbox, &sol.v2[j], y);
            for d in 0..3 {
                v[d] += b[d];
            }
        }
        v
    }

    /// Velocity at frame position `y` and output `j`.
    pub fn eval(&self, j: usize, y: [f64; 3], forced_only: bool) -> [f64; 3] {
        let mut v = Self::at(&self.fine, j, y, forced_only);
        if let Some((coarse, big)) = &self.correction {
            let c = Self::at(coarse, j, y, forced_only);
            let b = Self::at(big, j, y, forced_only);
            for d in 0..3 {
                v[d] += b[d] - c[d];
            }
        }
        v
    }
}

/// `log10 sup_t |u|` on the `x3 = 0` plane of the body frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WakeMap {
    pub lambda: f64,
    pub extent: f64,
    pub n: usize,
    /// Row `i` is `x2 = -extent + 2 extent i / (n - 1)`, column `j` likewise in `x1`.
    pub log10_speed: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WakeChecks {
    pub upstream: f64,
    pub wake: f64,
    pub transverse_mean: f64,
    pub worst_isotropic: f64,
    pub exponents_ok: bool,
    pub weighted_ok: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OseenReport {
    pub lambda: f64,
    pub period: f64,
    pub r_bar: f64,
    pub box_n: usize,
    pub box_l: f64,
    pub image_factor: usize,
    pub filter_width: f64,
    pub periods: usize,
    pub horizon: f64,
    pub free_part_periods: usize,
    pub free_part_resolved: bool,
    pub w0_l6: f64,
    pub forced_wake_norm: f64,
    pub source_net_force: [f64; 3],
    pub source_support: f64,
    pub div_defect: f64,
    /// `||p||_r` for `r = 2, 3, 6` at every output of the fine box.
    pub pressure_norms: Vec<[f64; 3]>,
    pub free_decay: Vec<(f64, f64)>,
    pub window: (f64, f64),
    pub weighted_inner: f64,
    pub weighted_outer: f64,
    pub weighted_shift: f64,
    /// Lattice points attaining the two weighted sups.
    pub weighted_argmax: ([f64; 3], [f64; 3]),
    pub transfer: TransferReport,
    pub frame: FrameReport,
    pub checks: WakeChecks,
}

pub struct OseenRun {
    pub linear: LinearReport,
    pub report: OseenReport,
    pub fits: Vec<RayFit>,
    pub wake_map: WakeMap,
}

/// Deposits the whole-space data into the frame of `sbox`.
pub fn transform_to_cauchy(
    problem: &WholeSpaceProblem,
    frame: &MovingFrame,
    sbox: &SpectralBox,
) -> Result<(SparseSource, Option<VecField>)> {
    let nt = problem.n_t();
    if frame.n_t() != nt {
        return Err(Error::Precondition(format!("frame has {} samples, data has {nt}", frame.n_t())));
    }
    let g = &problem.grid;
    let vol = g.cell_volume();
    let mut src = SparseSource::new(problem.period, nt);
    for (n, s) in problem.source.iter().enumerate() {
        for &(f, val) in s {
            let (d, c) = g.face_coords(f);
            let mut v = [0.0; 3];
            v[d] = val * vol;
            src.deposit(sbox, n, frame.to_frame(n, g.face_pos(d, c)), frame.rotate(n, v));
        }
    }
    let w0 = if problem.w0.is_empty() {
        None
    } else {
        let mut field = sbox.zero_field();
        let inv = vol / sbox.dx().powi(3);
        for &(f, val) in &problem.w0 {
            let (d, c) = g.face_coords(f);
            let mut v = [0.0; 3];
            v[d] = val * inv;
            let y = frame.to_frame(0, g.face_pos(d, c));
            let v = frame.rotate(0, v);
            for e in 0..3 {
                if v[e] != 0.0 {
                    sbox.deposit(&mut field[e], y, v[e]);
                }
            }
        }
        Some(field)
    };
    Ok((src, w0))
}

fn band(x: f64, b: (f64, f64)) -> bool {
    x >= b.0 && x <= b.1
}

fn checks(fits: &[RayFit], lambda: f64, weighted_shift: f64) -> WakeChecks {
    let by = |fam: RayFamily| fits.iter().filter(move |f| f.family == fam);
    let upstream = by(RayFamily::Upstream).map(|f| f.exponent).next().unwrap_or(f64::NAN);
    let wake = by(RayFamily::Wake).map(|f| f.exponent).next().unwrap_or(f64::NAN);
    let tr: Vec<f64> = by(RayFamily::Transverse).map(|f| f.exponent).collect();
    let transverse_mean = tr.iter().sum::<f64>() / tr.len().max(1) as f64;
    let worst_isotropic = fits.iter().map(|f| (f.exponent + 1.0).abs()).fold(0.0, f64::max);
    let exponents_ok = if lambda > 0.0 {
        band(wake, WAKE_BAND) && band(upstream, UPSTREAM_BAND)
    } else {
        fits.iter().all(|f| band(f.exponent, WAKE_BAND))
    };
    let weighted_ok = weighted_shift.is_finite() && weighted_shift <= WEIGHTED_STABILITY;
    WakeChecks {
        upstream,
        wake,
        transverse_mean,
        worst_isotropic,
        exponents_ok,
        weighted_ok,
        pass: exponents_ok && weighted_ok,
    }
}

fn l6_faces(problem: &WholeSpaceProblem) -> f64 {
    let s: f64 = problem.w[0].iter().map(|v| v.powi(6)).sum::<f64>() * problem.grid.cell_volume();
    s.powf(1.0 / 6.0)
}

pub fn run_oseen(cfg: &OseenConfig) -> Result<OseenRun> {
    let mut lin_cfg = cfg.linear.clone();
    lin_cfg.pressure = true;
    let motion = lin_cfg.motion.clone();
    let period = motion.period;
    let lambda = motion.lambda;
    let box_l = cfg.box_len();
    let (r_min, r_max) = cfg.window();
    if box_l < 8.0 * cfg.r_bar * cfg.r_bar {
        return Err(Error::BoxSize(format!("box edge {box_l} is below 8 R_bar^2 = {}", 8.0 * cfg.r_bar * cfg.r_bar)));
    }
    if r_max < 10.0 * r_min {
        return Err(Error::FitWindow(format!("window [{r_min}, {r_max}] spans less than one decade")));
    }
    if cfg.n_out == 0 || lin_cfg.n_t % cfg.n_out != 0 {
        return Err(Error::Resolution(format!("{} outputs do not divide {} time samples", cfg.n_out, lin_cfg.n_t)));
    }
    // cheap refusals first
    let frame = MovingFrame::new(&motion, lin_cfg.n_t, cfg.drift_guard.unwrap_or(cfg.r_bar))?;
    let fine_box = SpectralBox::new(cfg.box_n, box_l)?;
    let boxes = if cfg.image_factor > 0 {
        let f = cfg.image_factor;
        if cfg.box_n % f != 0 || cfg.box_n / f < 8 {
            return Err(Error::Resolution(format!("image factor {f} does not divide {} into at least 8", cfg.box_n)));
        }
        Some((SpectralBox::new(cfg.box_n / f, box_l)?, SpectralBox::new(cfg.box_n, box_l * f as f64)?))
    } else {
        None
    };

    let lin = run_linear(&lin_cfg)?;
    let problem = cutoff_transfer(&lin.field, &lin_cfg.forcing, cfg.r_bar)?;

    let periods = cfg.periods.unwrap_or_else(|| horizon_periods(lambda, r_max, box_l, period));
    let horizon = periods as f64 * period;
    let probes: Vec<f64> = (0..8).map(|i| period * (periods as f64).powf(i as f64 / 7.0)).collect();
    let solve = |sbox: &SpectralBox, probes: Vec<f64>| -> Result<(OseenCauchySolution, SparseSource)> {
        let (src, w0) = transform_to_cauchy(&problem, &frame, sbox)?;
        let c = CauchyConfig { lambda, horizon, n_out: cfg.n_out, filter_width: cfg.filter * sbox.dx(), free_probe_times: probes };
        Ok((solve_oseen_cauchy(sbox, &src, w0.as_ref(), &c)?, src))
    };
    let (fine, fine_src) = solve(&fine_box, probes)?;
    let correction = match &boxes {
        Some((c, b)) => Some((solve(c, vec![])?.0, solve(b, vec![])?.0)),
        None => None,
    };
    let source_net_force = {
        let nf = fine_src.net_force(&fine_box);
        let mut m = [0.0; 3];
        for f in &nf {
            for d in 0..3 {
                m[d] += f[d] / nf.len() as f64;
            }
        }
        m
    };
    let source_support = fine_src.support_radius(&fine_box);
    drop(fine_src);
    let far = FarField { fine, correction };

    let out_index: Vec<usize> = (0..cfg.n_out).map(|j| j * lin_cfg.n_t / cfg.n_out).collect();
    let sup_t = |x: [f64; 3], forced_only: bool| -> f64 {
        out_index
            .iter()
            .enumerate()
            .map(|(j, &n)| norm3(far.eval(j, frame.to_frame(n, x), forced_only)))
            .fold(0.0, f64::max)
    };
    let value = |x: [f64; 3]| sup_t(x, false);
    let fits = fit_rays(&value, lambda, r_min, r_max, cfg.ray_samples)?;

    // weighted sup over the fine lattice, inner and shifted windows
    let weight = WakeWeight::new(lambda);
    let (mut w_in, mut w_out, mut forced_wake_norm) = (0.0f64, 0.0f64, 0.0f64);
    let (mut at_in, mut at_out) = ([0.0; 3], [0.0; 3]);
    for idx in 0..fine_box.len() {
        let x = fine_box.position(fine_box.coords(idx));
        let r = norm3(x);
        if r < r_min || r > r_max {
            continue;
        }
        let wgt = weight.weight(x, 1);
        let full = wgt * value(x);
        if r <= r_max / WINDOW_SHIFT && full > w_in {
            w_in = full;
            at_in = x;
        }
        if r >= r_min * WINDOW_SHIFT && full > w_out {
            w_out = full;
            at_out = x;
        }
        forced_wake_norm = forced_wake_norm.max(wgt * sup_t(x, true));
    }
    let weighted_shift = if w_in > 0.0 { (w_out / w_in - 1.0).abs() } else { f64::NAN };

    let w0_l6 = l6_faces(&problem);
    let n_free = free_part_periods(w0_l6, forced_wake_norm, period);

    let n_map = 65;
    let mut log10_speed = Vec::with_capacity(n_map * n_map);
    for i in 0..n_map {
        for j in 0..n_map {
            let s = |k: usize| -r_max + 2.0 * r_max * k as f64 / (n_map - 1) as f64;
            log10_speed.push(value([s(j), s(i), 0.0]).max(1e-300).log10());
        }
    }
    let wake_map = WakeMap { lambda, extent: r_max, n: n_map, log10_speed };

    let sample_points: Vec<[f64; 3]> =
        rays().iter().flat_map(|ray| [r_min, r_max].map(|r| ray.direction.map(|d| d * r))).collect();
    let frame_report = frame.report(&motion, &sample_points);
    let pressure_norms = (0..far.n_out()).map(|j| [2.0, 3.0, 6.0].map(|r| far.fine.pressure_norm(j, r))).collect();
    let free_decay = far.fine.free_decay.iter().map(|s: &FreeDecaySample| (s.t, s.scaled)).collect();
    let checks = checks(&fits, lambda, weighted_shift);
    let report = OseenReport {
        lambda,
        period,
        r_bar: cfg.r_bar,
        box_n: cfg.box_n,
        box_l,
        image_factor: cfg.image_factor,
        filter_width: cfg.filter * fine_box.dx(),
        periods,
        horizon,
        free_part_periods: n_free,
        free_part_resolved: periods >= n_free,
        w0_l6,
        forced_wake_norm,
        source_net_force,
        source_support,
        div_defect: far.fine.div_defect,
        pressure_norms,
        free_decay,
        window: (r_min, r_max),
        weighted_inner: w_in,
        weighted_outer: w_out,
        weighted_shift,
        weighted_argmax: (at_in, at_out),
        transfer: problem.report.clone(),
        frame: frame_report,
        checks,
    };
    Ok(OseenRun { linear: lin.report, report, fits, wake_map })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_and_horizon_rules() {
        assert_eq!(default_box_len(8.5), 1536.0);
        assert!(default_box_len(20.0) >= 3200.0);
        let t = 4.0 * std::f64::consts::PI;
        assert_eq!(horizon_periods(0.5, 384.0, 1536.0, t), (1536.0 / t).ceil() as usize);
        // the cap keeps the wake inside the box
        assert_eq!(horizon_periods(0.5, 384.0, 800.0, t), (832.0 / t).ceil() as usize);
        assert_eq!(horizon_periods(0.0, 10.0, 100.0, 1.0), 400);
        assert_eq!(horizon_periods(0.0, 0.1, 100.0, 1.0), 2);
    }

    #[test]
    fn free_part_rule() {
        assert_eq!(free_part_periods(0.0, 1.0, 1.0), 0);
        // (1 / 0.01)^4 = 1e8
        assert_eq!(free_part_periods(1.0, 1.0, 1e4), 10_000);
        assert_eq!(free_part_periods(1.0, 0.0, 1.0), usize::MAX);
    }
}
