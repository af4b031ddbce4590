//! Wake weight `(1 + |x|)(1 + 2 lambda s(x))`, `s = |x| + x1`, and log-log
//! decay fits along rays.

use crate::error::{Error, Result};
use crate::mac::norm3;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WakeWeight {
    pub lambda: f64,
}

impl WakeWeight {
    pub fn new(lambda: f64) -> Self {
        WakeWeight { lambda }
    }

    /// `|x| + x1`, zero exactly on the ray through `-e1`.
    #[inline]
    pub fn s(x: [f64; 3]) -> f64 {
        (norm3(x) + x[0]).max(0.0)
    }

    /// `((1 + |x|)(1 + 2 lambda s))^m`.
    #[inline]
    pub fn weight(&self, x: [f64; 3], m: i32) -> f64 {
        ((1.0 + norm3(x)) * (1.0 + 2.0 * self.lambda * Self::s(x))).powi(m)
    }
}

/// `sup weight(x) |f(x)|` over the given samples.
pub fn wake_norm<I>(samples: I, lambda: f64, m: i32) -> f64
where
    I: IntoIterator<Item = ([f64; 3], [f64; 3])>,
{
    let w = WakeWeight::new(lambda);
    samples.into_iter().map(|(x, f)| w.weight(x, m) * norm3(f)).fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RayFamily {
    Upstream,
    Wake,
    Transverse,
    Oblique,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Ray {
    pub id: usize,
    pub direction: [f64; 3],
    pub family: RayFamily,
}

/// Sixteen rays: the six axis directions and ten oblique ones.
pub fn rays() -> Vec<Ray> {
    let raw: [[f64; 3]; 16] = [
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
        [1.0, 1.0, 0.0],
        [1.0, -1.0, 0.0],
        [-1.0, 1.0, 0.0],
        [-1.0, -1.0, 0.0],
        [1.0, 0.0, 1.0],
        [-1.0, 0.0, 1.0],
        [0.0, 1.0, 1.0],
        [0.0, 1.0, -1.0],
        [1.0, 1.0, 1.0],
        [-1.0, -1.0, -1.0],
    ];
    raw.iter()
        .enumerate()
        .map(|(id, d)| {
            let n = norm3(*d);
            let direction = d.map(|v| v / n);
            let family = match id {
                0 => RayFamily::Upstream,
                1 => RayFamily::Wake,
                2..=5 => RayFamily::Transverse,
                _ => RayFamily::Oblique,
            };
            Ray { id, direction, family }
        })
        .collect()
}

/// `n` radii log-spaced over `[a, b]`.
pub fn log_radii(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1).max(1) as f64)).collect()
}

/// Least-squares slope and `R^2` of `ln y` against `ln x`.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 3 {
        return Err(Error::FitWindow(format!("only {} positive samples to fit", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::FitWindow("degenerate fit abscissae".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok((slope, r2))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayFit {
    pub id: usize,
    pub direction: [f64; 3],
    pub family: RayFamily,
    pub r_min: f64,
    pub r_max: f64,
    pub exponent: f64,
    pub r2: f64,
    /// `sup (1+|x|)(1+2 lambda s)|u|` along the ray.
    pub weighted: f64,
    /// `(r, |u|)` pairs the fit was made from.
    pub samples: Vec<[f64; 2]>,
}

/// Fits `|u|` sampled by `value(x)` along every ray over `[r_min, r_max]`.
pub fn fit_rays(
    value: &(dyn Fn([f64; 3]) -> f64 + Sync),
    lambda: f64,
    r_min: f64,
    r_max: f64,
    samples: usize,
) -> Result<Vec<RayFit>> {
    if !(r_min > 0.0 && r_max >= 10.0 * r_min * (1.0 - 1e-12)) {
        return Err(Error::FitWindow(format!("window [{r_min:.3}, {r_max:.3}] spans less than one decade")));
    }
    let radii = log_radii(r_min, r_max, samples);
    let w = WakeWeight::new(lambda);
    rays()
        .into_iter()
        .map(|ray| {
            let vals: Vec<f64> = radii.iter().map(|&r| value(ray.direction.map(|d| d * r))).collect();
            let (exponent, r2) = fit_loglog(&radii, &vals)?;
            let weighted = radii
                .iter()
                .zip(&vals)
                .map(|(&r, v)| w.weight(ray.direction.map(|d| d * r), 1) * v)
                .fold(0.0, f64::max);
            let samples = radii.iter().zip(&vals).map(|(&r, &v)| [r, v]).collect();
            Ok(RayFit { id: ray.id, direction: ray.direction, family: ray.family, r_min, r_max, exponent, r2, weighted, samples })
        })
        .collect()
}

pub fn rays_csv(fits: &[RayFit]) -> String {
    let mut s = String::from("ray,direction,family,r_min,r_max,exponent,r2,weighted\n");
    for f in fits {
        s.push_str(&format!(
            "{},{:.6} {:.6} {:.6},{:?},{:.6},{:.6},{:.6},{:.6},{:.6e}\n",
            f.id, f.direction[0], f.direction[1], f.direction[2], f.family, f.r_min, f.r_max, f.exponent, f.r2, f.weighted
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn weight_examples() {
        let w = WakeWeight::new(0.5);
        assert_eq!(WakeWeight::s([-3.0, 0.0, 0.0]), 0.0);
        assert!((WakeWeight::s([3.0, 0.0, 0.0]) - 6.0).abs() < 1e-15);
        // the inverse weight has norm one, attained everywhere
        let pts: Vec<([f64; 3], [f64; 3])> = (0..200)
            .map(|i| {
                let x = [i as f64 * 0.7 - 70.0, (i % 7) as f64, -((i % 3) as f64)];
                (x, [1.0 / w.weight(x, 1), 0.0, 0.0])
            })
            .collect();
        assert!((wake_norm(pts, 0.5, 1) - 1.0).abs() < 1e-12);
        assert_eq!(wake_norm(vec![([1.0, 2.0, 3.0], [0.0; 3])], 0.5, 1), 0.0);
        assert!((w.weight([1.0, 0.0, 0.0], 2) - w.weight([1.0, 0.0, 0.0], 1).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn compact_field_norm_matches_scan() {
        let lambda = 0.3;
        let f = |x: [f64; 3]| {
            let r = norm3(x);
            if r < 2.0 { [(2.0 - r) * x[1], 0.5 * (2.0 - r), 0.0] } else { [0.0; 3] }
        };
        let grid: Vec<[f64; 3]> = (0..21 * 21 * 21)
            .map(|i| [(i / 441) as f64 * 0.2 - 2.0, ((i / 21) % 21) as f64 * 0.2 - 2.0, (i % 21) as f64 * 0.2 - 2.0])
            .collect();
        let v = wake_norm(grid.iter().map(|&x| (x, f(x))), lambda, 1);
        let w = WakeWeight::new(lambda);
        let mut brute: f64 = 0.0;
        for &x in &grid {
            let m = norm3(f(x));
            if m > 0.0 {
                brute = brute.max(w.weight(x, 1) * m);
            }
        }
        assert_eq!(v, brute);
    }

    #[test]
    fn fits_power_laws() {
        let x = log_radii(10.0, 100.0, 12);
        let y: Vec<f64> = x.iter().map(|r| 3.0 * r.powf(-1.7)).collect();
        let (s, r2) = fit_loglog(&x, &y).unwrap();
        assert!((s + 1.7).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
        let fits = fit_rays(&|x| norm3(x).powi(-2), 0.0, 5.0, 50.0, 8).unwrap();
        assert_eq!(fits.len(), 16);
        assert!(fits.iter().all(|f| (f.exponent + 2.0).abs() < 1e-12));
        assert!(matches!(fit_rays(&|_| 1.0, 0.0, 5.0, 20.0, 8), Err(Error::FitWindow(_))));
        assert!(rays_csv(&fits).lines().count() == 17);
    }

    proptest! {
        #[test]
        fn s_is_nonnegative_and_bounded(x in -1e3f64..1e3, y in -1e3f64..1e3, z in -1e3f64..1e3) {
            let s = WakeWeight::s([x, y, z]);
            prop_assert!(s >= 0.0);
            prop_assert!(s <= 2.0 * norm3([x, y, z]) + 1e-9);
        }
    }
}
