//! Standalone SVG figures built from stored reports. Output depends only on
//! the report data, so identical reports give identical files.

use super::manifest::Experiment;
use crate::error::{Error, Result};
use crate::nonlinear::IterateRecord;
use crate::oseen::pipeline::WakeMap;
use crate::oseen::wake::{RayFamily, RayFit, WakeWeight};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const RAYS_JSON: &str = "rays.json";
pub const WAKE_MAP_JSON: &str = "wake_map.json";
pub const CONVERGENCE_JSON: &str = "convergence.json";

const W: f64 = 720.0;
const H: f64 = 540.0;

/// Plot rectangle with data ranges; log axes map `log10` of the value.
struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    x: (f64, f64),
    y: (f64, f64),
    log_x: bool,
    log_y: bool,
}

impl Frame {
    fn tx(&self, v: f64) -> f64 {
        let v = if self.log_x { v.log10() } else { v };
        self.x0 + (v - self.x.0) / (self.x.1 - self.x.0) * self.w
    }

    fn ty(&self, v: f64) -> f64 {
        let v = if self.log_y { v.log10() } else { v };
        self.y0 + self.h - (v - self.y.0) / (self.y.1 - self.y.0) * self.h
    }

    fn axes(&self, s: &mut String, xlabel: &str, ylabel: &str) {
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            self.x0, self.y0, self.w, self.h
        );
        for (lo, hi, log, horizontal) in [(self.x.0, self.x.1, self.log_x, true), (self.y.0, self.y.1, self.log_y, false)] {
            for t in ticks(lo, hi, log) {
                let label = if log { format!("1e{}", t.round() as i64) } else { format!("{t:.3}") };
                let v = if log { 10f64.powf(t) } else { t };
                if horizontal {
                    let x = self.tx(v);
                    let yb = self.y0 + self.h;
                    let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{yb:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, yb + 5.0);
                    let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{label}</text>"#, yb + 18.0);
                } else {
                    let y = self.ty(v);
                    let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/>"#, self.x0 - 5.0, self.x0);
                    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{label}</text>"#, self.x0 - 8.0, y + 4.0);
                }
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{xlabel}</text>"#,
            self.x0 + self.w / 2.0,
            self.y0 + self.h + 38.0
        );
        let (lx, ly) = (self.x0 - 48.0, self.y0 + self.h / 2.0);
        let _ = writeln!(
            s,
            r#"<text x="{lx:.2}" y="{ly:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 {lx:.2} {ly:.2})">{ylabel}</text>"#
        );
    }
}

/// Tick positions in axis units: whole decades on log axes, five even
/// steps otherwise.
fn ticks(lo: f64, hi: f64, log: bool) -> Vec<f64> {
    if log {
        let (a, b) = (lo.ceil() as i64, hi.floor() as i64);
        let step = ((b - a) / 8 + 1).max(1);
        (a..=b).step_by(step as usize).map(|d| d as f64).collect()
    } else {
        (0..=4).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect()
    }
}

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="22" font-size="15" text-anchor="middle">{title}</text>"#, W / 2.0);
    s
}

/// Piecewise-linear blue-green-yellow colour ramp on `[0, 1]`.
fn ramp(t: f64) -> String {
    const STOPS: [[f64; 3]; 5] = [[68.0, 1.0, 84.0], [59.0, 82.0, 139.0], [33.0, 145.0, 140.0], [94.0, 201.0, 98.0], [253.0, 231.0, 37.0]];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - i as f64;
    let c: Vec<u8> = (0..3).map(|d| (STOPS[i][d] * (1.0 - f) + STOPS[i + 1][d] * f).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn min_max(v: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    v.filter(|x| x.is_finite()).fold(None, |acc, x| match acc {
        None => Some((x, x)),
        Some((a, b)) => Some((a.min(x), b.max(x))),
    })
}

fn padded((a, b): (f64, f64)) -> (f64, f64) {
    if b > a {
        (a, b)
    } else {
        (a - 0.5, b + 0.5)
    }
}

/// Heat map of `log10((1+|x|)(1+2 lambda s)|u|)` on the `x3 = 0` plane.
pub fn wake_map_svg(map: &WakeMap) -> Result<String> {
    let n = map.n;
    if n < 2 || map.log10_speed.len() != n * n || !(map.extent > 0.0) {
        return Err(Error::Precondition(format!("wake map has n = {n} and {} values", map.log10_speed.len())));
    }
    let weight = WakeWeight::new(map.lambda);
    let coord = |k: usize| -map.extent + 2.0 * map.extent * k as f64 / (n - 1) as f64;
    let z: Vec<f64> = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            map.log10_speed[idx] + weight.weight([coord(j), coord(i), 0.0], 1).log10()
        })
        .collect();
    let (lo, hi) = padded(min_max(z.iter().copied()).ok_or_else(|| Error::Precondition("wake map has no finite values".into()))?);
    let half = map.extent * n as f64 / (n - 1) as f64;
    let fr = Frame { x0: 80.0, y0: 40.0, w: 440.0, h: 440.0, x: (-half, half), y: (-half, half), log_x: false, log_y: false };
    let mut s = header(&format!("log10 of weighted |u| on x3 = 0, lambda = {:.3}", map.lambda));
    let cell = fr.w / n as f64;
    for i in 0..n {
        for j in 0..n {
            let v = z[i * n + j];
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                fr.x0 + j as f64 * cell,
                fr.y0 + (n - 1 - i) as f64 * cell,
                cell + 0.05,
                cell + 0.05,
                ramp((v - lo) / (hi - lo))
            );
        }
    }
    fr.axes(&mut s, "x1", "x2");
    let (bx, by, bh) = (fr.x0 + fr.w + 40.0, fr.y0, fr.h);
    for k in 0..64 {
        let t = k as f64 / 63.0;
        let _ = writeln!(
            s,
            r#"<rect x="{bx:.2}" y="{:.2}" width="20" height="{:.2}" fill="{}"/>"#,
            by + bh * (1.0 - t) - bh / 64.0,
            bh / 64.0 + 0.05,
            ramp(t)
        );
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="11">{hi:.3}</text>"#, bx + 26.0, by + 10.0);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="11">{lo:.3}</text>"#, bx + 26.0, by + bh);
    s.push_str("</svg>\n");
    Ok(s)
}

fn family_colour(f: RayFamily) -> &'static str {
    match f {
        RayFamily::Upstream => "#1f77b4",
        RayFamily::Wake => "#d62728",
        RayFamily::Transverse => "#2ca02c",
        RayFamily::Oblique => "#7f7f7f",
    }
}

/// Intercept of the least-squares line through `(ln r, ln |u|)` with the
/// stored slope.
fn intercept(f: &RayFit) -> Option<f64> {
    let pts: Vec<(f64, f64)> = f.samples.iter().filter(|p| p[0] > 0.0 && p[1] > 0.0).map(|p| (p[0].ln(), p[1].ln())).collect();
    if pts.is_empty() {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    Some(my - f.exponent * mx)
}

/// Log-log samples and fitted lines of every ray, slopes in the legend.
pub fn ray_fits_svg(fits: &[RayFit]) -> Result<String> {
    if fits.is_empty() {
        return Err(Error::Precondition("no ray fits to plot".into()));
    }
    let pos = || fits.iter().flat_map(|f| f.samples.iter()).filter(|p| p[0] > 0.0 && p[1] > 0.0);
    let rx = min_max(pos().map(|p| p[0].log10())).ok_or_else(|| Error::Precondition("rays carry no positive samples".into()))?;
    let ry = min_max(pos().map(|p| p[1].log10())).expect("same samples");
    let fr = Frame { x0: 80.0, y0: 40.0, w: 400.0, h: 440.0, x: padded(rx), y: padded(ry), log_x: true, log_y: true };
    let mut s = header("decay of sup_t |u| along rays");
    fr.axes(&mut s, "|x|", "sup_t |u|");
    for f in fits {
        let c = family_colour(f.family);
        for p in f.samples.iter().filter(|p| p[0] > 0.0 && p[1] > 0.0) {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{c}"/>"#, fr.tx(p[0]), fr.ty(p[1]));
        }
        if let Some(b) = intercept(f) {
            let y = |r: f64| (b + f.exponent * r.ln()).exp();
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{c}" stroke-width="1"/>"#,
                fr.tx(f.r_min),
                fr.ty(y(f.r_min)),
                fr.tx(f.r_max),
                fr.ty(y(f.r_max))
            );
        }
    }
    let lx = fr.x0 + fr.w + 20.0;
    for (i, f) in fits.iter().enumerate() {
        let y = fr.y0 + 12.0 + 14.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{lx:.2}" y="{y:.2}" font-size="11" fill="{}">ray {} {:?}: slope {:.3}</text>"#,
            family_colour(f.family),
            f.id,
            f.family,
            f.exponent
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Successive differences and iterate norms against the iteration count.
pub fn convergence_svg(history: &[IterateRecord]) -> Result<String> {
    if history.is_empty() {
        return Err(Error::Precondition("empty iteration history".into()));
    }
    let vals = || history.iter().flat_map(|h| [h.diff, h.proxy]).filter(|v| *v > 0.0).map(f64::log10);
    let ry = padded(min_max(vals()).unwrap_or((-1.0, 1.0)));
    let last = history.last().map(|h| h.iteration).unwrap_or(1) as f64;
    let fr = Frame { x0: 90.0, y0: 40.0, w: 520.0, h: 420.0, x: padded((1.0, last.max(1.0))), y: ry, log_x: false, log_y: true };
    let mut s = header("fixed-point iteration");
    fr.axes(&mut s, "iteration", "norm");
    for (get, colour) in [(&(|h: &IterateRecord| h.diff) as &dyn Fn(&IterateRecord) -> f64, "#d62728"), (&|h: &IterateRecord| h.proxy, "#1f77b4")] {
        let pts: Vec<String> = history
            .iter()
            .filter(|h| get(h) > 0.0)
            .map(|h| format!("{:.2},{:.2}", fr.tx(h.iteration as f64), fr.ty(get(h))))
            .collect();
        if !pts.is_empty() {
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{colour}"/>"#, pts.join(" "));
        }
    }
    let lx = fr.x0 + fr.w - 160.0;
    let _ = writeln!(s, r##"<text x="{lx:.2}" y="{:.2}" font-size="12" fill="#d62728">|u_n - u_(n-1)|</text>"##, fr.y0 + 18.0);
    let _ = writeln!(s, r##"<text x="{lx:.2}" y="{:.2}" font-size="12" fill="#1f77b4">|u_n|</text>"##, fr.y0 + 34.0);
    s.push_str("</svg>\n");
    Ok(s)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::MissingReport(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&s).map_err(|e| Error::Decode(format!("{}: {e}", path.display())))
}

/// Writes the figures of `exp` from the reports stored in `dir`.
pub fn emit_plots(exp: Experiment, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut write = |name: &str, svg: String| -> Result<()> {
        let p = dir.join(name);
        std::fs::write(&p, svg)?;
        out.push(p);
        Ok(())
    };
    match exp {
        Experiment::Oseen => {
            let fits: Vec<RayFit> = read_json(&dir.join(RAYS_JSON))?;
            let map: WakeMap = read_json(&dir.join(WAKE_MAP_JSON))?;
            write("ray_fits.svg", ray_fits_svg(&fits)?)?;
            write("wake_map.svg", wake_map_svg(&map)?)?;
        }
        Experiment::Nonlinear | Experiment::Uniqueness => {
            let h: Vec<IterateRecord> = read_json(&dir.join(CONVERGENCE_JSON))?;
            write("convergence.svg", convergence_svg(&h)?)?;
        }
        Experiment::Basis | Experiment::Linear | Experiment::Invade => {}
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(id: usize, family: RayFamily, slope: f64) -> RayFit {
        let samples: Vec<[f64; 2]> = (0..8).map(|i| 2f64.powi(i)).map(|r| [r, 3.0 * r.powf(slope)]).collect();
        RayFit { id, direction: [1.0, 0.0, 0.0], family, r_min: 1.0, r_max: 128.0, exponent: slope, r2: 1.0, weighted: 1.0, samples }
    }

    #[test]
    fn ray_figure_annotates_slopes_and_is_deterministic() {
        let fits = vec![fit(0, RayFamily::Upstream, -2.0), fit(1, RayFamily::Wake, -1.0)];
        let a = ray_fits_svg(&fits).unwrap();
        assert!(a.contains("slope -2.000") && a.contains("slope -1.000"));
        assert_eq!(a, ray_fits_svg(&fits).unwrap());
        assert!((intercept(&fits[0]).unwrap() - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn empty_inputs_are_errors() {
        assert!(ray_fits_svg(&[]).is_err());
        assert!(convergence_svg(&[]).is_err());
        assert!(wake_map_svg(&WakeMap { lambda: 0.5, extent: 1.0, n: 0, log10_speed: vec![] }).is_err());
    }

    #[test]
    fn wake_map_and_convergence_render() {
        let n = 5;
        let map = WakeMap { lambda: 0.5, extent: 4.0, n, log10_speed: (0..n * n).map(|i| -(i as f64) / 10.0).collect() };
        let s = wake_map_svg(&map).unwrap();
        assert_eq!(s.matches("<rect").count(), 2 + n * n + 64);
        let h = vec![
            IterateRecord { iteration: 1, proxy: 1.0, diff: 1.0, ratio: None },
            IterateRecord { iteration: 2, proxy: 1.1, diff: 0.1, ratio: Some(0.1) },
        ];
        assert!(convergence_svg(&h).unwrap().contains("polyline"));
    }

    #[test]
    fn missing_report_is_a_file_error() {
        let dir = std::env::temp_dir().join(format!("tpns-plots-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        assert!(matches!(emit_plots(Experiment::Oseen, &dir), Err(Error::MissingReport(_))));
        assert!(emit_plots(Experiment::Linear, &dir).unwrap().is_empty());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn ramp_endpoints() {
        assert_eq!(ramp(0.0), "#440154");
        assert_eq!(ramp(1.0), "#fde725");
        assert_eq!(ramp(f64::NAN), "#440154");
    }
}
