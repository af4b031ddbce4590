//! Acceptance suite: one test per criterion, each printing a single
//! `criterion N ...: PASS|FAIL` line before asserting.
//!
//! The whole suite takes several minutes on one core, so every test is
//! ignored by default. Run it with
//! `cargo test --release --test acceptance -- --include-ignored --test-threads=1 --nocapture`.

use nalgebra::{Matrix3, Rotation3, Vector3};
use std::f64::consts::PI;
use std::path::Path;
use std::sync::{Arc, OnceLock};
use tpns_core::diagnostics::run::LEDGER_FILE;
use tpns_core::diagnostics::{run_experiment, Experiment, RunManifest};
use tpns_core::forcing::{Forcing, GaussianTensor, TimeSeries};
use tpns_core::geometry::{build_truncated_domain, BodySpec};
use tpns_core::invading::{run_invading_sweep, InvadingConfig};
use tpns_core::linalg::dot;
use tpns_core::linear::estimates::{spread, ENERGY_BOUND, SUP_NORM_BOUND, TIME_DERIVATIVE_BOUND, UNIFORMITY_FACTOR, UT_L6_SUP};
use tpns_core::linear::{
    closure_residual, monodromy, project_forcing, solve_periodic, ExtensionCoupling, GalerkinOperators, GalerkinSystem,
};
use tpns_core::motion::{integrate_rotation, FourierPath, RigidMotionSpec, E1};
use tpns_core::nonlinear::uniqueness::LIMIT_FACTOR;
use tpns_core::nonlinear::{response_sweep, solve_nonlinear, uniqueness_probe, NonlinearConfig, NonlinearRun, UniquenessReport};
use tpns_core::oseen::consistency::{frame_consistency, reference_cases, FrameCheckConfig};
use tpns_core::oseen::pipeline::{UPSTREAM_BAND, WAKE_BAND, WEIGHTED_STABILITY};
use tpns_core::oseen::run_oseen;
use tpns_core::oseen::wake::RayFamily;
use tpns_core::presets::{oseen_config, Preset};
use tpns_core::stokes::bogovskii::Bogovskii;
use tpns_core::stokes::checks::{hardy_ratio, heywood_constant};
use tpns_core::stokes::extension::{build_extension_fixed, plateau_radius};
use tpns_core::stokes::{assemble_projector, solve_stokes_eigs, EigenOptions, LerayProjector, StokesBasis};
use tpns_core::time::TimeGrid;

fn verdict<S: AsRef<str>>(n: usize, name: &str, checks: &[(S, bool, String)]) {
    let pass = checks.iter().all(|c| c.1);
    println!("criterion {n:2} {name}: {}", if pass { "PASS" } else { "FAIL" });
    for (what, ok, detail) in checks {
        println!("    [{}] {}: {detail}", if *ok { "ok" } else { "!!" }, what.as_ref());
    }
    assert!(pass, "criterion {n} {name} failed");
}

fn sci(v: &[f64], digits: usize) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.digits$e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn sphere_domain(r: f64, h: f64) -> Arc<tpns_core::geometry::TruncatedDomain> {
    Arc::new(build_truncated_domain(BodySpec::sphere(1.0).unwrap(), r, h).unwrap())
}

fn max_entry(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    (a - b).abs().max()
}

#[test]
#[ignore = "acceptance suite"]
fn criterion_01_kinematics() {
    let t = 1.5;
    let general = RigidMotionSpec::new(
        FourierPath::trig(t, [0.4, 0.0, 0.0], &[([0.1, 0.2, 0.0], [0.0, 0.0, 0.1])]),
        FourierPath::trig(t, [0.3, -0.5, 0.8], &[([1.0, 0.4, -0.2], [0.0, 0.7, 0.3])]),
        E1,
    )
    .unwrap();
    let drift = integrate_rotation(&general, 64, 10).unwrap().orthogonality_defect;

    // omega parallel to e1 with a time-dependent magnitude
    let coaxial = RigidMotionSpec::new(
        FourierPath::constant(t, [0.3, 0.0, 0.0]),
        FourierPath::trig(t, [0.8, 0.0, 0.0], &[([0.5, 0.0, 0.0], [0.2, 0.0, 0.0])]),
        E1,
    )
    .unwrap();
    let p = integrate_rotation(&coaxial, 64, 10).unwrap();
    let e1 = Vector3::new(1.0, 0.0, 0.0);
    let axis_err = p.q.iter().map(|q| (q * e1 - e1).norm()).fold(0.0, f64::max);

    // omega = cos(2 pi t / T) e3, angle T / (2 pi) sin(2 pi t / T)
    let fixed = RigidMotionSpec::new(
        FourierPath::zero(t),
        FourierPath::trig(t, [0.0; 3], &[([0.0, 0.0, 1.0], [0.0; 3])]),
        E1,
    )
    .unwrap();
    let p = integrate_rotation(&fixed, 128, 10).unwrap();
    let closed = (0..p.len())
        .map(|i| {
            let s = p.time(i);
            let th = t / (2.0 * PI) * (2.0 * PI * s / t).sin();
            max_entry(&p.q[i], Rotation3::from_axis_angle(&Vector3::z_axis(), th).matrix())
        })
        .fold(0.0, f64::max);

    verdict(
        1,
        "kinematics",
        &[
            ("orthogonality drift over 10 periods < 1e-10", drift < 1e-10, format!("{drift:.3e}")),
            ("Q e1 = e1 for omega || e1, to 1e-12", axis_err < 1e-12, format!("{axis_err:.3e}")),
            ("fixed-axis closed form, entrywise 1e-8", closed < 1e-8, format!("{closed:.3e}")),
        ],
    );
}

#[test]
#[ignore = "acceptance suite"]
fn criterion_02_discrete_stokes() {
    let h = 0.5;
    let hardy_bound = 4.0 * (1.0 + 5.0 * h);
    let mut heywood = Vec::new();
    let mut hardy = Vec::new();
    let mut worst = 0.0f64;
    for r in [4.0, 8.0] {
        let p = assemble_projector(sphere_domain(r, h)).unwrap();
        let b = solve_stokes_eigs(&p, 16, EigenOptions::default()).unwrap();
        if r == 4.0 {
            // residuals are already relative to the eigenvalue
            worst = b.residuals.iter().copied().fold(0.0, f64::max);
        }
        heywood.push(heywood_constant(&b));
        hardy.push(hardy_ratio(&b));
    }
    let hey_ratio = heywood[0].max(heywood[1]) / heywood[0].min(heywood[1]);
    let hardy_max = hardy.iter().copied().fold(0.0, f64::max);
    verdict(
        2,
        "discrete Stokes",
        &[
            ("eigen residuals <= 1e-6 lambda_j, k = 16, R = 4", worst <= 1e-6, format!("{worst:.3e}")),
            ("Heywood constant within factor 2 over R = 4, 8", hey_ratio <= 2.0, format!("{heywood:.4?}, ratio {hey_ratio:.3}")),
            (
                "Hardy ratio <= 4(1 + 5h)",
                hardy_max <= hardy_bound,
                format!("{hardy:.4?} vs {hardy_bound}"),
            ),
        ],
    );
}

fn shell_data(p: &LerayProjector, r_in: f64, r_out: f64) -> Vec<f64> {
    let dom = p.domain();
    let bump = |x: [f64; 3]| {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let s = ((r - r_in) / (r_out - r_in)).clamp(0.0, 1.0);
        (PI * s).sin().powi(4)
    };
    let full = dom.grid.sample_faces(|x| {
        let b = bump(x);
        [b * (1.0 + x[1]), 0.5 * b * x[0], -0.2 * b * x[2] * x[0]]
    });
    p.divergence(&dom.gather(&full))
}

#[test]
#[ignore = "acceptance suite"]
fn criterion_03_bogovskii() {
    let mut div = Vec::new();
    let mut c0 = Vec::new();
    for h in [0.5, 0.25] {
        let shell = assemble_projector(Arc::new(sphere_domain(4.0, h).annulus_domain(2.0, 4.0).unwrap())).unwrap();
        let s = Bogovskii::new(&shell).solve(&shell_data(&shell, 2.0, 4.0)).unwrap();
        div.push(s.div_residual);
        c0.push(s.c0);
    }
    let worst = div.iter().copied().fold(0.0, f64::max);
    let change = (c0[1] / c0[0] - 1.0).abs();
    verdict(
        3,
        "Bogovskii",
        &[
            ("div residual < 1e-8", worst < 1e-8, sci(&div, 3)),
            ("C0 within 20% under h -> h/2", change < 0.2, format!("{c0:.4?}, change {:.1}%", 100.0 * change)),
        ],
    );
}

struct LinearFixture {
    projector: LerayProjector,
    basis: Arc<StokesBasis>,
}

fn linear_fixture() -> LinearFixture {
    let projector = assemble_projector(sphere_domain(4.0, 0.5)).unwrap();
    let basis = Arc::new(solve_stokes_eigs(&projector, 8, EigenOptions::default()).unwrap());
    LinearFixture { projector, basis }
}

fn linear_system(fx: &LinearFixture, m: &RigidMotionSpec, load: Option<&Forcing>, nt: usize) -> GalerkinSystem {
    let a = plateau_radius(&fx.basis.domain);
    let ext = Arc::new(build_extension_fixed(m, &fx.basis, &fx.projector, 1.9, a).unwrap());
    let ops = Arc::new(GalerkinOperators::new(fx.basis.clone(), ext, ExtensionCoupling::On).unwrap());
    let tg = TimeGrid::new(1.0, nt).unwrap();
    let k = fx.basis.k();
    let w = 2.0 * PI;
    let data = match load {
        Some(f) => project_forcing(&fx.basis, f, &tg),
        None => tg.times().iter().map(|t| vec![(w * t).cos(); k]).collect(),
    };
    GalerkinSystem::new(ops, tg, data).unwrap()
}

#[test]
#[ignore = "acceptance suite"]
fn criterion_04_linear_periodic() {
    let fx = linear_fixture();
    let moving = RigidMotionSpec::new(
        FourierPath::trig(1.0, [0.1, 0.0, 0.0], &[([0.05, 0.02, 0.0], [0.0, 0.0, 0.03])]),
        FourierPath::trig(1.0, [0.0; 3], &[([0.1, 0.0, 0.0], [0.0, 0.04, 0.0])]),
        E1,
    )
    .unwrap();
    let forcing = Forcing {
        terms: vec![GaussianTensor {
            center: [0.0, 2.0, 0.5],
            width: 0.8,
            matrix: [[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.5, 0.0, 0.2]],
            time: TimeSeries { period: 1.0, mean: 0.3, cos: vec![0.5], sin: vec![0.0, 0.2] },
        }],
        forces: vec![],
    };
    let sys = linear_system(&fx, &moving, Some(&forcing), 16);
    let sol = solve_periodic(&sys).unwrap();
    let closure = closure_residual(&sys, &sol);
    let radius = monodromy(&sys).spectral_radius;

    // d/dt |c|^2 / 2 = -c.Lambda c + c.B c + c.g has zero mean over a period
    let tg = sys.tgrid;
    let (mut diss, mut work) = (Vec::new(), Vec::new());
    for n in 0..tg.n {
        let c = &sol.coeffs[n];
        diss.push(c.iter().zip(&sys.lambda).map(|(a, l)| l * a * a).sum::<f64>());
        let cv = nalgebra::DVector::from_column_slice(c);
        let bc = (cv.transpose() * sys.coupling_matrix(tg.time(n)) * &cv)[(0, 0)];
        work.push(bc + dot(c, &sys.load[n]));
    }
    let (d, w) = (tg.integrate(&diss), tg.integrate(&work));
    let energy = ((d - w) / d).abs();

    // body at rest, load cos(w t) on every mode: c = (l cos + w sin) / (l^2 + w^2)
    let diag = linear_system(&fx, &RigidMotionSpec::at_rest(1.0), None, 8);
    let dsol = solve_periodic(&diag).unwrap();
    let om = 2.0 * PI;
    let mut closed = 0.0f64;
    for (n, t) in diag.tgrid.times().iter().enumerate() {
        for (j, l) in diag.lambda.iter().enumerate() {
            let exact = (l * (om * t).cos() + om * (om * t).sin()) / (l * l + om * om);
            closed = closed.max((dsol.coeffs[n][j] - exact).abs());
        }
    }
    verdict(
        4,
        "linear periodic solve",
        &[
            ("periodicity closure < 1e-9", closure < 1e-9, format!("{closure:.3e}")),
            ("energy identity over one period, relative 1e-6", energy < 1e-6, format!("{energy:.3e}")),
            ("diagonal closed form to 1e-8", closed < 1e-8, format!("{closed:.3e}")),
            ("monodromy spectral radius < 1", radius < 1.0, format!("{radius:.6}")),
        ],
    );
}

#[test]
#[ignore = "acceptance suite"]
fn criterion_05_uniform_estimates() {
    let cfg = InvadingConfig {
        base: Preset::Smooth.linear_config(4.0, 0.5, 16, 16, 1.0),
        radii: vec![4.0, 8.0, 16.0],
        window: None,
        workers: tpns_core::parallel::workers(),
    };
    let run = run_invading_sweep(&cfg).unwrap();
    let mut checks = vec![(
        "sweep completed on every radius".to_string(),
        run.failure.is_none() && run.levels.len() == 3,
        format!("{} levels, failure {:?}", run.levels.len(), run.failure),
    )];
    for name in [ENERGY_BOUND, TIME_DERIVATIVE_BOUND, SUP_NORM_BOUND] {
        let s = spread(&run.ledger, name);
        let c: Vec<f64> = run.ledger.iter().filter(|e| e.name == name).map(|e| e.constant).collect();
        checks.push((format!("{name} constants within factor {UNIFORMITY_FACTOR}"), s <= UNIFORMITY_FACTOR, format!("{}, spread {s:.3}", sci(&c, 4))));
    }
    let l6: Vec<f64> = run.ledger.iter().filter(|e| e.name == UT_L6_SUP).map(|e| e.lhs).collect();
    checks.push((
        "sup_t ||u_t||_6 finite and logged on every radius".to_string(),
        l6.len() == run.levels.len() && l6.iter().all(|v| v.is_finite()),
        sci(&l6, 4),
    ));
    verdict(5, "uniform estimates", &checks);
}

fn wake_checks(p: Preset) -> Vec<(&'static str, bool, String)> {
    let run = run_oseen(&oseen_config(p, 16, 16, 1.0)).unwrap();
    let rep = &run.report;
    let decade = rep.window.1 / rep.window.0;
    let mut checks = vec![(
        if rep.lambda > 0.0 { "lambda = 0.5: fit window spans a decade" } else { "lambda = 0: fit window spans a decade" },
        decade >= 10.0,
        format!("[{:.1}, {:.1}]", rep.window.0, rep.window.1),
    )];
    let inside = |e: f64, b: (f64, f64)| e >= b.0 && e <= b.1;
    let fam = |f: RayFamily| run.fits.iter().filter(move |r| r.family == f).map(|r| r.exponent).collect::<Vec<_>>();
    if rep.lambda > 0.0 {
        let wake = fam(RayFamily::Wake);
        let up = fam(RayFamily::Upstream);
        checks.push(("wake ray exponent -1 +- 0.3", !wake.is_empty() && wake.iter().all(|e| inside(*e, WAKE_BAND)), format!("{wake:.3?}")));
        checks.push(("upstream ray exponent -2 +- 0.4", !up.is_empty() && up.iter().all(|e| inside(*e, UPSTREAM_BAND)), format!("{up:.3?}")));
    } else {
        let all: Vec<f64> = run.fits.iter().map(|r| r.exponent).collect();
        checks.push(("all ray exponents -1 +- 0.3", !all.is_empty() && all.iter().all(|e| inside(*e, WAKE_BAND)), format!("{all:.3?}")));
    }
    checks.push((
        if rep.lambda > 0.0 { "lambda = 0.5: weighted norm within 10% under window shift" } else { "lambda = 0: weighted norm within 10% under window shift" },
        rep.weighted_shift <= WEIGHTED_STABILITY,
        format!("{:.4e} vs {:.4e}, shift {:.3}", rep.weighted_inner, rep.weighted_outer, rep.weighted_shift),
    ));
    checks
}

#[test]
#[ignore = "acceptance suite"]
fn criterion_06_oseen_wake() {
    let mut checks = wake_checks(Preset::Wake);
    checks.extend(wake_checks(Preset::Rotating));
    verdict(6, "Oseen wake", &checks);
}

#[test]
#[ignore = "acceptance suite"]
fn criterion_07_frame_consistency() {
    let cfg = FrameCheckConfig::default();
    let checks: Vec<(&str, bool, String)> = reference_cases()
        .into_iter()
        .map(|(name, motion, source)| {
            let r = frame_consistency(&motion, &source, &cfg).unwrap();
            (
                name,
                r.diff <= 5.0 * r.tolerance,
                format!("diff {:.3e}, interpolation tolerance {:.3e}, ratio {:.2}", r.diff, r.tolerance, r.ratio),
            )
        })
        .collect();
    verdict(7, "frame consistency", &checks);
}

struct Nonlinear {
    run: NonlinearRun,
    probe: UniquenessReport,
}

fn nonlinear() -> &'static Nonlinear {
    static N: OnceLock<Nonlinear> = OnceLock::new();
    N.get_or_init(|| {
        let run = solve_nonlinear(&NonlinearConfig::new(Preset::Still.linear_config(8.0, 0.5, 16, 16, 1.0))).unwrap();
        let probe = uniqueness_probe(&run, 7, 60).unwrap();
        Nonlinear { run, probe }
    })
}

#[test]
#[ignore = "acceptance suite"]
fn criterion_08_nonlinear_contraction() {
    let nl = nonlinear();
    let rep = &nl.run.report;
    let early: Vec<f64> = rep.history.iter().filter(|h| h.iteration <= 3).filter_map(|h| h.ratio).collect();
    // the leading-order regime: at larger amplitudes the next order shows
    let fit = response_sweep(&nl.run.solver, &[0.5, 1.0, 2.0], 1e-12, 80).unwrap();
    // N = alpha a + beta a^2 gives exponents 1 + c a, doubling with a
    let dev: Vec<f64> = fit.exponents.iter().map(|e| e - 1.0).collect();
    let growth = dev[1] / dev[0];
    verdict(
        8,
        "nonlinear contraction",
        &[
            ("Picard ratio < 0.5 within 3 iterations", early.iter().any(|r| *r < 0.5), sci(&early, 3)),
            ("momentum residual < 1e-5 relative", rep.momentum_residual < 1e-5, format!("{:.3e}", rep.momentum_residual)),
            (
                "two admissible starts reach the same limit within 10 tol",
                nl.probe.converged && nl.probe.limit_difference <= LIMIT_FACTOR * nl.probe.tol,
                format!("{:.3e} vs {:.3e}", nl.probe.limit_difference, LIMIT_FACTOR * nl.probe.tol),
            ),
            (
                "response exponent 1 + O(a)",
                dev.iter().all(|d| d.abs() < 0.1) && (1.5..=2.7).contains(&growth),
                format!("exponents {:.9?}, deviation growth {growth:.3}", fit.exponents),
            ),
            (
                "quadratic correction detectable above the fit misfit",
                dev[0].abs() > 1e-8 && fit.curvature.abs() > 10.0 * fit.misfit,
                format!("curvature {:.3e}, misfit {:.3e}", fit.curvature, fit.misfit),
            ),
        ],
    );
}

#[test]
#[ignore = "acceptance suite"]
fn criterion_09_uniqueness_probe() {
    let p = &nonlinear().probe;
    let i2: Vec<f64> = p.i2_quadrature.iter().map(|q| q.1).collect();
    let decreasing = i2.windows(2).all(|w| w[1] < w[0]);
    let terms: Vec<f64> = p.terms.iter().map(|t| t.max_abs()).collect();
    let decay = !terms.is_empty() && terms.windows(2).all(|w| w[1] <= w[0]) && terms.last() <= terms.first();
    verdict(
        9,
        "uniqueness probe",
        &[
            ("I2(R) strictly decreasing over R = 2, 4, 8", decreasing, format!("{:.5?}", p.i2_quadrature)),
            ("difference-field energy terms decrease to 0 with R", decay, sci(&terms, 3)),
        ],
    );
}

#[test]
#[ignore = "acceptance suite"]
fn criterion_10_determinism() {
    let m = RunManifest::from_toml_str(
        "seed = 3\n[geometry]\nr = 4\nh = 0.5\n[data]\npreset = \"still\"\n[solver]\nk = 8\nn_t = 8\n",
        Path::new("."),
    )
    .unwrap();
    let base = std::env::temp_dir().join(format!("tpns-acceptance-{}", std::process::id()));
    let mut checks = Vec::new();
    for exp in [Experiment::Linear, Experiment::Uniqueness] {
        let a = base.join(format!("{}-a", exp.name()));
        let b = base.join(format!("{}-b", exp.name()));
        run_experiment(&m, exp, &a, m.seed).unwrap();
        run_experiment(&m, exp, &b, m.seed).unwrap();
        let la = std::fs::read(a.join(LEDGER_FILE)).unwrap();
        let lb = std::fs::read(b.join(LEDGER_FILE)).unwrap();
        let label = if exp == Experiment::Linear { "linear ledgers identical" } else { "uniqueness ledgers identical" };
        checks.push((label, !la.is_empty() && la == lb, format!("{} bytes", la.len())));
    }
    let _ = std::fs::remove_dir_all(&base);
    verdict(10, "determinism", &checks);
}
