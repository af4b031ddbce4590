use super::*;
use crate::forcing::Forcing;
use crate::linear::LinearConfig;
use crate::motion::{FourierPath, RigidMotionSpec, E1};
use crate::presets::Preset;

fn small(forcing_amp: f64) -> LinearConfig {
    NonlinearConfig::new(Preset::Still.linear_config(4.0, 0.5, 8, 8, forcing_amp)).linear
}

#[test]
fn zero_data_converges_at_once_to_zero() {
    let mut cfg = NonlinearConfig::new(small(1.0));
    cfg.linear.forcing = Forcing::zero();
    let run = solve_nonlinear(&cfg).unwrap();
    assert!(run.report.converged);
    assert_eq!(run.report.iterations, 1);
    assert!(run.picard.samples.is_zero());
    assert_eq!(run.report.delta, 0.0);
    let probe = uniqueness_probe(&run, 1, 5).unwrap();
    assert!(probe.trivial && probe.pass);
}

#[test]
fn transverse_translation_is_refused() {
    let mut cfg = small(1.0);
    cfg.motion = RigidMotionSpec::new(
        FourierPath::constant(1.0, [0.1, 0.0, 0.0]),
        FourierPath::trig(1.0, [0.0; 3], &[([0.0, 0.2, 0.0], [0.0; 3])]),
        E1,
    )
    .unwrap();
    assert!(matches!(NonlinearSolver::new(&cfg), Err(crate::Error::Hypothesis(_))));
}

#[test]
fn small_data_contracts_and_is_unique() {
    let cfg = NonlinearConfig::new(small(0.5));
    let run = solve_nonlinear(&cfg).unwrap();
    let r = &run.report;
    assert!(r.converged, "{:?}", r.history);
    assert_eq!(r.history.len() - 1, run.picard.ratios().len());
    assert!(r.first_ratio.unwrap() < 0.5, "{:?}", r.history);
    assert!(r.momentum_residual < 1e-5, "{}", r.momentum_residual);
    assert!(r.pressure_before > 1e3 * r.momentum_residual);

    // the map differs from its base point quadratically in the iterate
    let u1 = {
        let (f, _) = run.solver.contraction_step(&FieldSamples::zero(run.solver.n_faces(), 8)).unwrap();
        FieldSamples::of(&f)
    };
    let m = |s: f64| {
        let f = run.solver.map(&u1.scaled(s)).unwrap();
        run.solver.proxy(&FieldSamples::of(&f).sub(&u1)).total
    };
    let (a, b) = (m(0.5), m(1.0));
    assert!(((b / a).log2() - 2.0).abs() < 1e-6, "{a} {b}");

    // bilinear constant is scale free; the weighted part is a pointwise product
    let bl = run.solver.bilinear(&u1, &u1);
    let bl2 = run.solver.bilinear(&u1.scaled(2.0), &u1.scaled(2.0));
    assert!((bl2.constant / bl.constant - 1.0).abs() < 1e-10);
    assert!(bl.weighted_term <= bl.weighted_product * (1.0 + 1e-12));
    assert!((bl.weighted_term / bl.weighted_at_argmax - 1.0).abs() < 1e-12);
    let z = FieldSamples::zero(run.solver.n_faces(), 8);
    assert_eq!(run.solver.bilinear(&z, &u1).lhs, 0.0);

    let probe = uniqueness_probe(&run, 7, 60).unwrap();
    assert!(probe.same_limit && probe.converged, "{probe:?}");
    assert!((probe.start_proxy / (0.5 * r.delta) - 1.0).abs() < 1e-9);
    assert!(probe.quadrature_decreasing && probe.terms_decay, "{probe:?}");
}
