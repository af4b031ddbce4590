use tpns_core::invading::{glue, run_invading_sweep, window_difference, InvadingConfig, U_PROXY_BOUND};
use tpns_core::presets::Preset;
use tpns_core::Error;

fn config(radii: &[f64]) -> InvadingConfig {
    InvadingConfig {
        base: Preset::Smooth.linear_config(4.0, 0.5, 4, 8, 1.0),
        radii: radii.to_vec(),
        window: None,
        workers: 1,
    }
}

#[test]
fn bad_sweeps_are_refused_before_solving() {
    assert!(matches!(run_invading_sweep(&config(&[4.0, 5.0])), Err(Error::Precondition(_))));
    assert!(matches!(run_invading_sweep(&config(&[4.0, 6.0, 6.0])), Err(Error::Precondition(_))));
    assert!(matches!(run_invading_sweep(&config(&[1.5, 4.0, 6.0])), Err(Error::DomainTooSmall { .. })));
    let mut c = config(&[4.0, 5.0, 6.0]);
    c.window = Some(4.5);
    assert!(matches!(run_invading_sweep(&c), Err(Error::Precondition(_))));
}

#[test]
fn small_sweep_glues_and_compares() {
    let run = run_invading_sweep(&config(&[4.0, 5.0, 6.0])).unwrap();
    assert!(run.failure.is_none());
    assert_eq!(run.levels.len(), 3);
    assert_eq!(run.window, 4.0);
    assert_eq!(run.window_differences.len(), 2);
    assert!(run.window_differences.iter().all(|d| d.is_finite() && *d >= 0.0));

    for lvl in &run.levels {
        let g = &lvl.glue;
        assert_eq!(g.interior_mismatch, 0.0);
        assert!(g.defect.is_finite() && g.annulus_l2 > 0.0);
        // the cut-off only acts in R/2 < |x| < R, so the defect is set by
        // the annulus norm times its gradient
        assert!(g.defect_ratio <= 2.0 * g.chi_gradient_constant + 1.0, "{g:?}");
        let f = &lvl.run.field;
        assert_eq!(window_difference(f, f, run.window), 0.0);
        let chi_u = glue(f, 0);
        let u = f.u_full(0);
        assert!(chi_u.iter().zip(&u).all(|(a, b)| a.abs() <= b.abs() + 1e-15));
    }

    let r: Vec<f64> = run.ledger.iter().filter(|e| e.name == U_PROXY_BOUND).map(|e| e.r).collect();
    assert_eq!(r, vec![4.0, 5.0, 6.0]);
    assert!(run.ledger.iter().all(|e| e.constant.is_finite()));

    let csv = run.convergence_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("m,r,window_difference,") && lines[0].contains(U_PROXY_BOUND));
    // the last level has nothing to compare with
    assert!(lines[3].starts_with("2,6,,"), "{}", lines[3]);
}
