use super::*;
use crate::forcing::{Forcing, GaussianForce, GaussianTensor, TimeSeries};
use crate::geometry::{build_truncated_domain, BodySpec};
use crate::motion::{FourierPath, RigidMotionSpec, E1};
use crate::stokes::extension::{build_extension_fixed, ExtensionField};
use crate::stokes::{assemble_projector, solve_stokes_eigs, EigenOptions, LerayProjector, StokesBasis};
use crate::time::TimeGrid;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

struct Fixture {
    projector: LerayProjector,
    basis: Arc<StokesBasis>,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let d = Arc::new(build_truncated_domain(BodySpec::sphere(1.0).unwrap(), 4.0, 0.5).unwrap());
        let projector = assemble_projector(d).unwrap();
        let basis = Arc::new(solve_stokes_eigs(&projector, 8, EigenOptions::default()).unwrap());
        Fixture { projector, basis }
    })
}

fn moving() -> RigidMotionSpec {
    RigidMotionSpec::new(
        FourierPath::trig(1.0, [0.1, 0.0, 0.0], &[([0.05, 0.02, 0.0], [0.0, 0.0, 0.03])]),
        FourierPath::trig(1.0, [0.0; 3], &[([0.1, 0.0, 0.0], [0.0, 0.04, 0.0])]),
        E1,
    )
    .unwrap()
}

fn forcing() -> Forcing {
    Forcing {
        terms: vec![GaussianTensor {
            center: [0.0, 2.0, 0.5],
            width: 0.8,
            matrix: [[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.5, 0.0, 0.2]],
            time: TimeSeries { period: 1.0, mean: 0.3, cos: vec![0.5], sin: vec![0.0, 0.2] },
        }],
        forces: vec![],
    }
}

fn extension(m: &RigidMotionSpec) -> Arc<ExtensionField> {
    let fx = fixture();
    let a = crate::stokes::extension::plateau_radius(&fx.basis.domain);
    Arc::new(build_extension_fixed(m, &fx.basis, &fx.projector, 1.9, a).unwrap())
}

fn system(m: &RigidMotionSpec, f: &Forcing, coupling: ExtensionCoupling, nt: usize) -> GalerkinSystem {
    let fx = fixture();
    let ops = Arc::new(GalerkinOperators::new(fx.basis.clone(), extension(m), coupling).unwrap());
    let tg = TimeGrid::new(1.0, nt).unwrap();
    let load = project_forcing(&fx.basis, f, &tg);
    GalerkinSystem::new(ops, tg, load).unwrap()
}

#[test]
fn zero_data_gives_zero_solution() {
    let sys = system(&RigidMotionSpec::at_rest(1.0), &Forcing::zero(), ExtensionCoupling::On, 8);
    let sol = solve_periodic(&sys).unwrap();
    assert!(sol.coeffs.iter().flatten().all(|v| *v == 0.0));
}

#[test]
fn diagonal_case_matches_closed_form() {
    let fx = fixture();
    let m = RigidMotionSpec::at_rest(1.0);
    let ops = Arc::new(GalerkinOperators::new(fx.basis.clone(), extension(&m), ExtensionCoupling::On).unwrap());
    let tg = TimeGrid::new(1.0, 8).unwrap();
    let w = 2.0 * PI;
    let k = fx.basis.k();
    let load: Vec<Vec<f64>> = tg.times().iter().map(|t| vec![(w * t).cos(); k]).collect();
    let sys = GalerkinSystem::new(ops, tg, load).unwrap();
    let sol = solve_periodic(&sys).unwrap();
    let mut err: f64 = 0.0;
    for (n, t) in tg.times().iter().enumerate() {
        for j in 0..k {
            // c' + l c = cos(w t)  =>  c = Re(e^{iwt} / (l + iw))
            let l = sys.lambda[j];
            let exact = (l * (w * t).cos() + w * (w * t).sin()) / (l * l + w * w);
            err = err.max((sol.coeffs[n][j] - exact).abs());
        }
    }
    assert!(err < 1e-8, "{err}");
}

#[test]
fn periodic_orbit_closes_and_decays() {
    let sys = system(&moving(), &forcing(), ExtensionCoupling::On, 16);
    let sol = solve_periodic(&sys).unwrap();
    assert!(sol.collocation_residual < 1e-12);
    let c = closure_residual(&sys, &sol);
    assert!(c < 1e-9, "closure {c}");
    let mono = monodromy(&sys);
    assert!(mono.spectral_radius < 1.0, "{}", mono.spectral_radius);
    let ops = &sys.ops;
    assert!(ops.rotation_antisymmetry < 1e-10, "{}", ops.rotation_antisymmetry);
}

#[test]
fn energy_identity_holds() {
    // d/dt |c|^2 / 2 = -c.Lambda c + c.B c + c.g integrates to zero over a period
    let sys = system(&moving(), &forcing(), ExtensionCoupling::On, 16);
    let sol = solve_periodic(&sys).unwrap();
    let tg = sys.tgrid;
    let mut diss = Vec::new();
    let mut work = Vec::new();
    for n in 0..tg.n {
        let c = &sol.coeffs[n];
        diss.push(c.iter().zip(&sys.lambda).map(|(a, l)| l * a * a).sum::<f64>());
        let b = sys.coupling_matrix(tg.time(n));
        let cv = nalgebra::DVector::from_column_slice(c);
        let bc = (cv.transpose() * &b * &cv)[(0, 0)];
        work.push(bc + crate::linalg::dot(c, &sys.load[n]));
    }
    let d = tg.integrate(&diss);
    let w = tg.integrate(&work);
    assert!(d > 0.0);
    assert!(((d - w) / d).abs() < 1e-6, "{d} vs {w}");
}

#[test]
fn time_refinement_converges() {
    let coarse = solve_periodic(&system(&moving(), &forcing(), ExtensionCoupling::On, 8)).unwrap();
    let fine = solve_periodic(&system(&moving(), &forcing(), ExtensionCoupling::On, 16)).unwrap();
    // every other fine sample coincides with a coarse sample
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for n in 0..8 {
        err = err.max(crate::linalg::norm(
            &coarse.coeffs[n].iter().zip(&fine.coeffs[2 * n]).map(|(a, b)| a - b).collect::<Vec<_>>(),
        ));
        scale = scale.max(crate::linalg::norm(&fine.coeffs[2 * n]));
    }
    assert!(err < 1e-3 * scale, "{err} / {scale}");
}

#[test]
fn reconstructed_field_is_solenoidal_with_exact_trace() {
    let sys = system(&moving(), &forcing(), ExtensionCoupling::On, 8);
    let sol = solve_periodic(&sys).unwrap();
    let field = reconstruct_velocity(&sys, &sol);
    assert!(field.trace_error() < 1e-12);
    assert!(field.div_residual() < 1e-9, "{}", field.div_residual());
}

#[test]
fn pressure_removes_the_gradient_part() {
    let f = forcing();
    let sys = system(&moving(), &f, ExtensionCoupling::On, 8);
    let sol = solve_periodic(&sys).unwrap();
    let mut field = reconstruct_velocity(&sys, &sol);
    let g = field.basis.domain.grid;
    let prof = f.profiles(&g);
    let tg = field.tgrid;
    let rep = field.recover_pressure(&fixture().projector, &|n| f.sample(&g, &prof, tg.time(n), 0)).unwrap();
    assert!(rep.after < 1e-6, "{rep:?}");
    assert!(rep.after < 1e-3 * rep.before, "{rep:?}");
    let p = field.pressure.as_ref().unwrap();
    for s in p {
        assert!(s.iter().sum::<f64>().abs() < 1e-9 * s.len() as f64);
    }
}

#[test]
fn estimate_ledger_is_finite() {
    let f = forcing();
    let m = moving();
    let sys = system(&m, &f, ExtensionCoupling::On, 8);
    let sol = solve_periodic(&sys).unwrap();
    let field = reconstruct_velocity(&sys, &sol);
    let data = f.norms(&field.basis.domain, &m, 64);
    let entries = estimates::replay_estimates(&field, &data);
    assert_eq!(entries.len(), 5);
    for e in &entries {
        assert!(e.lhs > 0.0 && e.rhs > 0.0 && e.constant.is_finite(), "{e:?}");
    }
}

#[test]
fn point_forces_enter_the_load() {
    let fx = fixture();
    let tg = TimeGrid::new(1.0, 4).unwrap();
    let f = Forcing {
        terms: vec![],
        forces: vec![GaussianForce {
            center: [0.0, 2.0, 0.0],
            width: 0.6,
            vector: [1.0, 0.0, 0.0],
            time: TimeSeries { period: 1.0, mean: 1.0, cos: vec![0.5], sin: vec![] },
        }],
    };
    let load = project_forcing(&fx.basis, &f, &tg);
    let g = fx.basis.domain.grid;
    let prof = f.profiles(&g);
    for n in 0..tg.n {
        let direct = system::project_full(&fx.basis, &f.sample(&g, &prof, tg.time(n), 0));
        let scale = crate::linalg::norm(&direct);
        assert!(scale > 0.0);
        let err: f64 = load[n].iter().zip(&direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12 * scale, "{err}");
    }
}
