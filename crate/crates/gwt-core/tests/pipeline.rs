//! End-to-end checks: transformed-equation runs reconstructed onto the
//! physical grid and compared against the direct SL-TS solver.

use std::f64::consts::PI;

use gwt_core::grid::{make_grid, GridField};
use gwt_core::packet::{integrate_packet, IntegrateOptions};
use gwt_core::potentials::{AqConvention, CosineWell, CrossedSine, Free};
use gwt_core::reconstruct::{
    init_from_gaussian, l2_error, position_expectation, reconstruct_psi, GaussianInitialData,
    OutOfCell,
};
use gwt_core::reference::{run_reference, PsiState};
use gwt_core::wsolver::{GwtCoefficients, Scheme, SchemeConfig, WSolver};
use gwt_core::Complex64;
use nalgebra::{DMatrix, DVector};

fn example1_data(eps: f64) -> GaussianInitialData {
    GaussianInitialData::normalized(
        DVector::from_vec(vec![PI / 4.0]),
        DVector::from_vec(vec![-0.5]),
        DMatrix::from_vec(1, 1, vec![Complex64::i()]),
        0.0,
        eps,
    )
    .unwrap()
}

#[test]
fn gwt_matches_slts_reference_in_1d() {
    let eps = 1.0 / 64.0;
    let t_final = 0.25;
    let model = CosineWell;
    let data = example1_data(eps);

    // reference on the paper meshing dx = 2 pi eps / 32, dt = eps / 32
    let n_ref = (32.0 / eps) as usize;
    let x_grid = make_grid(&[(-PI, PI)], &[n_ref]).unwrap();
    let psi0 = PsiState {
        field: GridField::from_fn(x_grid.clone(), |x| data.psi0(x, eps)),
        t: 0.0,
        eps,
    };
    let (psi_ref, _) = run_reference(&psi0, &model, t_final, eps / 32.0, &[]).unwrap();

    let eta_grid = make_grid(&[(-2.0 * PI, 2.0 * PI)], &[1024]).unwrap();
    let mut errs = Vec::new();
    for scheme in [Scheme::SlTs3, Scheme::SlTs2] {
        let mut scheme_errs = Vec::new();
        for dt in [1.0 / 8.0, 1.0 / 16.0] {
            let (state0, w0) = init_from_gaussian(&data, eps, &eta_grid).unwrap();
            let traj = integrate_packet(
                state0,
                &model,
                eps,
                t_final,
                dt / 40.0,
                IntegrateOptions {
                    tol_b: 1e-8,
                    validate: true,
                },
            )
            .unwrap();
            let coeffs = GwtCoefficients::new(&traj, &model, eps, AqConvention::Half);
            let mut solver = WSolver::new(w0, &coeffs, SchemeConfig::new(scheme, dt));
            solver.run_to(t_final).unwrap();
            let w = solver.into_state();
            let state = traj.sample(t_final).unwrap();
            let (psi_num, _) = reconstruct_psi(&w, &state, &x_grid, OutOfCell::Zero).unwrap();
            let e = l2_error(&psi_num.field, &psi_ref.field).unwrap();
            scheme_errs.push(e.absolute);
        }
        println!("{scheme:?}: errors {scheme_errs:?}");
        // second order: halving dt divides the error by ~4
        let order = (scheme_errs[0] / scheme_errs[1]).log2();
        assert!(
            (1.7..=2.3).contains(&order),
            "{scheme:?} observed order {order}"
        );
        // magnitude in the expected range for this setup
        assert!(scheme_errs[0] < 5e-3 && scheme_errs[0] > 1e-5);
        errs.push(scheme_errs[0]);
    }
    // the two schemes land close together
    assert!((errs[0] / errs[1] - 1.0).abs() < 0.8);
}

#[test]
fn gwt_matches_exact_free_evolution_in_2d() {
    // A = 0, V = 0: the reference kinetic multiplier is exact per mode, so
    // the SL-TS solution of band-limited data is exact; the transformed run
    // must agree up to its own O(dt^2) splitting error
    let eps = 1.0 / 16.0;
    let t_final = 0.5;
    let model = Free { dim: 2 };
    let c = DMatrix::from_diagonal(&DVector::from_vec(vec![Complex64::i(), Complex64::i()]));
    let data = GaussianInitialData::normalized(
        DVector::from_vec(vec![0.2, -0.1]),
        DVector::from_vec(vec![0.5, -0.3]),
        c,
        0.0,
        eps,
    )
    .unwrap();

    let x_grid = make_grid(&[(-PI, PI), (-PI, PI)], &[128, 128]).unwrap();
    let psi0 = PsiState {
        field: GridField::from_fn(x_grid.clone(), |x| data.psi0(x, eps)),
        t: 0.0,
        eps,
    };
    let (psi_ref, _) = run_reference(&psi0, &model, t_final, 1.0 / 64.0, &[]).unwrap();

    let eta_grid = make_grid(&[(-8.0, 8.0), (-8.0, 8.0)], &[64, 64]).unwrap();
    let err_at = |dt: f64| {
        let (state0, w0) = init_from_gaussian(&data, eps, &eta_grid).unwrap();
        let traj =
            integrate_packet(state0, &model, eps, t_final, dt / 40.0, Default::default()).unwrap();
        let coeffs = GwtCoefficients::new(&traj, &model, eps, AqConvention::Half);
        let mut solver = WSolver::new(w0, &coeffs, SchemeConfig::new(Scheme::SlTs3, dt));
        solver.run_to(t_final).unwrap();
        let w = solver.into_state();
        let state = traj.sample(t_final).unwrap();
        let (psi_num, _) = reconstruct_psi(&w, &state, &x_grid, OutOfCell::Zero).unwrap();
        l2_error(&psi_num.field, &psi_ref.field).unwrap().relative
    };
    let e1 = err_at(1.0 / 16.0);
    let e2 = err_at(1.0 / 32.0);
    println!("2d free errors: {e1:.3e} {e2:.3e}");
    assert!(e1 < 2e-3, "relative error {e1}");
    let order = (e1 / e2).log2();
    assert!((1.7..=2.3).contains(&order), "observed order {order}");
}

#[test]
fn position_expectation_approaches_classical_path_as_eps_shrinks() {
    // magnetic-only 2D model: scalar potential off, packet driven by A
    let model = CrossedSine { v_scale: 0.0 };
    let t_final = 0.5;
    let dt = 1.0 / 16.0;
    let eta_grid = make_grid(&[(-8.0, 8.0), (-8.0, 8.0)], &[64, 64]).unwrap();
    let gap = |eps: f64| {
        let c = DMatrix::from_diagonal(&DVector::from_vec(vec![Complex64::i(), Complex64::i()]));
        let data = GaussianInitialData::normalized(
            DVector::from_vec(vec![0.4, 0.3]),
            DVector::from_vec(vec![0.0, 0.0]),
            c,
            0.0,
            eps,
        )
        .unwrap();
        let (state0, w0) = init_from_gaussian(&data, eps, &eta_grid).unwrap();
        let traj =
            integrate_packet(state0, &model, eps, t_final, dt / 40.0, Default::default()).unwrap();
        let coeffs = GwtCoefficients::new(&traj, &model, eps, AqConvention::Half);
        let mut solver = WSolver::new(w0, &coeffs, SchemeConfig::new(Scheme::SlTs3, dt));
        let mut worst = 0.0_f64;
        let steps = (t_final / dt).round() as usize;
        for _ in 0..steps {
            solver.step().unwrap();
            let t = solver.state().t;
            let state = traj.sample(t).unwrap();
            let exp = position_expectation(solver.state(), &state).unwrap();
            // classical trajectory is the packet center itself
            let g = ((exp.normalized[0] - state.q[0]).powi(2)
                + (exp.normalized[1] - state.q[1]).powi(2))
            .sqrt();
            worst = worst.max(g);
        }
        worst
    };
    let g8 = gap(1.0 / 8.0);
    let g16 = gap(1.0 / 16.0);
    let g32 = gap(1.0 / 32.0);
    println!("expectation-vs-classical gaps: {g8:.3e} {g16:.3e} {g32:.3e}");
    assert!(g8 > g16 && g16 > g32, "gaps must shrink monotonically");
}
