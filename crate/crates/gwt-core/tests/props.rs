//! Property tests for the unitary sub-steps and the transform layer.

use std::f64::consts::PI;

use gwt_core::grid::{discrete_l2_norm, make_grid, transform_forward, transform_inverse, GridField};
use gwt_core::packet::{integrate_packet, PacketState};
use gwt_core::potentials::{AqConvention, CosineWell};
use gwt_core::wsolver::{
    kinetic_step, potential_step, GwtCoefficients, Quadrature, WState,
};
use gwt_core::Complex64;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn field_from(vals: &[(f64, f64)], n: usize) -> GridField {
    let grid = make_grid(&[(-2.0 * PI, 2.0 * PI)], &[n]).unwrap();
    GridField::new(
        grid,
        vals.iter().map(|&(r, i)| Complex64::new(r, i)).collect(),
    )
    .unwrap()
}

fn example1_traj(eps: f64) -> gwt_core::packet::PacketTrajectory {
    let s0 = PacketState {
        t: 0.0,
        q: DVector::from_vec(vec![PI / 4.0]),
        p: DVector::from_vec(vec![-0.5]),
        alpha: DMatrix::from_vec(1, 1, vec![Complex64::i()]),
        gamma2: Complex64::new(0.0, 0.0),
        b: DMatrix::from_vec(1, 1, vec![1.0]),
    };
    integrate_packet(s0, &CosineWell, eps, 1.0, 1e-3, Default::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn unitary_substeps_preserve_l2_norm(
        vals in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 64),
        dt in 1e-6..1.0f64,
        t0 in 0.0..0.49f64,
    ) {
        let eps = 1.0 / 256.0;
        let traj = example1_traj(eps);
        let coeffs = GwtCoefficients::new(&traj, &CosineWell, eps, AqConvention::Half);
        let w = WState { field: field_from(&vals, 64), t: t0, eps };
        let n0 = discrete_l2_norm(&w.field);
        prop_assume!(n0 > 1e-6);
        let dt = dt.min(1.0 - t0); // stay inside the trajectory range
        let k = kinetic_step(&w, &coeffs, dt, Quadrature::Trapezoid).unwrap();
        prop_assert!((discrete_l2_norm(&k.field) - n0).abs() <= 1e-13 * n0);
        let p = potential_step(&w, &coeffs, dt, Quadrature::Trapezoid).unwrap();
        prop_assert!((discrete_l2_norm(&p.field) - n0).abs() <= 1e-13 * n0);
    }

    #[test]
    fn transform_round_trip_is_identity(
        vals in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 32),
    ) {
        let f = field_from(&vals, 32);
        let back = transform_inverse(&transform_forward(&f));
        let scale = f.max_abs().max(1e-12);
        for (a, b) in back.values().iter().zip(f.values()) {
            prop_assert!((a - b).norm() <= 1e-13 * scale);
        }
    }
}
