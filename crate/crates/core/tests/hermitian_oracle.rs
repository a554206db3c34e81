mod common;

use common::*;
use nip_core::evolution::propagate_ket;
use nip_core::linalg::{eigenvalues, inverse};
use nip_core::oracle::{
    coriolis_generator, cross_picture_check, generator_from_textbook, lift_operator, lift_state,
    lower_operator, textbook_expectation, TextbookSnapshot, DEFAULT_PROBE_STEP,
};
use nip_core::{Error, GeneratorFunction, Operator, StateVector, TimeGrid, C64};

fn sigma_x_map() -> GeneratorFunction {
    GeneratorFunction::new(2, |t| Operator::real_diagonal(&[1.0, (t / 4.0).exp()]))
}

fn sigma_x_map_exact() -> GeneratorFunction {
    sigma_x_map().with_derivative(|t| Operator::real_diagonal(&[0.0, (t / 4.0).exp() / 4.0]))
}

fn psi0() -> StateVector {
    StateVector::from_real(&[0.6, 0.8]).unwrap()
}

#[test]
fn cross_check_identity_map() {
    let grid = TimeGrid::new(0.0, 2.0, 1e-3, 10).unwrap();
    let id = GeneratorFunction::constant(Operator::identity(2));
    let h = GeneratorFunction::new(2, |t| &sigma_x() + &sigma_z().scale_real(0.3 * t.sin()));
    let out = cross_picture_check(&id, &h, &psi0(), &sigma_z(), &grid, DEFAULT_PROBE_STEP).unwrap();
    assert!(out.max_deviation < 1e-10, "{}", out.max_deviation);
}

#[test]
fn cross_check_growing_map() {
    let grid = TimeGrid::new(0.0, 2.0, 1e-3, 10).unwrap();
    let h = GeneratorFunction::constant(sigma_x());
    for omega in [sigma_x_map(), sigma_x_map_exact()] {
        let out = cross_picture_check(&omega, &h, &psi0(), &sigma_z(), &grid, DEFAULT_PROBE_STEP)
            .unwrap();
        assert!(out.max_deviation < 1e-7, "{}", out.max_deviation);
        assert!(out.predictions.residuals.max("overlap_drift").unwrap() < 1e-9);
    }
}

#[test]
fn cross_check_stationary_map() {
    let grid = TimeGrid::new(0.0, 2.0, 1e-3, 10).unwrap();
    let omega = GeneratorFunction::constant(real(&[&[1.0, 0.5], &[0.0, 2.0]]));
    let h = GeneratorFunction::constant(real(&[&[1.0, 0.3], &[0.3, -1.0]]));
    let out =
        cross_picture_check(&omega, &h, &psi0(), &sigma_x(), &grid, DEFAULT_PROBE_STEP).unwrap();
    assert!(out.max_deviation < 1e-8, "{}", out.max_deviation);
}

#[test]
fn cross_check_converges_at_fourth_order() {
    // a driven textbook Hamiltonian so the integrators make visible errors
    let h = GeneratorFunction::new(2, |t| {
        &sigma_x().scale_real(2.0) + &sigma_z().scale_real(1.5 * (3.0 * t).cos())
    });
    let deviation = |dt: f64| {
        let grid = TimeGrid::new(0.0, 2.0, dt, (0.1 / dt).round() as usize).unwrap();
        cross_picture_check(
            &sigma_x_map_exact(),
            &h,
            &psi0(),
            &sigma_z(),
            &grid,
            DEFAULT_PROBE_STEP,
        )
        .unwrap()
        .max_deviation
    };
    let (coarse, fine) = (deviation(0.04), deviation(0.02));
    let ratio = coarse / fine;
    assert!(
        (12.0..=20.0).contains(&ratio),
        "{coarse} / {fine} = {ratio}"
    );
}

#[test]
fn textbook_norm_is_conserved() {
    let h = GeneratorFunction::new(2, |t| &sigma_x() + &sigma_y().scale_real(t.cos()));
    let grid = TimeGrid::new(0.0, 5.0, 1e-3, 100).unwrap();
    let traj = propagate_ket(&h, &psi0(), &grid).unwrap();
    for s in &traj.samples {
        assert!((s.norm() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn lift_round_trip_and_spectra() {
    let mut r = rng(21);
    let omega = op(random_matrix(&mut r, 4) + nalgebra::DMatrix::identity(4, 4) * c(2.0, 0.0));
    let psi = random_state(&mut r, 4);
    let lifted = lift_state(&omega, &psi).unwrap();
    let back = inverse(&omega).unwrap().apply(&lifted);
    assert!((back.vector() - psi.vector()).norm() < 1e-11);

    let a = op(random_matrix(&mut r, 4));
    let mut before = eigenvalues(&a).unwrap();
    let mut after = eigenvalues(&lift_operator(&omega, &a).unwrap()).unwrap();
    let key = |z: &C64| (z.re, z.im);
    before.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
    after.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
    for (x, y) in before.iter().zip(&after) {
        assert!((x - y).norm() < 1e-9);
    }
    let h = random_hermitian(&mut r, 4);
    let round = lift_operator(&omega, &lower_operator(&omega, &h).unwrap()).unwrap();
    assert!(round.distance(&h) < 1e-11 * h.norm());
}

#[test]
fn snapshot_rejects_non_hermitian_input() {
    let bad = real(&[&[0.0, 1.0], &[0.0, 0.0]]);
    let err = TextbookSnapshot::new(bad, psi0(), sigma_z()).unwrap_err();
    assert!(matches!(err, Error::NonHermitianInput { .. }));
    let snap = TextbookSnapshot::new(sigma_x(), psi0(), Operator::identity(2)).unwrap();
    assert!((textbook_expectation(&snap) - 1.0).abs() < 1e-15);
}

#[test]
fn textbook_generator_splits_into_hamiltonian_and_coriolis() {
    let omega = sigma_x_map();
    let h = GeneratorFunction::constant(sigma_x());
    let g = generator_from_textbook(&omega, &h, DEFAULT_PROBE_STEP);
    let sigma = coriolis_generator(&omega, DEFAULT_PROBE_STEP);
    for t in [0.0, 0.7, 1.9] {
        let big_h = &g.eval(t).unwrap() + &sigma.eval(t).unwrap();
        let expected = lower_operator(&omega.eval(t).unwrap(), &sigma_x()).unwrap();
        assert!(big_h.distance(&expected) < 1e-12);
        // Sigma = i diag(0, 1/4)
        let s = sigma.eval(t).unwrap();
        assert!(s.distance(&Operator::diagonal(&[c(0.0, 0.0), c(0.0, 0.25)])) < 1e-11);
    }
}

#[test]
fn singular_map_is_rejected() {
    let grid = TimeGrid::new(0.0, 1.0, 1e-2, 10).unwrap();
    let omega = GeneratorFunction::new(2, |t| Operator::real_diagonal(&[1.0, 0.5 - t]));
    let h = GeneratorFunction::constant(sigma_x());
    let err = cross_picture_check(&omega, &h, &psi0(), &sigma_z(), &grid, DEFAULT_PROBE_STEP)
        .unwrap_err();
    assert!(matches!(err, Error::SingularMatrix { .. }), "{err}");
}
