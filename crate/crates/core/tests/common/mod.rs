//! Reference solutions independent of the library's RK4 integrator.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use nip_core::{GeneratorFunction, Operator, StateVector, C64};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const I: C64 = C64::new(0.0, 1.0);

/// `exp(A)` by Taylor summation with scaling and squaring.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let norm = a.norm();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / C64::new(2f64.powi(squarings as i32), 0.0);
    let mut term = DMatrix::<C64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..40 {
        term = &term * &scaled / C64::new(k as f64, 0.0);
        sum += &term;
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `exp(-i G t)`.
pub fn evolution_operator(g: &Operator, t: f64) -> DMatrix<C64> {
    expm(&(g.matrix() * C64::new(0.0, -t)))
}

/// Time-ordered propagator of `i dU/dt = G(t) U` from `t0` to `t1` by the
/// fourth-order Magnus expansion on `steps` Gauss-Legendre subintervals.
pub fn magnus_propagator(g: &GeneratorFunction, t0: f64, t1: f64, steps: usize) -> DMatrix<C64> {
    let n = g.dim();
    let h = (t1 - t0) / steps as f64;
    let c = 3f64.sqrt() / 6.0;
    let mut u = DMatrix::<C64>::identity(n, n);
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let a1 = g.eval(t + (0.5 - c) * h).unwrap().into_matrix() * C64::new(0.0, -1.0);
        let a2 = g.eval(t + (0.5 + c) * h).unwrap().into_matrix() * C64::new(0.0, -1.0);
        let omega = (&a1 + &a2) * C64::new(h / 2.0, 0.0)
            + (&a2 * &a1 - &a1 * &a2) * C64::new(3f64.sqrt() * h * h / 12.0, 0.0);
        u = expm(&omega) * u;
    }
    u
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut StdRng, n: usize) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

pub fn random_hermitian(rng: &mut StdRng, n: usize) -> Operator {
    let a = random_matrix(rng, n);
    Operator::from_matrix((&a + a.adjoint()) * C64::new(0.5, 0.0)).unwrap()
}

/// `A^dagger A + shift I`.
pub fn random_positive(rng: &mut StdRng, n: usize, shift: f64) -> Operator {
    let a = random_matrix(rng, n);
    let m = a.adjoint() * &a + DMatrix::identity(n, n) * C64::new(shift, 0.0);
    Operator::from_matrix(m).unwrap()
}

pub fn random_state(rng: &mut StdRng, n: usize) -> StateVector {
    StateVector::from_vector(DVector::from_fn(n, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }))
}

pub fn op(m: DMatrix<C64>) -> Operator {
    Operator::from_matrix(m).unwrap()
}

pub fn real(rows: &[&[f64]]) -> Operator {
    Operator::from_real_rows(rows).unwrap()
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn sigma_x() -> Operator {
    real(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn sigma_y() -> Operator {
    Operator::from_rows(&[
        vec![c(0.0, 0.0), c(0.0, -1.0)],
        vec![c(0.0, 1.0), c(0.0, 0.0)],
    ])
    .unwrap()
}

pub fn sigma_z() -> Operator {
    Operator::real_diagonal(&[1.0, -1.0])
}

/// The driven two-level generator of the bundled toy scenario.
pub fn toy_generator() -> GeneratorFunction {
    GeneratorFunction::new(2, |t| {
        Operator::from_rows(&[
            vec![c(1.0, 0.0), c(0.5 + 0.3 * (2.0 * t).sin(), 0.0)],
            vec![c(0.2, 0.0), c(-1.0, 0.0)],
        ])
        .unwrap()
    })
}

/// Relative Frobenius distance.
pub fn rel(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).norm() / b.norm()
}
