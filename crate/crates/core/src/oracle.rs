//! Hermitian reference picture.
//!
//! Objects of the computational space are mapped through a Dyson map into the
//! textbook space, where the Hamiltonian is Hermitian and evolution is
//! ordinary unitary Schrodinger dynamics. Running both pictures from the same
//! physical input and comparing predictions certifies the non-Hermitian
//! machinery.

use crate::error::{Error, Result};
use crate::evolution::{
    expectation, propagate_bra, propagate_ket, propagate_observable, GeneratorFunction, TimeGrid,
    Trajectory,
};
use crate::linalg::{ensure_dim, inverse, DualStateVector, Operator, StateVector, C64, I};
use crate::metric::time_derivative;

/// `|psi>_T = Omega |psi>`.
pub fn lift_state(omega: &Operator, psi: &StateVector) -> Result<StateVector> {
    ensure_dim(omega.dim(), psi.dim())?;
    Ok(omega.apply(psi))
}

/// `a_T = Omega A Omega^-1`; Hermitian exactly when `A` is quasi-Hermitian
/// with respect to `Omega^dagger Omega`.
pub fn lift_operator(omega: &Operator, a: &Operator) -> Result<Operator> {
    ensure_dim(omega.dim(), a.dim())?;
    let inv = inverse(omega)?;
    Ok(&(omega * a) * &inv)
}

/// `A = Omega^-1 a_T Omega`.
pub fn lower_operator(omega: &Operator, a_t: &Operator) -> Result<Operator> {
    ensure_dim(omega.dim(), a_t.dim())?;
    let inv = inverse(omega)?;
    Ok(&(&inv * a_t) * omega)
}

/// A textbook-space state with its Hermitian Hamiltonian and observable.
#[derive(Clone, Debug)]
pub struct TextbookSnapshot {
    h_matrix: Operator,
    psi: StateVector,
    q_matrix: Operator,
}

impl TextbookSnapshot {
    const HERMITIAN_REL: f64 = 1e-10;

    pub fn new(h_matrix: Operator, psi: StateVector, q_matrix: Operator) -> Result<Self> {
        ensure_dim(h_matrix.dim(), psi.dim())?;
        ensure_dim(h_matrix.dim(), q_matrix.dim())?;
        for m in [&h_matrix, &q_matrix] {
            let residual = m.hermiticity_residual();
            let tolerance = Self::HERMITIAN_REL * m.norm();
            if residual > tolerance {
                return Err(Error::NonHermitianInput {
                    residual,
                    tolerance,
                });
            }
        }
        Ok(Self {
            h_matrix,
            psi,
            q_matrix,
        })
    }

    pub fn h_matrix(&self) -> &Operator {
        &self.h_matrix
    }

    pub fn psi(&self) -> &StateVector {
        &self.psi
    }

    pub fn q_matrix(&self) -> &Operator {
        &self.q_matrix
    }
}

/// `<psi_T|q|psi_T>`, real for Hermitian `q`.
pub fn textbook_expectation(snapshot: &TextbookSnapshot) -> f64 {
    let v = snapshot.psi.vector();
    v.dotc(&(snapshot.q_matrix.matrix() * v)).re
}

/// Outcome of [`cross_picture_check`].
#[derive(Clone, Debug)]
pub struct CrossCheck {
    /// Largest `|<psi_Theta|Q|psi> - <psi_T|q|psi_T>|` over the samples.
    pub max_deviation: f64,
    /// Per sample `(computational prediction, textbook prediction)`; residual
    /// columns `deviation`, `textbook_norm_drift` and `overlap_drift`.
    pub predictions: Trajectory<(C64, f64)>,
}

/// Default step of the finite-difference stencil for `dOmega/dt` when the
/// Dyson map has no analytic derivative.
pub const DEFAULT_PROBE_STEP: f64 = 1e-3;

/// Builds `G(t) = Omega^-1 h Omega - i Omega^-1 dOmega/dt`.
pub fn generator_from_textbook(
    omega_fn: &GeneratorFunction,
    h_fn: &GeneratorFunction,
    dt_probe: f64,
) -> GeneratorFunction {
    let (omega_fn, h_fn) = (omega_fn.clone(), h_fn.clone());
    let dim = omega_fn.dim();
    GeneratorFunction::new(dim, move |t| {
        let built = (|| -> Result<Operator> {
            let omega = omega_fn.eval(t)?;
            let inv = inverse(&omega)?;
            let omega_dot = time_derivative(&omega_fn, t, dt_probe)?;
            let h = &(&inv * &h_fn.eval(t)?) * &omega;
            Ok(&h - &(&inv * &omega_dot).scale(I))
        })();
        built.unwrap_or_else(|_| nan_operator(dim))
    })
}

/// Builds `Sigma(t) = i Omega^-1 dOmega/dt`.
pub fn coriolis_generator(omega_fn: &GeneratorFunction, dt_probe: f64) -> GeneratorFunction {
    let omega_fn = omega_fn.clone();
    let dim = omega_fn.dim();
    GeneratorFunction::new(dim, move |t| {
        crate::metric::coriolis_from_dyson(&omega_fn, t, dt_probe)
            .unwrap_or_else(|_| nan_operator(dim))
    })
}

fn nan_operator(dim: usize) -> Operator {
    Operator::from_matrix_unchecked(nalgebra::DMatrix::from_element(
        dim,
        dim,
        C64::new(f64::NAN, f64::NAN),
    ))
}

/// Runs the same physics in both pictures and reports the largest disagreement
/// between predictions.
///
/// `psi0` is the textbook initial state and `q_t` the Hermitian textbook
/// observable; the computational-space initial data are `Omega(0)^-1 psi0`,
/// its bra partner `Omega(0)^dagger psi0`, and `Q(0) = Omega(0)^-1 q_t Omega(0)`.
pub fn cross_picture_check(
    omega_fn: &GeneratorFunction,
    h_fn: &GeneratorFunction,
    psi0: &StateVector,
    q_t: &Operator,
    grid: &TimeGrid,
    dt_probe: f64,
) -> Result<CrossCheck> {
    let dim = omega_fn.dim();
    ensure_dim(dim, h_fn.dim())?;
    ensure_dim(dim, psi0.dim())?;
    ensure_dim(dim, q_t.dim())?;
    for k in grid.sample_steps() {
        inverse(&omega_fn.eval(grid.time(k))?)?;
    }

    let omega0 = omega_fn.eval(grid.t_start())?;
    let ket0 = inverse(&omega0)?.apply(psi0);
    let bra0 = DualStateVector(omega0.adjoint().matrix() * psi0.vector());
    let q0 = lower_operator(&omega0, q_t)?;

    let g_fn = generator_from_textbook(omega_fn, h_fn, dt_probe);
    let sigma_fn = coriolis_generator(omega_fn, dt_probe);

    let kets = propagate_ket(&g_fn, &ket0, grid)?;
    let bras = propagate_bra(&g_fn, &bra0, grid)?;
    let qs = propagate_observable(&sigma_fn, &q0, None, grid)?;
    let textbook = propagate_ket(h_fn, psi0, grid)?;

    let norm0 = psi0.norm();
    let overlap0 = bra0.overlap(&ket0);
    let mut predictions = Trajectory::new(*grid);
    let mut max_deviation = 0.0_f64;
    for i in 0..kets.len() {
        let nip = expectation(&bras.samples[i], &qs.samples[i], &kets.samples[i])?;
        let psi_t = &textbook.samples[i];
        let reference = psi_t.vector().dotc(&(q_t.matrix() * psi_t.vector())).re;
        let deviation = (nip - C64::new(reference, 0.0)).norm();
        max_deviation = if deviation.is_nan() {
            f64::NAN
        } else {
            max_deviation.max(deviation)
        };
        let log = &mut predictions.residuals;
        log.record("deviation", deviation);
        log.record("textbook_norm_drift", (psi_t.norm() - norm0).abs());
        log.record(
            "overlap_drift",
            (bras.samples[i].overlap(&kets.samples[i]) - overlap0).norm(),
        );
        predictions.push(kets.steps[i], kets.times[i], (nip, reference));
    }
    Ok(CrossCheck {
        max_deviation,
        predictions,
    })
}
