//! The Hilbert-space metric `Theta(t)` and its Dyson factors `Omega(t)`:
//! reconstruction from a propagated bra family, quasi-Hermiticity tests,
//! factorization, the Coriolis generator `Sigma = i Omega^-1 dOmega/dt`, and the
//! two operator-flow identities for `dTheta/dt`.

use nalgebra::DMatrix;

use crate::basis::BiorthogonalBasis;
use crate::error::{Error, Result};
use crate::evolution::rk4::integrate;
use crate::evolution::{GeneratorFunction, TimeGrid, Trajectory};
use crate::linalg::{
    ensure_dim, hermitian_eig_with, inverse_with, is_positive_definite, DualStateVector, Operator,
    Tolerances, C64, I,
};

/// `Theta = sum_n |b_n><b_n|` over a bra family.
pub fn metric_from_basis(bras: &[DualStateVector]) -> Result<Operator> {
    metric_from_basis_with(bras, &Tolerances::default())
}

pub fn metric_from_basis_with(bras: &[DualStateVector], tol: &Tolerances) -> Result<Operator> {
    let dim = bras.first().map(|b| b.dim()).ok_or(Error::RankDeficient {
        min_eigenvalue: 0.0,
    })?;
    for b in bras {
        ensure_dim(dim, b.dim())?;
    }
    let cols = crate::linalg::columns(bras.iter().map(|b| b.vector()));
    metric_from_bra_matrix(&cols, tol)
}

/// `Theta = B B^dagger`, with positivity verified.
pub(crate) fn metric_from_bra_matrix(bras: &DMatrix<C64>, tol: &Tolerances) -> Result<Operator> {
    let theta = Operator::from_matrix_unchecked(bras * bras.adjoint());
    let eig = hermitian_eig_with(&theta, tol)?;
    let min = eig.eigenvalues[0];
    if min <= tol.positive_rel * theta.norm() {
        return Err(Error::RankDeficient {
            min_eigenvalue: min,
        });
    }
    Ok(theta)
}

/// Relative residual `|A^dagger Theta - Theta A|_F / |Theta A|_F`; zero when
/// `A` is an observable in the `Theta`-amended inner product.
pub fn check_quasi_hermiticity(a: &Operator, theta: &Operator) -> Result<f64> {
    ensure_dim(theta.dim(), a.dim())?;
    let theta_a = theta * a;
    let num = (&(&a.adjoint() * theta) - &theta_a).norm();
    let den = theta_a.norm();
    Ok(if den == 0.0 { num } else { num / den })
}

/// `Theta = U^dagger theta^2 U`, `Omega = V^dagger theta U`.
#[derive(Clone, Debug)]
pub struct MetricDecomposition {
    pub theta_matrix: Operator,
    /// Diagonal, real, strictly positive, ascending.
    pub sqrt_diag: Operator,
    pub u_unitary: Operator,
    pub v_unitary: Operator,
    pub omega: Operator,
}

/// Which Dyson map to pick out of the unitary family `V^dagger theta U`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Gauge {
    /// `V = I`.
    IdentityV,
    /// `V = U`, giving `Omega = sqrt(Theta)`.
    SqrtTheta,
    /// `Omega = diag(e^{-i E_n (t - t_i)}) B^dagger`: the map that carries each
    /// basis ket onto a stationary textbook eigenvector. The only gauge in
    /// which `G + Sigma` reproduces the spectral Hamiltonian.
    #[default]
    BasisAligned,
}

pub fn dyson_factorize(theta: &Operator, v_unitary: &Operator) -> Result<MetricDecomposition> {
    dyson_factorize_with(theta, v_unitary, &Tolerances::default())
}

pub fn dyson_factorize_with(
    theta: &Operator,
    v_unitary: &Operator,
    tol: &Tolerances,
) -> Result<MetricDecomposition> {
    ensure_dim(theta.dim(), v_unitary.dim())?;
    let residual = (v_unitary.adjoint().matrix() * v_unitary.matrix()
        - DMatrix::identity(theta.dim(), theta.dim()))
    .norm();
    if residual > 1e-10 {
        return Err(Error::NotUnitary { residual });
    }
    let (sqrt_diag, u_unitary) = diagonalize_metric(theta, tol)?;
    let omega = &(&v_unitary.adjoint() * &sqrt_diag) * &u_unitary;
    Ok(MetricDecomposition {
        theta_matrix: theta.clone(),
        sqrt_diag,
        u_unitary,
        v_unitary: v_unitary.clone(),
        omega,
    })
}

/// Returns `(theta, U)` with `Theta = U^dagger theta^2 U`.
fn diagonalize_metric(theta: &Operator, tol: &Tolerances) -> Result<(Operator, Operator)> {
    let eig = hermitian_eig_with(theta, tol)?;
    let threshold = tol.positive_rel * theta.norm();
    if eig.eigenvalues[0] <= threshold {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: eig.eigenvalues[0],
            threshold,
        });
    }
    let roots: Vec<f64> = eig.eigenvalues.iter().map(|x| x.sqrt()).collect();
    Ok((Operator::real_diagonal(&roots), eig.basis.adjoint()))
}

/// Factorizes the metric of `basis` in the requested gauge. `tau` is the
/// elapsed time since the initial instant; only the basis-aligned gauge uses
/// it and the energies.
pub fn factorize_in_gauge(
    basis: &BiorthogonalBasis,
    energies: &[f64],
    tau: f64,
    gauge: Gauge,
    tol: &Tolerances,
) -> Result<MetricDecomposition> {
    let theta = metric_from_bra_matrix(basis.bras(), tol)?;
    let (sqrt_diag, u) = diagonalize_metric(&theta, tol)?;
    let v = match gauge {
        Gauge::IdentityV => Operator::identity(theta.dim()),
        Gauge::SqrtTheta => u.clone(),
        Gauge::BasisAligned => {
            ensure_dim(basis.len(), energies.len())?;
            // V^dagger = Omega_aligned U^dagger theta^-1
            let inv_sqrt: Vec<f64> = (0..theta.dim())
                .map(|k| 1.0 / sqrt_diag.get(k, k).re)
                .collect();
            let target = basis.aligned_dyson_map(energies, tau);
            (&(&target * &u.adjoint()) * &Operator::real_diagonal(&inv_sqrt)).adjoint()
        }
    };
    dyson_factorize_with(&theta, &v, tol)
}

/// `Sigma = i Omega^-1 dOmega/dt`.
pub fn coriolis(omega: &Operator, omega_dot: &Operator, tol: &Tolerances) -> Result<Operator> {
    ensure_dim(omega.dim(), omega_dot.dim())?;
    let inv = inverse_with(omega, tol)?;
    Ok((&inv * omega_dot).scale(I))
}

/// Coriolis generator of a Dyson map given as a function of time. Uses the
/// analytic derivative when the generator carries one, otherwise a
/// fourth-order central difference with step `dt_probe`.
pub fn coriolis_from_dyson(
    omega_fn: &GeneratorFunction,
    t: f64,
    dt_probe: f64,
) -> Result<Operator> {
    let omega = omega_fn.eval(t)?;
    let omega_dot = time_derivative(omega_fn, t, dt_probe)?;
    coriolis(&omega, &omega_dot, &Tolerances::default())
}

/// `dA/dt` at `t`: analytic when available, else the five-point stencil.
pub fn time_derivative(f: &GeneratorFunction, t: f64, h: f64) -> Result<Operator> {
    if let Some(d) = f.eval_derivative(t) {
        return Ok(d);
    }
    central_difference(f, t, h)
}

/// `(f(t-2h) - 8 f(t-h) + 8 f(t+h) - f(t+2h)) / 12h`.
pub fn central_difference(f: &GeneratorFunction, t: f64, h: f64) -> Result<Operator> {
    let m2 = f.eval(t - 2.0 * h)?.into_matrix();
    let m1 = f.eval(t - h)?.into_matrix();
    let p1 = f.eval(t + h)?.into_matrix();
    let p2 = f.eval(t + 2.0 * h)?.into_matrix();
    let d = (m2 - p2 + (p1 - m1) * C64::new(8.0, 0.0)) / C64::new(12.0 * h, 0.0);
    Ok(Operator::from_matrix_unchecked(d))
}

/// Fourth-order derivatives of uniformly spaced samples. Interior points use
/// the central stencil, the two points at each end one-sided five-point
/// stencils.
pub fn sampled_derivatives(samples: &[Operator], h: f64) -> Result<Vec<Operator>> {
    const REQUIRED: usize = 5;
    let n = samples.len();
    if n < REQUIRED {
        return Err(Error::InsufficientSamples {
            required: REQUIRED,
            found: n,
        });
    }
    let dim = samples[0].dim();
    let combo = |start: usize, w: [f64; 5], sign: f64| -> Operator {
        let mut acc = DMatrix::<C64>::zeros(dim, dim);
        for (j, wj) in w.iter().enumerate() {
            let idx = if sign > 0.0 { start + j } else { start - j };
            acc += samples[idx].matrix() * C64::new(sign * wj / (12.0 * h), 0.0);
        }
        Operator::from_matrix_unchecked(acc)
    };
    const FORWARD0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
    const FORWARD1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
    let mut out = Vec::with_capacity(n);
    out.push(combo(0, FORWARD0, 1.0));
    out.push(combo(0, FORWARD1, 1.0));
    for k in 2..n - 2 {
        out.push(combo(k - 2, [1.0, -8.0, 0.0, 8.0, -1.0], 1.0));
    }
    out.push(combo(n - 1, FORWARD1, -1.0));
    out.push(combo(n - 1, FORWARD0, -1.0));
    Ok(out)
}

/// A basis together with the energies of `H = sum_n |psi_n> E_n <psi_{n,Theta}|`.
#[derive(Clone, Debug)]
pub struct SpectralHamiltonian {
    pub basis: BiorthogonalBasis,
    pub energies: Vec<f64>,
}

impl SpectralHamiltonian {
    pub fn new(basis: BiorthogonalBasis, energies: Vec<f64>) -> Result<Self> {
        ensure_dim(basis.len(), energies.len())?;
        if !energies.iter().all(|e| e.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { basis, energies })
    }
}

pub fn hamiltonian_from_spectral(spec: &SpectralHamiltonian) -> Result<Operator> {
    ensure_dim(spec.basis.len(), spec.energies.len())?;
    Ok(spectral_operator(&spec.basis, &spec.energies))
}

pub(crate) fn spectral_operator(basis: &BiorthogonalBasis, energies: &[f64]) -> Operator {
    let k = basis.kets();
    let scaled = DMatrix::from_fn(k.nrows(), k.ncols(), |i, j| k[(i, j)] * energies[j]);
    Operator::from_matrix_unchecked(scaled * basis.bras().adjoint())
}

/// `|i dTheta/dt - (Theta Sigma - Sigma^dagger Theta)|_F / |Theta|_F`.
pub fn flow_residual_sigma(theta: &Operator, theta_dot: &Operator, sigma: &Operator) -> f64 {
    let lhs = theta_dot.scale(I);
    let rhs = &(theta * sigma) - &(&sigma.adjoint() * theta);
    lhs.distance(&rhs) / theta.norm()
}

/// `|i dTheta/dt - (G^dagger Theta - Theta G)|_F / |Theta|_F`.
pub fn flow_residual_g(theta: &Operator, theta_dot: &Operator, g: &Operator) -> f64 {
    let lhs = theta_dot.scale(I);
    let rhs = &(&g.adjoint() * theta) - &(theta * g);
    lhs.distance(&rhs) / theta.norm()
}

pub fn metric_flow_residual_sigma(
    theta_fn: &GeneratorFunction,
    sigma_fn: &GeneratorFunction,
    t: f64,
    dt_probe: f64,
) -> Result<f64> {
    ensure_dim(theta_fn.dim(), sigma_fn.dim())?;
    let theta = theta_fn.eval(t)?;
    let theta_dot = central_difference(theta_fn, t, dt_probe)?;
    Ok(flow_residual_sigma(&theta, &theta_dot, &sigma_fn.eval(t)?))
}

pub fn metric_flow_residual_g(
    theta_fn: &GeneratorFunction,
    g_fn: &GeneratorFunction,
    t: f64,
    dt_probe: f64,
) -> Result<f64> {
    ensure_dim(theta_fn.dim(), g_fn.dim())?;
    let theta = theta_fn.eval(t)?;
    let theta_dot = central_difference(theta_fn, t, dt_probe)?;
    Ok(flow_residual_g(&theta, &theta_dot, &g_fn.eval(t)?))
}

/// Integrates `i dTheta/dt = G^dagger Theta - Theta G` directly with RK4,
/// re-symmetrizing after every step. Positivity is checked at every step and
/// the smallest eigenvalue is logged per sample as `min_eigenvalue`.
pub fn solve_metric_ode(
    g_fn: &GeneratorFunction,
    theta0: &Operator,
    grid: &TimeGrid,
) -> Result<Trajectory<Operator>> {
    solve_metric_ode_with(g_fn, theta0, grid, &Tolerances::default())
}

pub fn solve_metric_ode_with(
    g_fn: &GeneratorFunction,
    theta0: &Operator,
    grid: &TimeGrid,
    tol: &Tolerances,
) -> Result<Trajectory<Operator>> {
    ensure_dim(g_fn.dim(), theta0.dim())?;
    let eig0 = hermitian_eig_with(theta0, tol)?;
    let threshold = tol.positive_rel * theta0.norm();
    if eig0.eigenvalues[0] <= threshold {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: eig0.eigenvalues[0],
            threshold,
        });
    }

    let mut traj = Trajectory::new(*grid);
    let neg_i = C64::new(0.0, -1.0);
    integrate(
        grid,
        theta0.matrix().clone(),
        |t| {
            g_fn.eval(t)
                .map(|g| (g.adjoint().into_matrix(), g.into_matrix()))
        },
        |(g_dag, g): &(DMatrix<C64>, DMatrix<C64>), theta: &DMatrix<C64>| {
            (g_dag * theta - theta * g) * neg_i
        },
        |k, t, theta| {
            let op = Operator::from_matrix_unchecked(theta.clone()).hermitian_part();
            *theta = op.matrix().clone();
            if !is_positive_definite(&op) {
                let min = hermitian_eig_with(&op, tol)
                    .map(|e| e.eigenvalues[0])
                    .unwrap_or(f64::NAN);
                return Err(Error::MetricDegenerated {
                    t,
                    min_eigenvalue: min,
                });
            }
            if grid.is_sample(k) {
                let min = hermitian_eig_with(&op, tol)?.eigenvalues[0];
                if min <= tol.positive_rel * op.norm() {
                    return Err(Error::MetricDegenerated {
                        t,
                        min_eigenvalue: min,
                    });
                }
                traj.residuals.record("min_eigenvalue", min);
                traj.push(k, t, op);
            }
            Ok(())
        },
    )?;
    Ok(traj)
}
