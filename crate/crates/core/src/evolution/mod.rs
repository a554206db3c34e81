//! Time propagation of kets, dual bras, observables, density matrices and whole
//! biorthonormal bases, all with the same fixed-step RK4 scheme.

mod generator;
mod grid;
mod interp;
mod pipeline;
pub(crate) mod rk4;
mod trajectory;

pub use generator::GeneratorFunction;
pub use grid::TimeGrid;
pub use interp::interpolated_generator;
pub use pipeline::{nip_pipeline, NipRun, NipSample, PipelineOptions};
pub use trajectory::{ResidualLog, Trajectory};

use nalgebra::DMatrix;

use crate::basis::BiorthogonalBasis;
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, ensure_dim, DualStateVector, Operator, StateVector, C64};
use rk4::integrate;

const NEG_I: C64 = C64::new(0.0, -1.0);

/// Largest allowed gram or completeness deviation while propagating a basis.
pub const BASIS_TOLERANCE: f64 = 1e-6;

/// Solves `i d|psi>/dt = G(t)|psi>`.
pub fn propagate_ket(
    g_fn: &GeneratorFunction,
    psi0: &StateVector,
    grid: &TimeGrid,
) -> Result<Trajectory<StateVector>> {
    ensure_dim(g_fn.dim(), psi0.dim())?;
    let mut traj = Trajectory::new(*grid);
    integrate(
        grid,
        DMatrix::from_column_slice(psi0.dim(), 1, psi0.entries()),
        |t| g_fn.eval(t),
        |g, y| (g.matrix() * y) * NEG_I,
        |k, t, y| {
            if grid.is_sample(k) {
                traj.push(k, t, StateVector(y.column(0).into_owned()));
            }
            Ok(())
        },
    )?;
    Ok(traj)
}

/// Solves `i d|psi_Theta>/dt = G(t)^dagger |psi_Theta>`.
pub fn propagate_bra(
    g_fn: &GeneratorFunction,
    psi_theta0: &DualStateVector,
    grid: &TimeGrid,
) -> Result<Trajectory<DualStateVector>> {
    let ket = StateVector(psi_theta0.vector().clone());
    let traj = propagate_ket(&g_fn.adjoint(), &ket, grid)?;
    Ok(Trajectory {
        grid: traj.grid,
        steps: traj.steps,
        times: traj.times,
        samples: traj
            .samples
            .into_iter()
            .map(|s| DualStateVector(s.0))
            .collect(),
        residuals: traj.residuals,
    })
}

/// Largest distance from an eigenvalue of one set to the nearest member of the
/// other, in both directions.
pub(crate) fn spectrum_distance(a: &[C64], b: &[C64]) -> f64 {
    let one_way = |x: &[C64], y: &[C64]| {
        x.iter()
            .map(|p| {
                y.iter()
                    .map(|q| (p - q).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Solves the Heisenberg-type flow `i dQ/dt = Q Sigma - Sigma Q + K`.
///
/// Logs `eigenvalue_drift`, the distance of the spectrum of `Q(t)` from that
/// of `Q(0)`, per sample.
pub fn propagate_observable(
    sigma_fn: &GeneratorFunction,
    q0: &Operator,
    k_fn: Option<&GeneratorFunction>,
    grid: &TimeGrid,
) -> Result<Trajectory<Operator>> {
    ensure_dim(sigma_fn.dim(), q0.dim())?;
    if let Some(k) = k_fn {
        ensure_dim(q0.dim(), k.dim())?;
    }
    let spectrum0 = eigenvalues(q0)?;
    let mut traj = Trajectory::new(*grid);
    let mut failure = None;
    integrate(
        grid,
        q0.matrix().clone(),
        |t| {
            let sigma = sigma_fn.eval(t)?.into_matrix();
            let source = match k_fn {
                Some(k) => Some(k.eval(t)?.into_matrix()),
                None => None,
            };
            Ok((sigma, source))
        },
        |(sigma, source): &(DMatrix<C64>, Option<DMatrix<C64>>), q| {
            let mut rhs = q * sigma - sigma * q;
            if let Some(s) = source {
                rhs += s;
            }
            rhs * NEG_I
        },
        |k, t, q| {
            if grid.is_sample(k) {
                let op = Operator::from_matrix_unchecked(q.clone());
                match eigenvalues(&op) {
                    Ok(ev) => traj
                        .residuals
                        .record("eigenvalue_drift", spectrum_distance(&spectrum0, &ev)),
                    Err(e) => failure = Some(e),
                }
                traj.push(k, t, op);
            }
            Ok(())
        },
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(traj),
    }
}

/// Solves `i dOmega/dt = Omega Sigma`, the flow that fixes a Dyson map up to
/// its initial value.
pub fn propagate_dyson_map(
    sigma_fn: &GeneratorFunction,
    omega0: &Operator,
    grid: &TimeGrid,
) -> Result<Trajectory<Operator>> {
    ensure_dim(sigma_fn.dim(), omega0.dim())?;
    let mut traj = Trajectory::new(*grid);
    integrate(
        grid,
        omega0.matrix().clone(),
        |t| sigma_fn.eval(t),
        |sigma, omega| (omega * sigma.matrix()) * NEG_I,
        |k, t, omega| {
            if grid.is_sample(k) {
                traj.push(k, t, Operator::from_matrix_unchecked(omega.clone()));
            }
            Ok(())
        },
    )?;
    Ok(traj)
}

/// Non-Hermitian density matrix with unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: Operator,
}

impl DensityMatrix {
    const TRACE_TOLERANCE: f64 = 1e-10;

    pub fn new(matrix: Operator) -> Result<Self> {
        let tr = matrix.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > Self::TRACE_TOLERANCE {
            return Err(Error::config(
                "density",
                format!("trace must be 1, found {tr}"),
            ));
        }
        Ok(Self { matrix })
    }

    /// The elementary projector `|psi><psi_Theta| / <psi_Theta|psi>`.
    pub fn pure(ket: &StateVector, bra: &DualStateVector) -> Result<Self> {
        Self::mixture(&[(1.0, ket.clone(), bra.clone())])
    }

    /// `sum_k p_k |psi_k><psi_k,Theta| / <psi_k,Theta|psi_k>` with `sum p_k = 1`.
    pub fn mixture(states: &[(f64, StateVector, DualStateVector)]) -> Result<Self> {
        let first = states
            .first()
            .ok_or_else(|| Error::config("density", "empty mixture"))?;
        let dim = first.1.dim();
        let total: f64 = states.iter().map(|s| s.0).sum();
        if (total - 1.0).abs() > Self::TRACE_TOLERANCE {
            return Err(Error::config(
                "density",
                format!("probabilities sum to {total}"),
            ));
        }
        let mut rho = DMatrix::<C64>::zeros(dim, dim);
        for (p, ket, bra) in states {
            ensure_dim(dim, ket.dim())?;
            ensure_dim(dim, bra.dim())?;
            let norm = bra.overlap(ket);
            if norm.norm() == 0.0 {
                return Err(Error::config("density", "bra and ket are orthogonal"));
            }
            rho += (ket.vector() * bra.vector().adjoint()) * (C64::new(*p, 0.0) / norm);
        }
        Self::new(Operator::from_matrix_unchecked(rho))
    }

    pub fn matrix(&self) -> &Operator {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }
}

/// Solves the non-Hermitian Liouville equation `i drho/dt = G rho - rho G`.
/// Logs `trace_drift = |tr rho(t) - 1|` per sample.
pub fn propagate_density(
    g_fn: &GeneratorFunction,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<Trajectory<DensityMatrix>> {
    ensure_dim(g_fn.dim(), rho0.matrix.dim())?;
    let mut traj = Trajectory::new(*grid);
    integrate(
        grid,
        rho0.matrix.matrix().clone(),
        |t| g_fn.eval(t),
        |g, rho| (g.matrix() * rho - rho * g.matrix()) * NEG_I,
        |k, t, rho| {
            if grid.is_sample(k) {
                let matrix = Operator::from_matrix_unchecked(rho.clone());
                traj.residuals
                    .record("trace_drift", (matrix.trace() - C64::new(1.0, 0.0)).norm());
                traj.push(k, t, DensityMatrix { matrix });
            }
            Ok(())
        },
    )?;
    Ok(traj)
}

/// Propagates kets under `g_fn` and bras under `bra_fn` together, failing with
/// `BasisDegenerated` when either deviation exceeds `tolerance`. `observe`
/// receives every step.
pub(crate) fn propagate_pair(
    g_fn: &GeneratorFunction,
    bra_fn: &GeneratorFunction,
    kets: DMatrix<C64>,
    bras: DMatrix<C64>,
    grid: &TimeGrid,
    mut observe: impl FnMut(usize, f64, &DMatrix<C64>, &DMatrix<C64>) -> Result<()>,
) -> Result<()> {
    ensure_dim(g_fn.dim(), kets.nrows())?;
    ensure_dim(bra_fn.dim(), bras.nrows())?;
    integrate(
        grid,
        (kets, bras),
        |t| Ok((g_fn.eval(t)?.into_matrix(), bra_fn.eval(t)?.into_matrix())),
        |(g, gb): &(DMatrix<C64>, DMatrix<C64>), (r, l): &(DMatrix<C64>, DMatrix<C64>)| {
            ((g * r) * NEG_I, (gb * l) * NEG_I)
        },
        |k, t, (r, l)| observe(k, t, r, l),
    )?;
    Ok(())
}

/// Propagates every ket of the basis under `G` and every bra under `G^dagger`.
/// Logs `gram_deviation` and `completeness_deviation` per sample.
pub fn propagate_basis(
    g_fn: &GeneratorFunction,
    basis0: &BiorthogonalBasis,
    grid: &TimeGrid,
) -> Result<Trajectory<BiorthogonalBasis>> {
    propagate_basis_with(g_fn, &g_fn.adjoint(), basis0, grid, BASIS_TOLERANCE)
}

/// As [`propagate_basis`] with an explicit bra generator and tolerance.
pub fn propagate_basis_with(
    g_fn: &GeneratorFunction,
    bra_fn: &GeneratorFunction,
    basis0: &BiorthogonalBasis,
    grid: &TimeGrid,
    tolerance: f64,
) -> Result<Trajectory<BiorthogonalBasis>> {
    let mut traj = Trajectory::new(*grid);
    propagate_pair(
        g_fn,
        bra_fn,
        basis0.kets().clone(),
        basis0.bras().clone(),
        grid,
        |k, t, r, l| {
            let basis = BiorthogonalBasis::from_columns(r.clone(), l.clone());
            let gram = basis.gram_deviation();
            let completeness = basis.completeness_deviation();
            if !(gram <= tolerance && completeness <= tolerance) {
                return Err(Error::BasisDegenerated {
                    t,
                    gram,
                    completeness,
                });
            }
            if grid.is_sample(k) {
                traj.residuals.record("gram_deviation", gram);
                traj.residuals
                    .record("completeness_deviation", completeness);
                traj.push(k, t, basis);
            }
            Ok(())
        },
    )?;
    Ok(traj)
}

/// The bilinear form `<bra|Q|ket>`, unnormalized.
pub fn expectation(bra: &DualStateVector, q: &Operator, ket: &StateVector) -> Result<C64> {
    ensure_dim(q.dim(), bra.dim())?;
    ensure_dim(q.dim(), ket.dim())?;
    Ok(bra.vector().dotc(&(q.matrix() * ket.vector())))
}
