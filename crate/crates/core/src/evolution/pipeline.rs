//! The full recipe: propagate a biorthonormal basis and a state pair, rebuild
//! the metric and a Dyson map at every step, extract the Coriolis generator,
//! carry an observable along with it and evaluate predictions, logging every
//! consistency residual on the way.

use nalgebra::DMatrix;

use super::{
    interpolated_generator, propagate_observable, propagate_pair, spectrum_distance,
    GeneratorFunction, TimeGrid, Trajectory, BASIS_TOLERANCE,
};
use crate::basis::BiorthogonalBasis;
use crate::error::{Error, Result};
use crate::linalg::{
    eigenvalues, ensure_dim, hermitian_eig_with, DualStateVector, Operator, StateVector,
    Tolerances, C64,
};
use crate::metric::{
    check_quasi_hermiticity, coriolis, factorize_in_gauge, flow_residual_g, flow_residual_sigma,
    metric_from_bra_matrix, sampled_derivatives, spectral_operator, Gauge, SpectralHamiltonian,
};

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    pub gauge: Gauge,
    /// Initial ket; defaults to the normalized sum of the basis kets. Its bra
    /// partner is always `Theta(t_i) |psi0>`.
    pub psi0: Option<StateVector>,
    /// Source term of the Heisenberg flow for the observable.
    pub k_fn: Option<GeneratorFunction>,
    /// Generator for the bras; defaults to `G^dagger`.
    pub bra_generator: Option<GeneratorFunction>,
    pub tolerances: Tolerances,
    pub basis_tolerance: f64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            gauge: Gauge::default(),
            psi0: None,
            k_fn: None,
            bra_generator: None,
            tolerances: Tolerances::default(),
            basis_tolerance: BASIS_TOLERANCE,
        }
    }
}

/// Everything reconstructed at one sample time.
#[derive(Clone, Debug)]
pub struct NipSample {
    pub basis: BiorthogonalBasis,
    pub theta: Operator,
    pub omega: Operator,
    pub sigma: Operator,
    pub generator: Operator,
    pub h_spectral: Operator,
    pub q: Operator,
    pub ket: StateVector,
    pub bra: DualStateVector,
    /// `<psi_Theta|Q|psi>`, unnormalized.
    pub expectation: C64,
    /// `<psi_Theta|psi>`.
    pub overlap: C64,
}

impl NipSample {
    pub fn normalized_expectation(&self) -> C64 {
        self.expectation / self.overlap
    }
}

#[derive(Clone, Debug)]
pub struct NipRun {
    pub trajectory: Trajectory<NipSample>,
    /// Coriolis generator interpolated from the per-step values.
    pub sigma_fn: GeneratorFunction,
    pub energies: Vec<f64>,
    /// Spectrum of `H(t_i)`.
    pub initial_h_spectrum: Vec<C64>,
}

/// Residual columns written by [`nip_pipeline`], one value per sample.
pub mod columns {
    pub const OVERLAP_DRIFT: &str = "overlap_drift";
    pub const GRAM: &str = "gram_deviation";
    pub const COMPLETENESS: &str = "completeness_deviation";
    pub const QH_H: &str = "quasi_hermiticity_h";
    pub const QH_Q: &str = "quasi_hermiticity_q";
    pub const FLOW_SIGMA: &str = "metric_flow_sigma";
    pub const FLOW_G: &str = "metric_flow_g";
    pub const H_TILDE: &str = "h_tilde_gap";
    pub const THETA_MIN_EIG: &str = "theta_min_eigenvalue";
    pub const H_SPECTRUM_DRIFT: &str = "h_spectrum_drift";
    pub const Q_SPECTRUM_DRIFT: &str = "q_spectrum_drift";
    pub const HEISENBERG_FORM_GAP: &str = "heisenberg_form_gap";
}

/// Runs the whole recipe for generator `g_fn`, initial spectral Hamiltonian
/// `spec0` and initial observable `q0`.
///
/// The basis and state pair are integrated on every step of `grid`; Dyson maps
/// are built on every step so that their time derivative can be taken with the
/// five-point stencil of spacing `dt`. Samples and residuals are reported at
/// the grid's sample stride, and the metric-flow residuals use the stencil
/// over neighbouring samples.
pub fn nip_pipeline(
    g_fn: &GeneratorFunction,
    spec0: &SpectralHamiltonian,
    q0: &Operator,
    grid: &TimeGrid,
    options: &PipelineOptions,
) -> Result<NipRun> {
    let dim = g_fn.dim();
    let tol = &options.tolerances;
    ensure_dim(dim, spec0.basis.dim())?;
    ensure_dim(dim, spec0.basis.len())?;
    ensure_dim(dim, q0.dim())?;
    let bra_fn = options
        .bra_generator
        .clone()
        .unwrap_or_else(|| g_fn.adjoint());

    let energies = spec0.energies.clone();
    let theta0 = metric_from_bra_matrix(spec0.basis.bras(), tol)?;
    let psi0 = match &options.psi0 {
        Some(p) => {
            ensure_dim(dim, p.dim())?;
            p.clone()
        }
        None => {
            let sum = spec0.basis.kets().column_sum();
            let norm = sum.norm();
            StateVector(sum / C64::new(norm, 0.0))
        }
    };
    let bra0 = theta0.apply_dual(&DualStateVector(psi0.vector().clone()));

    // kets and bras augmented with the tracked state as an extra column
    let n = spec0.basis.len();
    let mut kets = DMatrix::<C64>::zeros(dim, n + 1);
    kets.view_mut((0, 0), (dim, n))
        .copy_from(spec0.basis.kets());
    kets.set_column(n, psi0.vector());
    let mut bras = DMatrix::<C64>::zeros(dim, n + 1);
    bras.view_mut((0, 0), (dim, n))
        .copy_from(spec0.basis.bras());
    bras.set_column(n, bra0.vector());

    let t_start = grid.t_start();
    let mut omegas = Vec::with_capacity(grid.steps() + 1);
    let mut sampled: Vec<(usize, f64, BiorthogonalBasis, StateVector, DualStateVector)> =
        Vec::new();
    propagate_pair(g_fn, &bra_fn, kets, bras, grid, |k, t, r, l| {
        let basis = BiorthogonalBasis::from_columns(
            r.columns(0, n).into_owned(),
            l.columns(0, n).into_owned(),
        );
        let gram = basis.gram_deviation();
        let completeness = basis.completeness_deviation();
        if !(gram <= options.basis_tolerance && completeness <= options.basis_tolerance) {
            return Err(Error::BasisDegenerated {
                t,
                gram,
                completeness,
            });
        }
        let decomposition = factorize_in_gauge(&basis, &energies, t - t_start, options.gauge, tol)
            .map_err(|e| match e {
                Error::RankDeficient { min_eigenvalue }
                | Error::NotPositiveDefinite { min_eigenvalue, .. } => {
                    Error::MetricDegenerated { t, min_eigenvalue }
                }
                other => other,
            })?;
        omegas.push(decomposition.omega);
        if grid.is_sample(k) {
            sampled.push((
                k,
                t,
                basis,
                StateVector(r.column(n).into_owned()),
                DualStateVector(l.column(n).into_owned()),
            ));
        }
        Ok(())
    })?;

    let omega_dots = sampled_derivatives(&omegas, grid.dt())?;
    let sigmas = omegas
        .iter()
        .zip(&omega_dots)
        .map(|(o, od)| coriolis(o, od, tol))
        .collect::<Result<Vec<_>>>()?;
    let sigma_fn = interpolated_generator(t_start, grid.dt(), sigmas.clone());

    let q_traj = propagate_observable(&sigma_fn, q0, options.k_fn.as_ref(), grid)?;

    let h0 = spectral_operator(&spec0.basis, &energies);
    let h_sigma = propagate_observable(&sigma_fn, &h0, None, grid)?;
    let h_g = propagate_observable(&g_fn.negated(), &h0, None, grid)?;
    let initial_h_spectrum = eigenvalues(&h0)?;

    let thetas = sampled
        .iter()
        .map(|(_, _, basis, _, _)| {
            Operator::from_matrix_unchecked(basis.bras() * basis.bras().adjoint())
        })
        .collect::<Vec<_>>();
    let sample_spacing = grid.dt() * grid.sample_stride() as f64;
    // the last sample may sit closer than one stride to its neighbour
    let uniform = sampled
        .windows(2)
        .all(|w| w[1].0 - w[0].0 == grid.sample_stride());
    let theta_dots = if uniform && thetas.len() >= 5 {
        Some(sampled_derivatives(&thetas, sample_spacing)?)
    } else {
        None
    };

    let mut traj = Trajectory::new(*grid);
    let overlap0 = bra0.overlap(&psi0);
    for (idx, ((k, t, basis, ket, bra), theta)) in sampled.into_iter().zip(thetas).enumerate() {
        use columns::*;
        let g = g_fn.eval(t)?;
        let sigma = sigmas[k].clone();
        let omega = omegas[k].clone();
        let h = spectral_operator(&basis, &energies);
        let q = q_traj.samples[idx].clone();
        let log = &mut traj.residuals;

        let overlap = bra.overlap(&ket);
        log.record(OVERLAP_DRIFT, (overlap - overlap0).norm() / overlap0.norm());
        log.record(GRAM, basis.gram_deviation());
        log.record(COMPLETENESS, basis.completeness_deviation());
        log.record(QH_H, check_quasi_hermiticity(&h, &theta)?);
        log.record(QH_Q, check_quasi_hermiticity(&q, &theta)?);
        if let Some(dots) = &theta_dots {
            log.record(FLOW_SIGMA, flow_residual_sigma(&theta, &dots[idx], &sigma));
            log.record(FLOW_G, flow_residual_g(&theta, &dots[idx], &g));
        }
        let h_tilde = &g + &sigma;
        let h_norm = h.norm();
        let gap = h_tilde.distance(&h);
        log.record(H_TILDE, if h_norm > 0.0 { gap / h_norm } else { gap });
        log.record(
            THETA_MIN_EIG,
            hermitian_eig_with(&theta, tol)?.eigenvalues[0],
        );
        log.record(
            H_SPECTRUM_DRIFT,
            spectrum_distance(&initial_h_spectrum, &eigenvalues(&h)?),
        );
        log.record(
            Q_SPECTRUM_DRIFT,
            q_traj
                .residuals
                .column("eigenvalue_drift")
                .map_or(0.0, |c| c[idx]),
        );
        let hs = &h_sigma.samples[idx];
        let form_gap = hs.distance(&h_g.samples[idx]);
        log.record(
            HEISENBERG_FORM_GAP,
            if h_norm > 0.0 {
                form_gap / h_norm
            } else {
                form_gap
            },
        );

        let expectation = bra.vector().dotc(&(q.matrix() * ket.vector()));
        traj.push(
            k,
            t,
            NipSample {
                basis,
                theta,
                omega,
                sigma,
                generator: g,
                h_spectral: h,
                q,
                ket,
                bra,
                expectation,
                overlap,
            },
        );
    }

    Ok(NipRun {
        trajectory: traj,
        sigma_fn,
        energies,
        initial_h_spectrum,
    })
}
