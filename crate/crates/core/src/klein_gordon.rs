//! Klein-Gordon field on a 1-D lattice in the Feshbach-Villars form.
//!
//! `D(t) = -Laplacian + m^2(x, t)` is discretized with the 3-point stencil on
//! sites `x_j = (j + 1) dx`. The two-component state `(i dpsi/dt, psi)` then
//! obeys `i d/dt (u, v) = (D v, u)`, a first-order flow with the manifestly
//! non-Hermitian generator `[[0, D], [I, 0]]`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::basis::BiorthogonalBasis;
use crate::error::{Error, Result};
use crate::evolution::{
    nip_pipeline, propagate_dyson_map, propagate_ket, GeneratorFunction, NipRun, PipelineOptions,
    TimeGrid, Trajectory,
};
use crate::linalg::{
    biorthogonal_eig_with, ensure_dim, hermitian_eig, inverse, is_positive_definite, positive_sqrt,
    DualStateVector, Operator, StateVector, C64,
};
use crate::metric::{dyson_factorize_with, SpectralHamiltonian};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Boundary {
    /// Hard walls at `x = 0` and `x = (n + 1) dx`.
    #[default]
    Dirichlet,
    /// Ring of `n` sites. The massless uniform mode is a zero mode, so `D` is
    /// only positive for a strictly positive mass.
    Periodic,
}

/// Shape `f(x)` multiplying the driven part of the mass term.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum SpatialProfile {
    #[default]
    Uniform,
    Gaussian {
        center: f64,
        width: f64,
    },
    Linear {
        slope: f64,
        intercept: f64,
    },
}

impl SpatialProfile {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Self::Uniform => 1.0,
            Self::Gaussian { center, width } => {
                (-(x - center).powi(2) / (2.0 * width * width)).exp()
            }
            Self::Linear { slope, intercept } => intercept + slope * x,
        }
    }
}

/// `m^2(x, t) = mu0 + mu1 f(x) sin(nu t) + i gamma`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MassProfile {
    pub mu0: f64,
    pub mu1: f64,
    pub nu: f64,
    pub profile: SpatialProfile,
    /// Imaginary part; only honoured by [`LatticeModel::from_profile`] when
    /// the complex-mass extension is enabled.
    pub gamma: f64,
}

impl MassProfile {
    pub fn constant(mu0: f64) -> Self {
        Self {
            mu0,
            ..Self::default()
        }
    }

    pub fn eval(&self, x: f64, t: f64) -> C64 {
        C64::new(
            self.mu0 + self.mu1 * self.profile.value(x) * (self.nu * t).sin(),
            self.gamma,
        )
    }
}

type MassFn = dyn Fn(usize, f64) -> C64 + Send + Sync;

#[derive(Clone)]
pub struct LatticeModel {
    n_sites: usize,
    dx: f64,
    boundary: Boundary,
    complex_mass: bool,
    mass_sq: Arc<MassFn>,
}

impl std::fmt::Debug for LatticeModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LatticeModel")
            .field("n_sites", &self.n_sites)
            .field("dx", &self.dx)
            .field("boundary", &self.boundary)
            .field("complex_mass", &self.complex_mass)
            .finish_non_exhaustive()
    }
}

impl LatticeModel {
    /// `mass_sq(j, t)` gives `m^2` at site `j`. Imaginary parts are rejected
    /// later unless [`LatticeModel::with_complex_mass`] is set.
    pub fn new(
        n_sites: usize,
        dx: f64,
        mass_sq: impl Fn(usize, f64) -> C64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::config("model.n_sites", "must be at least 1"));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::config("model.dx", "must be positive and finite"));
        }
        Ok(Self {
            n_sites,
            dx,
            boundary: Boundary::Dirichlet,
            complex_mass: false,
            mass_sq: Arc::new(mass_sq),
        })
    }

    pub fn from_profile(n_sites: usize, dx: f64, mass: MassProfile) -> Result<Self> {
        Self::new(n_sites, dx, move |j, t| mass.eval((j + 1) as f64 * dx, t))
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    /// Admits complex `m^2`. Positivity and unitarity checks then report
    /// failures instead of guarding the run.
    pub fn with_complex_mass(mut self, enabled: bool) -> Self {
        self.complex_mass = enabled;
        self
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn complex_mass(&self) -> bool {
        self.complex_mass
    }

    pub fn position(&self, j: usize) -> f64 {
        (j + 1) as f64 * self.dx
    }

    pub fn mass_sq(&self, j: usize, t: f64) -> C64 {
        (self.mass_sq)(j, t)
    }

    /// Fundamental Dirichlet wave number `pi / ((n + 1) dx)` times `mode`.
    pub fn dirichlet_wavenumber(&self, mode: usize) -> f64 {
        mode as f64 * PI / ((self.n_sites + 1) as f64 * self.dx)
    }

    /// Lattice dispersion `omega^2 = (2 - 2 cos(k dx)) / dx^2 + m^2`.
    pub fn dispersion(&self, k: f64, mass_sq: f64) -> f64 {
        ((2.0 - 2.0 * (k * self.dx).cos()) / (self.dx * self.dx) + mass_sq).sqrt()
    }
}

/// `D(t)`: diagonal `2/dx^2 + m^2(x_j, t)`, neighbours `-1/dx^2`.
pub fn build_lattice_d(model: &LatticeModel, t: f64) -> Operator {
    let n = model.n_sites;
    let inv = 1.0 / (model.dx * model.dx);
    let mut d = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        d[(j, j)] = C64::new(2.0 * inv, 0.0) + model.mass_sq(j, t);
        let next = j + 1;
        let neighbour = match model.boundary {
            _ if next < n => Some(next),
            Boundary::Periodic => Some(0),
            Boundary::Dirichlet => None,
        };
        if let Some(k) = neighbour.filter(|&k| k != j) {
            d[(j, k)] -= C64::new(inv, 0.0);
            d[(k, j)] -= C64::new(inv, 0.0);
        }
    }
    Operator::from_matrix_unchecked(d)
}

fn blocks(
    d: &Operator,
    upper_left: Option<&DMatrix<C64>>,
    upper_right: &DMatrix<C64>,
    lower_left: &DMatrix<C64>,
    lower_right: Option<&DMatrix<C64>>,
) -> Operator {
    let n = d.dim();
    let mut m = DMatrix::<C64>::zeros(2 * n, 2 * n);
    if let Some(b) = upper_left {
        m.view_mut((0, 0), (n, n)).copy_from(b);
    }
    m.view_mut((0, n), (n, n)).copy_from(upper_right);
    m.view_mut((n, 0), (n, n)).copy_from(lower_left);
    if let Some(b) = lower_right {
        m.view_mut((n, n), (n, n)).copy_from(b);
    }
    Operator::from_matrix_unchecked(m)
}

/// `[[0, D], [I, 0]]`.
pub fn build_fv_generator(d: &Operator) -> Operator {
    let id = DMatrix::identity(d.dim(), d.dim());
    blocks(d, None, d.matrix(), &id, None)
}

/// `[[0, I], [conj(D), 0]]`, the generator of the dual bras. Equal to the
/// adjoint of [`build_fv_generator`] whenever `D` is symmetric, which the
/// lattice stencil is even for complex masses.
pub fn build_fv_bra_generator(d: &Operator) -> Operator {
    let id = DMatrix::identity(d.dim(), d.dim());
    blocks(d, None, &id, &d.matrix().conjugate(), None)
}

/// `diag(D^-1/2, D^1/2)`.
pub fn stationary_kg_metric(d: &Operator) -> Result<Operator> {
    let root = positive_sqrt(d)?;
    let inv_root = inverse(&root)?.hermitian_part();
    let zero = DMatrix::zeros(d.dim(), d.dim());
    Ok(blocks(
        d,
        Some(inv_root.matrix()),
        &zero,
        &zero,
        Some(root.matrix()),
    ))
}

/// Ket generator `t -> build_fv_generator(D(t))`.
pub fn fv_generator_fn(model: &LatticeModel) -> GeneratorFunction {
    let model = model.clone();
    GeneratorFunction::new(2 * model.n_sites, move |t| {
        build_fv_generator(&build_lattice_d(&model, t))
    })
}

/// Bra generator `t -> build_fv_bra_generator(D(t))`.
pub fn fv_bra_generator_fn(model: &LatticeModel) -> GeneratorFunction {
    let model = model.clone();
    GeneratorFunction::new(2 * model.n_sites, move |t| {
        build_fv_bra_generator(&build_lattice_d(&model, t))
    })
}

/// Two-component Feshbach-Villars column: `upper = i dpsi/dt`, `lower = psi`.
#[derive(Clone, Debug, PartialEq)]
pub struct FvState {
    pub upper: DVector<C64>,
    pub lower: DVector<C64>,
}

impl FvState {
    pub fn n_sites(&self) -> usize {
        self.lower.len()
    }

    pub fn to_state_vector(&self) -> StateVector {
        let n = self.n_sites();
        let mut v = DVector::zeros(2 * n);
        v.rows_mut(0, n).copy_from(&self.upper);
        v.rows_mut(n, n).copy_from(&self.lower);
        StateVector(v)
    }

    pub fn from_state_vector(v: &StateVector) -> Result<Self> {
        if !v.dim().is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                expected: v.dim() + 1,
                found: v.dim(),
            });
        }
        let n = v.dim() / 2;
        Ok(Self {
            upper: v.vector().rows(0, n).into_owned(),
            lower: v.vector().rows(n, n).into_owned(),
        })
    }
}

pub fn fv_pack(psi: &[C64], dpsi_dt: &[C64]) -> Result<FvState> {
    ensure_dim(psi.len(), dpsi_dt.len())?;
    if psi
        .iter()
        .chain(dpsi_dt)
        .any(|z| !(z.re.is_finite() && z.im.is_finite()))
    {
        return Err(Error::NonFinite);
    }
    Ok(FvState {
        upper: DVector::from_iterator(dpsi_dt.len(), dpsi_dt.iter().map(|z| z * C64::i())),
        lower: DVector::from_column_slice(psi),
    })
}

/// Returns `(psi, dpsi_dt)`.
pub fn fv_unpack(state: &FvState) -> (Vec<C64>, Vec<C64>) {
    let psi = state.lower.iter().copied().collect();
    let dpsi = state
        .upper
        .iter()
        .map(|z| z * C64::new(0.0, -1.0))
        .collect();
    (psi, dpsi)
}

/// Standing wave `psi_j = sin(k x_j)` with `dpsi/dt = -i omega psi`, the FV
/// eigenstate of eigenvalue `omega` on the Dirichlet lattice when `k` is a
/// multiple of the fundamental wave number and `m^2` is constant.
pub fn plane_wave(model: &LatticeModel, k: f64, omega: f64) -> FvState {
    let psi: Vec<C64> = (0..model.n_sites)
        .map(|j| C64::new((k * model.position(j)).sin(), 0.0))
        .collect();
    let dpsi: Vec<C64> = psi.iter().map(|z| z * C64::new(0.0, -omega)).collect();
    fv_pack(&psi, &dpsi).expect("equal lengths and finite entries")
}

/// Propagates a single FV state under `G(t)`.
pub fn propagate_fv(
    model: &LatticeModel,
    initial: &FvState,
    grid: &TimeGrid,
) -> Result<Trajectory<FvState>> {
    ensure_dim(model.n_sites, initial.n_sites())?;
    let traj = propagate_ket(&fv_generator_fn(model), &initial.to_state_vector(), grid)?;
    let samples = traj
        .samples
        .iter()
        .map(FvState::from_state_vector)
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        grid: traj.grid,
        steps: traj.steps,
        times: traj.times,
        samples,
        residuals: traj.residuals,
    })
}

/// The indefinite Krein form `<a|P|b>` with `P = [[0, I], [I, 0]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct KreinStructure {
    p_matrix: Operator,
}

impl KreinStructure {
    pub fn new(n_sites: usize) -> Self {
        let n = n_sites;
        let mut p = DMatrix::<C64>::zeros(2 * n, 2 * n);
        let id = DMatrix::<C64>::identity(n, n);
        p.view_mut((0, n), (n, n)).copy_from(&id);
        p.view_mut((n, 0), (n, n)).copy_from(&id);
        Self {
            p_matrix: Operator::from_matrix_unchecked(p),
        }
    }

    pub fn p_matrix(&self) -> &Operator {
        &self.p_matrix
    }

    pub fn n_sites(&self) -> usize {
        self.p_matrix.dim() / 2
    }
}

pub fn krein_product(k: &KreinStructure, a: &FvState, b: &FvState) -> Result<C64> {
    ensure_dim(k.n_sites(), a.n_sites())?;
    ensure_dim(k.n_sites(), b.n_sites())?;
    Ok(a.upper.dotc(&b.lower) + a.lower.dotc(&b.upper))
}

/// Largest relative residual of `d^2 psi/dt^2 + D(t) psi = 0` over interior
/// samples, with the second derivative taken from neighbouring samples.
///
/// Only samples whose neighbours sit at equal spacing enter. A sample with
/// `D psi = 0` and vanishing second difference contributes zero.
pub fn kg_residual(trajectory: &Trajectory<FvState>, model: &LatticeModel) -> Result<f64> {
    let n = trajectory.len();
    if n < 5 {
        return Err(Error::InsufficientSamples {
            required: 5,
            found: n,
        });
    }
    let mut worst = 0.0_f64;
    for i in 1..n - 1 {
        let (before, at, after) = (
            trajectory.steps[i - 1],
            trajectory.steps[i],
            trajectory.steps[i + 1],
        );
        if at - before != after - at {
            continue;
        }
        let delta = trajectory.times[i] - trajectory.times[i - 1];
        let psi = |j: usize| &trajectory.samples[j].lower;
        ensure_dim(model.n_sites, psi(i).len())?;
        let second =
            (psi(i + 1) - psi(i) * C64::new(2.0, 0.0) + psi(i - 1)) / C64::new(delta * delta, 0.0);
        let d_psi = build_lattice_d(model, trajectory.times[i]).matrix() * psi(i);
        let num = (second + &d_psi).norm();
        let den = d_psi.norm();
        let r = if den > 0.0 {
            num / den
        } else if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        worst = if r.is_nan() { f64::NAN } else { worst.max(r) };
    }
    Ok(worst)
}

/// Settings for [`kg_scenario_with`].
#[derive(Clone, Debug, Default)]
pub struct KgOptions {
    /// Overrides the initial FV eigenvalues as the conserved energies.
    pub energies: Option<Vec<f64>>,
    /// Pipeline settings; `psi0` and `bra_generator` are filled in by the
    /// scenario.
    pub pipeline: PipelineOptions,
}

/// Outcome of [`kg_scenario`].
#[derive(Clone, Debug)]
pub struct KgRun {
    pub nip: NipRun,
    /// Tracked FV state per sample. Residual columns: `overlap_drift`,
    /// `krein_drift`, `omega_flow` (`|Omega^dagger Omega - Theta| / |Theta|`)
    /// and `d_min_eigenvalue`.
    pub states: Trajectory<FvState>,
    /// Dyson map integrated from `i dOmega/dt = Omega Sigma`.
    pub omega_flow: Trajectory<Operator>,
}

pub fn kg_scenario(model: &LatticeModel, initial: &FvState, grid: &TimeGrid) -> Result<KgRun> {
    kg_scenario_with(model, initial, grid, &KgOptions::default())
}

/// Runs the full pipeline on the FV generator of `model`, starting from the
/// eigenbasis of `G(t_i)` and the tracked state `initial`, then integrates the
/// Dyson map along the extracted Coriolis generator.
///
/// For real masses `D(t)` is checked for positivity at every step before
/// anything is propagated; the first failing step is reported as
/// `MetricDegenerated` at its time.
pub fn kg_scenario_with(
    model: &LatticeModel,
    initial: &FvState,
    grid: &TimeGrid,
    options: &KgOptions,
) -> Result<KgRun> {
    let n = model.n_sites;
    ensure_dim(n, initial.n_sites())?;
    ensure_dim(n, initial.upper.len())?;
    let tol = options.pipeline.tolerances;

    for k in 0..=grid.steps() {
        let t = grid.time(k);
        let d = build_lattice_d(model, t);
        let imaginary = d.hermiticity_residual();
        if imaginary > 0.0 && !model.complex_mass {
            return Err(Error::InvalidGenerator {
                t,
                reason: "complex mass term without the complex-mass extension".into(),
            });
        }
        if !model.complex_mass && !is_positive_definite(&d) {
            let min_eigenvalue = hermitian_eig(&d).map_or(f64::NAN, |e| e.eigenvalues[0]);
            return Err(Error::MetricDegenerated { t, min_eigenvalue });
        }
    }

    let g_fn = fv_generator_fn(model);
    let g0 = g_fn.eval(grid.t_start())?;
    let eig = biorthogonal_eig_with(&g0, &tol)?;
    let energies = match &options.energies {
        Some(e) => e.clone(),
        None => eig.eigenvalues.iter().map(|z| z.re).collect(),
    };
    let spec0 = SpectralHamiltonian::new(BiorthogonalBasis::from(eig), energies)?;
    let q0 = crate::metric::hamiltonian_from_spectral(&spec0)?;

    let psi0 = initial.to_state_vector();
    let mut pipeline = options.pipeline.clone();
    pipeline.psi0 = Some(psi0.clone());
    pipeline.bra_generator = Some(fv_bra_generator_fn(model));
    let nip = nip_pipeline(&g_fn, &spec0, &q0, grid, &pipeline)?;

    let samples = &nip.trajectory.samples;
    let theta0 = &samples[0].theta;
    let omega0 = dyson_factorize_with(theta0, &Operator::identity(2 * n), &tol)?.omega;
    let omega_flow = propagate_dyson_map(&nip.sigma_fn, &omega0, grid)?;

    let krein = KreinStructure::new(n);
    let bra0: &DualStateVector = &samples[0].bra;
    let overlap0 = bra0.overlap(&psi0);
    let krein0 = krein_product(&krein, initial, initial)?;
    let mut states = Trajectory::new(*grid);
    for (i, sample) in samples.iter().enumerate() {
        let t = nip.trajectory.times[i];
        let state = FvState::from_state_vector(&sample.ket)?;
        let log = &mut states.residuals;
        log.record(
            "overlap_drift",
            (sample.overlap - overlap0).norm() / overlap0.norm(),
        );
        let kn = krein_product(&krein, &state, &state)?;
        log.record(
            "krein_drift",
            (kn - krein0).norm() / krein0.norm().max(f64::MIN_POSITIVE),
        );
        let omega = &omega_flow.samples[i];
        let gap = (&omega.adjoint() * omega).distance(&sample.theta) / sample.theta.norm();
        log.record("omega_flow", gap);
        let d = build_lattice_d(model, t);
        let min_d = if model.complex_mass {
            f64::NAN
        } else {
            hermitian_eig(&d)?.eigenvalues[0]
        };
        log.record("d_min_eigenvalue", min_d);
        states.push(nip.trajectory.steps[i], t, state);
    }

    Ok(KgRun {
        nip,
        states,
        omega_flow,
    })
}

/// First grid step at which the smallest eigenvalue of `D(t)` is no longer
/// positive, located by dense eigensolves. `None` if `D` stays positive.
pub fn first_tachyonic_step(model: &LatticeModel, grid: &TimeGrid) -> Result<Option<usize>> {
    for k in 0..=grid.steps() {
        let d = build_lattice_d(model, grid.time(k)).hermitian_part();
        if hermitian_eig(&d)?.eigenvalues[0] <= 0.0 {
            return Ok(Some(k));
        }
    }
    Ok(None)
}
