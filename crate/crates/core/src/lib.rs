//! Numerical laboratory for the non-Hermitian interaction picture of unitary
//! quantum mechanics.
//!
//! Kets evolve under a generator `G(t)`, their metric-dressed partners under
//! `G(t)^dagger`, and observables under the Coriolis generator
//! `Sigma(t) = i Omega^-1 dOmega/dt`. The crate propagates all of these,
//! reconstructs the time-dependent metric `Theta(t)` from a propagated
//! biorthonormal basis, factorizes it into Dyson maps, and checks everything
//! against a Hermitian reference picture and a Feshbach-Villars Klein-Gordon
//! lattice model.

pub mod basis;
pub mod error;
pub mod evolution;
pub mod klein_gordon;
pub mod linalg;
pub mod metric;
pub mod oracle;
pub mod scenario;

pub use basis::BiorthogonalBasis;
pub use error::{Error, Result};
pub use evolution::{DensityMatrix, GeneratorFunction, TimeGrid, Trajectory};
pub use linalg::{DualStateVector, Operator, StateVector, Tolerances, C64};
pub use metric::{Gauge, MetricDecomposition, SpectralHamiltonian};
