//! Shared fixtures for the benchmarks.

use nip_core::linalg::biorthogonal_eig;
use nip_core::scenario::chain_generator;
use nip_core::{BiorthogonalBasis, GeneratorFunction, Result, TimeGrid};

/// The bundled benchmark chain at size `n`.
pub fn chain(n: usize) -> GeneratorFunction {
    chain_generator(n, 1.0, 0.3, 0.1, 0.2, 1.0)
}

/// Eigenbasis of the generator at `t = 0`.
pub fn initial_basis(g: &GeneratorFunction) -> Result<BiorthogonalBasis> {
    Ok(biorthogonal_eig(&g.eval(0.0)?)?.into())
}

/// Short grid so one iteration stays well under a second.
pub fn grid() -> TimeGrid {
    TimeGrid::new(0.0, 0.2, 1e-3, 50).expect("valid grid")
}
