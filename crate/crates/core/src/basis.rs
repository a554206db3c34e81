use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{columns, BiorthogonalEig, DualStateVector, Operator, StateVector, C64};

/// Paired ket and bra families stored column-wise.
///
/// Column `n` of `kets` is `|psi_n>`, column `n` of `bras` is `|psi_{n,Theta}>`.
#[derive(Clone, Debug, PartialEq)]
pub struct BiorthogonalBasis {
    kets: DMatrix<C64>,
    bras: DMatrix<C64>,
}

impl BiorthogonalBasis {
    pub fn new(kets: Vec<StateVector>, bras: Vec<DualStateVector>) -> Result<Self> {
        if kets.is_empty() || kets.len() != bras.len() {
            return Err(Error::DimensionMismatch {
                expected: kets.len(),
                found: bras.len(),
            });
        }
        let dim = kets[0].dim();
        for v in kets
            .iter()
            .map(|k| k.dim())
            .chain(bras.iter().map(|b| b.dim()))
        {
            crate::linalg::ensure_dim(dim, v)?;
        }
        Ok(Self {
            kets: columns(kets.iter().map(|k| k.vector())),
            bras: columns(bras.iter().map(|b| b.vector())),
        })
    }

    pub(crate) fn from_columns(kets: DMatrix<C64>, bras: DMatrix<C64>) -> Self {
        debug_assert_eq!(kets.shape(), bras.shape());
        Self { kets, bras }
    }

    /// Orthonormal basis `e_n` paired with itself.
    pub fn standard(dim: usize) -> Self {
        Self {
            kets: DMatrix::identity(dim, dim),
            bras: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.kets.nrows()
    }

    pub fn len(&self) -> usize {
        self.kets.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.kets.ncols() == 0
    }

    pub fn ket(&self, n: usize) -> StateVector {
        StateVector(self.kets.column(n).into_owned())
    }

    pub fn bra(&self, n: usize) -> DualStateVector {
        DualStateVector(self.bras.column(n).into_owned())
    }

    pub fn kets(&self) -> &DMatrix<C64> {
        &self.kets
    }

    pub fn bras(&self) -> &DMatrix<C64> {
        &self.bras
    }

    pub fn bra_vectors(&self) -> Vec<DualStateVector> {
        (0..self.len()).map(|n| self.bra(n)).collect()
    }

    /// `|<psi_{m,Theta}|psi_n> - delta_mn|_F`.
    pub fn gram_deviation(&self) -> f64 {
        let g = self.bras.adjoint() * &self.kets;
        (g - DMatrix::identity(self.len(), self.len())).norm()
    }

    /// `|sum_n |psi_n><psi_{n,Theta}| - I|_F`.
    pub fn completeness_deviation(&self) -> f64 {
        let s = &self.kets * self.bras.adjoint();
        (s - DMatrix::identity(self.dim(), self.dim())).norm()
    }

    /// The Dyson map that sends `|psi_n>` to `e^{-i E_n tau} e_n`:
    /// `Omega = diag(e^{-i E tau}) * B^dagger` with `B` the bra matrix.
    pub fn aligned_dyson_map(&self, energies: &[f64], tau: f64) -> Operator {
        let b = self.bras.adjoint();
        let m = DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| {
            C64::from_polar(1.0, -energies[i] * tau) * b[(i, j)]
        });
        Operator::from_matrix_unchecked(m)
    }
}

impl From<BiorthogonalEig> for BiorthogonalBasis {
    fn from(e: BiorthogonalEig) -> Self {
        Self {
            kets: columns(e.right_kets.iter().map(|k| k.vector())),
            bras: columns(e.left_bras.iter().map(|b| b.vector())),
        }
    }
}
