//! Dense complex linear algebra: the operator and vector types every other
//! module is built on, plus the decompositions the metric machinery needs.

mod decomp;

pub use decomp::{
    adjoint, biorthogonal_eig, biorthogonal_eig_with, commutator, eigenvalues, hermitian_eig,
    hermitian_eig_with, inverse, inverse_with, is_positive_definite, positive_sqrt,
    positive_sqrt_with, BiorthogonalEig, HermitianEig,
};

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

/// Thresholds used by the decompositions.
///
/// Relative thresholds are scaled by the Frobenius norm of the input.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Largest accepted `|M - M^dagger|_F / |M|_F` for Hermitian input.
    pub hermitian_rel: f64,
    /// Eigenvalues at or below `positive_rel * |T|_F` count as non-positive.
    pub positive_rel: f64,
    /// Largest accepted condition number for inversion and eigenvector matrices.
    pub condition_max: f64,
    /// Eigenvalues closer than `degenerate_rel * |H|_F` count as degenerate.
    pub degenerate_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian_rel: 1e-10,
            positive_rel: 1e-12,
            condition_max: 1e10,
            degenerate_rel: 1e-8,
        }
    }
}

/// Dense square complex matrix.
#[derive(Clone, PartialEq)]
pub struct Operator(DMatrix<C64>);

impl Operator {
    /// Wraps a matrix, rejecting non-square or non-finite input.
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if !m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(m))
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<C64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self(m)
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: r.len(),
                });
            }
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Builds an operator from real row-major entries.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    pub fn real_diagonal(entries: &[f64]) -> Self {
        let e: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::diagonal(&e)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn conj(&self) -> Self {
        Self(self.0.conjugate())
    }

    pub fn scale(&self, c: C64) -> Self {
        Self(&self.0 * c)
    }

    pub fn scale_real(&self, x: f64) -> Self {
        Self(self.0.map(|z| z * x))
    }

    /// `|M - M^dagger|_F`.
    pub fn hermiticity_residual(&self) -> f64 {
        (&self.0 - self.0.adjoint()).norm()
    }

    /// `(M + M^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        StateVector(&self.0 * &v.0)
    }

    pub fn apply_dual(&self, v: &DualStateVector) -> DualStateVector {
        DualStateVector(&self.0 * &v.0)
    }

    /// Frobenius distance to another operator.
    pub fn distance(&self, other: &Operator) -> f64 {
        (&self.0 - &other.0).norm()
    }
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator{}", self.0)
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        Operator(self.0 + rhs.0)
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        Operator(self.0 - rhs.0)
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        Operator(self.0 * rhs.0)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator(-&self.0)
    }
}

macro_rules! column_vector {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name(pub(crate) DVector<C64>);

        impl $name {
            pub fn new(entries: Vec<C64>) -> Result<Self> {
                if entries.is_empty() {
                    return Err(Error::DimensionMismatch { expected: 1, found: 0 });
                }
                if !entries.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite);
                }
                Ok(Self(DVector::from_vec(entries)))
            }

            pub fn from_real(entries: &[f64]) -> Result<Self> {
                Self::new(entries.iter().map(|&x| C64::new(x, 0.0)).collect())
            }

            pub fn from_vector(v: DVector<C64>) -> Self {
                Self(v)
            }

            /// Unit vector along axis `k`.
            pub fn basis(dim: usize, k: usize) -> Self {
                let mut v = DVector::zeros(dim);
                v[k] = C64::new(1.0, 0.0);
                Self(v)
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn vector(&self) -> &DVector<C64> {
                &self.0
            }

            pub fn entries(&self) -> &[C64] {
                self.0.as_slice()
            }

            pub fn norm(&self) -> f64 {
                self.0.norm()
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
            }

            pub fn scale(&self, c: C64) -> Self {
                Self(&self.0 * c)
            }
        }
    };
}

column_vector!(
    /// A ket `|psi>` in the computational space.
    StateVector
);

column_vector!(
    /// A metric-dressed ket `|psi_Theta> = Theta |psi>`, used as the bra partner
    /// of a [`StateVector`].
    DualStateVector
);

impl DualStateVector {
    /// `<self|ket>`, antilinear in the bra.
    pub fn overlap(&self, ket: &StateVector) -> C64 {
        self.0.dotc(&ket.0)
    }
}

/// Checks that two dimensions agree.
pub(crate) fn ensure_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Stacks vectors as the columns of a matrix.
pub(crate) fn columns<'a>(vs: impl IntoIterator<Item = &'a DVector<C64>>) -> DMatrix<C64> {
    let cols: Vec<&DVector<C64>> = vs.into_iter().collect();
    let n = cols.first().map_or(0, |c| c.len());
    DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i])
}
