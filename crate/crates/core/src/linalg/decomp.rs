use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};

use super::{ensure_dim, DualStateVector, Operator, StateVector, Tolerances, C64};
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 10_000;

/// Eigendecomposition of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Unitary; column `k` is the eigenvector of `eigenvalues[k]`.
    pub basis: Operator,
}

impl HermitianEig {
    /// `basis * diag(f(eigenvalues)) * basis^dagger`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Operator {
        let p = self.basis.matrix();
        let d = DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&x| C64::new(f(x), 0.0)),
        );
        let scaled = DMatrix::from_fn(p.nrows(), p.ncols(), |i, j| p[(i, j)] * d[j]);
        Operator::from_matrix_unchecked(scaled * p.adjoint())
    }

    pub fn reconstruct(&self) -> Operator {
        self.map_spectrum(|x| x)
    }
}

/// Right eigenvectors of a diagonalizable operator with their biorthonormal
/// left partners: `<left_m|right_n> = delta_mn`.
#[derive(Clone, Debug)]
pub struct BiorthogonalEig {
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<C64>,
    pub right_kets: Vec<StateVector>,
    pub left_bras: Vec<DualStateVector>,
}

pub fn adjoint(m: &Operator) -> Operator {
    m.adjoint()
}

/// `AB - BA`.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    ensure_dim(a.dim(), b.dim())?;
    let (a, b) = (a.matrix(), b.matrix());
    Ok(Operator::from_matrix_unchecked(a * b - b * a))
}

pub fn hermitian_eig(m: &Operator) -> Result<HermitianEig> {
    hermitian_eig_with(m, &Tolerances::default())
}

pub fn hermitian_eig_with(m: &Operator, tol: &Tolerances) -> Result<HermitianEig> {
    let residual = m.hermiticity_residual();
    let threshold = tol.hermitian_rel * m.norm();
    if residual > threshold {
        return Err(Error::NonHermitianInput {
            residual,
            tolerance: threshold,
        });
    }
    let h = m.hermitian_part().into_matrix();
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, MAX_ITERATIONS)
        .ok_or(Error::ConvergenceFailure)?;

    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(Ordering::Equal)
    });
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut basis = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let v = fix_phase(eig.eigenvectors.column(src).into_owned());
        basis.set_column(dst, &v);
    }
    Ok(HermitianEig {
        eigenvalues,
        basis: Operator::from_matrix_unchecked(basis),
    })
}

/// Rotates a vector so that its largest-magnitude component is real and
/// positive. The first component within a relative 1e-12 of the maximum wins.
pub(crate) fn fix_phase(mut v: DVector<C64>) -> DVector<C64> {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return v;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-12))
        .unwrap_or(0);
    let phase = v[pivot].conj() / v[pivot].norm();
    v *= phase;
    v
}

pub fn positive_sqrt(t: &Operator) -> Result<Operator> {
    positive_sqrt_with(t, &Tolerances::default())
}

/// Unique Hermitian positive-definite square root.
pub fn positive_sqrt_with(t: &Operator, tol: &Tolerances) -> Result<Operator> {
    let eig = hermitian_eig_with(t, tol)?;
    let threshold = tol.positive_rel * t.norm();
    let min = eig.eigenvalues.first().copied().unwrap_or(0.0);
    if min <= threshold {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: min,
            threshold,
        });
    }
    Ok(eig.map_spectrum(f64::sqrt).hermitian_part())
}

/// Positivity test by Cholesky factorization, independent of the eigensolver.
pub fn is_positive_definite(t: &Operator) -> bool {
    if t.hermiticity_residual() > 1e-12 * t.norm() {
        return false;
    }
    let a = t.hermitian_part().into_matrix();
    let n = a.nrows();
    let mut l = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        let mut pivot = a[(j, j)].re;
        for k in 0..j {
            pivot -= l[(j, k)].norm_sqr();
        }
        if pivot.is_nan() || pivot <= 0.0 {
            return false;
        }
        let d = pivot.sqrt();
        l[(j, j)] = C64::new(d, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    true
}

pub(crate) fn condition_number(m: &DMatrix<C64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn inverse(m: &Operator) -> Result<Operator> {
    inverse_with(m, &Tolerances::default())
}

pub fn inverse_with(m: &Operator, tol: &Tolerances) -> Result<Operator> {
    let condition = condition_number(m.matrix());
    if condition.is_nan() || condition > tol.condition_max {
        return Err(Error::SingularMatrix { condition });
    }
    m.matrix()
        .clone()
        .lu()
        .try_inverse()
        .map(Operator::from_matrix_unchecked)
        .ok_or(Error::SingularMatrix { condition })
}

fn complex_order(a: &C64, b: &C64) -> Ordering {
    a.re.partial_cmp(&b.re)
        .unwrap_or(Ordering::Equal)
        .then(a.im.partial_cmp(&b.im).unwrap_or(Ordering::Equal))
}

/// Eigenvalues of a general operator, sorted by real then imaginary part.
pub fn eigenvalues(m: &Operator) -> Result<Vec<C64>> {
    let schur = Schur::try_new(m.matrix().clone(), f64::EPSILON, MAX_ITERATIONS)
        .ok_or(Error::ConvergenceFailure)?;
    let (_, t) = schur.unpack();
    let mut ev: Vec<C64> = (0..t.nrows()).map(|k| t[(k, k)]).collect();
    ev.sort_by(complex_order);
    Ok(ev)
}

pub fn biorthogonal_eig(h: &Operator) -> Result<BiorthogonalEig> {
    biorthogonal_eig_with(h, &Tolerances::default())
}

/// Right eigenvectors come from back substitution on the complex Schur form;
/// the left family is the conjugate transpose of the inverse eigenvector matrix,
/// which makes the pair biorthonormal by construction.
pub fn biorthogonal_eig_with(h: &Operator, tol: &Tolerances) -> Result<BiorthogonalEig> {
    let n = h.dim();
    let schur = Schur::try_new(h.matrix().clone(), f64::EPSILON, MAX_ITERATIONS)
        .ok_or(Error::ConvergenceFailure)?;
    let (q, t) = schur.unpack();
    let lambda: Vec<C64> = (0..n).map(|k| t[(k, k)]).collect();

    let gap_threshold = tol.degenerate_rel * h.norm();
    for a in 0..n {
        for b in (a + 1)..n {
            if (lambda[a] - lambda[b]).norm() < gap_threshold {
                return Err(Error::DegenerateSpectrum { gap: gap_threshold });
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| complex_order(&lambda[a], &lambda[b]));

    let mut right = DMatrix::<C64>::zeros(n, n);
    for (dst, &k) in order.iter().enumerate() {
        let mut x = DVector::<C64>::zeros(n);
        x[k] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut acc = C64::new(0.0, 0.0);
            for j in (i + 1)..=k {
                acc += t[(i, j)] * x[j];
            }
            x[i] = -acc / (t[(i, i)] - lambda[k]);
        }
        let mut v = &q * x;
        let norm = v.norm();
        v /= C64::new(norm, 0.0);
        right.set_column(dst, &fix_phase(v));
    }

    let condition = condition_number(&right);
    if condition.is_nan() || condition > tol.condition_max {
        return Err(Error::DefectiveMatrix { condition });
    }
    let left = right
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::DefectiveMatrix { condition })?
        .adjoint();

    Ok(BiorthogonalEig {
        eigenvalues: order.iter().map(|&k| lambda[k]).collect(),
        right_kets: (0..n)
            .map(|k| StateVector(right.column(k).into_owned()))
            .collect(),
        left_bras: (0..n)
            .map(|k| DualStateVector(left.column(k).into_owned()))
            .collect(),
    })
}
