//! Fixed-step classic Runge-Kutta driver for matrix-valued flows.

use nalgebra::DMatrix;

use super::TimeGrid;
use crate::error::{Error, Result};
use crate::linalg::C64;

pub(crate) trait OdeState: Clone {
    /// `self + h * k`
    fn axpy(&self, h: f64, k: &Self) -> Self;
    /// `self + h/6 (k1 + 2 k2 + 2 k3 + k4)`
    fn combine(&self, h: f64, k1: &Self, k2: &Self, k3: &Self, k4: &Self) -> Self;
    fn is_finite(&self) -> bool;
}

fn finite(m: &DMatrix<C64>) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

impl OdeState for DMatrix<C64> {
    fn axpy(&self, h: f64, k: &Self) -> Self {
        let mut out = self.clone();
        out.zip_apply(k, |a, b| *a += b * h);
        out
    }

    fn combine(&self, h: f64, k1: &Self, k2: &Self, k3: &Self, k4: &Self) -> Self {
        let w = h / 6.0;
        DMatrix::from_fn(self.nrows(), self.ncols(), |i, j| {
            self[(i, j)] + (k1[(i, j)] + (k2[(i, j)] + k3[(i, j)]) * 2.0 + k4[(i, j)]) * w
        })
    }

    fn is_finite(&self) -> bool {
        finite(self)
    }
}

impl OdeState for (DMatrix<C64>, DMatrix<C64>) {
    fn axpy(&self, h: f64, k: &Self) -> Self {
        (self.0.axpy(h, &k.0), self.1.axpy(h, &k.1))
    }

    fn combine(&self, h: f64, k1: &Self, k2: &Self, k3: &Self, k4: &Self) -> Self {
        (
            self.0.combine(h, &k1.0, &k2.0, &k3.0, &k4.0),
            self.1.combine(h, &k1.1, &k2.1, &k3.1, &k4.1),
        )
    }

    fn is_finite(&self) -> bool {
        finite(&self.0) && finite(&self.1)
    }
}

/// Integrates `y' = rhs(coeffs(t), y)` over `grid`.
///
/// `coeffs` is evaluated once per distinct stage time: the two midpoint stages
/// share one evaluation and the end-of-step value is reused as the next start.
/// `observe` sees every step `k = 0..=steps` and may project the state in place.
pub(crate) fn integrate<S, C>(
    grid: &TimeGrid,
    y0: S,
    mut coeffs: impl FnMut(f64) -> Result<C>,
    rhs: impl Fn(&C, &S) -> S,
    mut observe: impl FnMut(usize, f64, &mut S) -> Result<()>,
) -> Result<S>
where
    S: OdeState,
{
    let h = grid.dt();
    let mut y = y0;
    let mut t = grid.time(0);
    observe(0, t, &mut y)?;
    let mut c_start = coeffs(t)?;
    for k in 1..=grid.steps() {
        let t_next = grid.time(k);
        let c_mid = coeffs(t + 0.5 * h)?;
        let c_end = coeffs(t_next)?;
        let k1 = rhs(&c_start, &y);
        let k2 = rhs(&c_mid, &y.axpy(0.5 * h, &k1));
        let k3 = rhs(&c_mid, &y.axpy(0.5 * h, &k2));
        let k4 = rhs(&c_end, &y.axpy(h, &k3));
        y = y.combine(h, &k1, &k2, &k3, &k4);
        if !y.is_finite() {
            return Err(Error::NonFiniteState { t: t_next });
        }
        t = t_next;
        c_start = c_end;
        observe(k, t, &mut y)?;
    }
    Ok(y)
}
