use std::sync::Arc;

use nalgebra::DMatrix;

use super::GeneratorFunction;
use crate::linalg::{Operator, C64};

/// Turns operators sampled at `t0 + k dt` into a generator.
///
/// Queries that land on a node (to within 1e-9 of a step) return the stored
/// value exactly; anything in between uses four-point Lagrange interpolation,
/// which keeps the RK4 midpoint stages fourth-order accurate. Queries outside
/// the sampled range are clamped onto the end stencils.
pub fn interpolated_generator(t0: f64, dt: f64, samples: Vec<Operator>) -> GeneratorFunction {
    assert!(!samples.is_empty(), "no samples to interpolate");
    let dim = samples[0].dim();
    let samples = Arc::new(samples);
    GeneratorFunction::new(dim, move |t| {
        let n = samples.len();
        let s = (t - t0) / dt;
        let nearest = s.round();
        if (s - nearest).abs() < 1e-9 && nearest >= 0.0 && (nearest as usize) < n {
            return samples[nearest as usize].clone();
        }
        if n < 4 {
            let j = (s.floor().max(0.0) as usize).min(n - 1);
            return samples[j].clone();
        }
        let base = (s.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let mut acc = DMatrix::<C64>::zeros(dim, dim);
        for j in 0..4 {
            let xj = (base + j) as f64;
            let mut w = 1.0;
            for m in 0..4 {
                if m != j {
                    let xm = (base + m) as f64;
                    w *= (s - xm) / (xj - xm);
                }
            }
            acc += samples[base + j].matrix() * C64::new(w, 0.0);
        }
        Operator::from_matrix_unchecked(acc)
    })
}
