use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::Operator;

type OperatorFn = Arc<dyn Fn(f64) -> Operator + Send + Sync>;

/// Time-parameterized operator source `t -> A(t)`, optionally with an analytic
/// derivative.
#[derive(Clone)]
pub struct GeneratorFunction {
    dim: usize,
    evaluator: OperatorFn,
    derivative: Option<OperatorFn>,
}

impl GeneratorFunction {
    pub fn new(dim: usize, f: impl Fn(f64) -> Operator + Send + Sync + 'static) -> Self {
        Self {
            dim,
            evaluator: Arc::new(f),
            derivative: None,
        }
    }

    pub fn with_derivative(mut self, df: impl Fn(f64) -> Operator + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(df));
        self
    }

    pub fn constant(op: Operator) -> Self {
        let dim = op.dim();
        Self::new(dim, move |_| op.clone()).with_derivative(move |_| Operator::zeros(dim))
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(Operator::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Evaluates and validates `A(t)`.
    pub fn eval(&self, t: f64) -> Result<Operator> {
        let op = (self.evaluator)(t);
        if op.dim() != self.dim {
            return Err(Error::InvalidGenerator {
                t,
                reason: format!("dimension {} instead of {}", op.dim(), self.dim),
            });
        }
        if !op.is_finite() {
            return Err(Error::InvalidGenerator {
                t,
                reason: "non-finite entries".into(),
            });
        }
        Ok(op)
    }

    pub fn has_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn eval_derivative(&self, t: f64) -> Option<Operator> {
        self.derivative.as_ref().map(|d| d(t))
    }

    /// `t -> A(t)^dagger`.
    pub fn adjoint(&self) -> Self {
        let f = self.evaluator.clone();
        let d = self.derivative.clone();
        Self {
            dim: self.dim,
            evaluator: Arc::new(move |t| f(t).adjoint()),
            derivative: d.map(|d| -> OperatorFn { Arc::new(move |t| d(t).adjoint()) }),
        }
    }

    /// `t -> -A(t)`.
    pub fn negated(&self) -> Self {
        let f = self.evaluator.clone();
        let d = self.derivative.clone();
        Self {
            dim: self.dim,
            evaluator: Arc::new(move |t| -&f(t)),
            derivative: d.map(|d| -> OperatorFn { Arc::new(move |t| -&d(t)) }),
        }
    }
}

impl fmt::Debug for GeneratorFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneratorFunction")
            .field("dim", &self.dim)
            .field("analytic_derivative", &self.derivative.is_some())
            .finish()
    }
}
