//! Matrix entries written as real expressions of `t`.

use std::sync::Arc;

use meval::{Context, Expr};
use nalgebra::DMatrix;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::evolution::GeneratorFunction;
use crate::linalg::{Operator, StateVector, C64};

thread_local! {
    static BUILTINS: Context<'static> = Context::new();
}

/// A real number or an expression such as `"0.5 + 0.3*sin(2*t)"`.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Expr(String),
}

impl Default for Scalar {
    fn default() -> Self {
        Self::Number(0.0)
    }
}

/// A matrix or vector entry: a real scalar or `{ re = .., im = .. }`.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Entry {
    Real(Scalar),
    Complex {
        #[serde(default)]
        re: Scalar,
        #[serde(default)]
        im: Scalar,
    },
}

pub type MatrixSpec = Vec<Vec<Entry>>;
pub type VectorSpec = Vec<Entry>;

#[derive(Clone, Debug)]
enum Compiled {
    Constant(f64),
    Expr(Expr),
}

impl Compiled {
    fn new(scalar: &Scalar, path: &str) -> Result<Self> {
        match scalar {
            Scalar::Number(x) if x.is_finite() => Ok(Self::Constant(*x)),
            Scalar::Number(_) => Err(Error::config(path, "entry is not finite")),
            Scalar::Expr(text) => {
                let expr: Expr = text
                    .parse()
                    .map_err(|e| Error::config(path, format!("cannot parse `{text}`: {e}")))?;
                let compiled = Self::Expr(expr);
                compiled
                    .eval(0.0)
                    .map_err(|e| Error::config(path, format!("cannot evaluate `{text}`: {e}")))?;
                Ok(compiled)
            }
        }
    }

    fn eval(&self, t: f64) -> std::result::Result<f64, meval::Error> {
        match self {
            Self::Constant(x) => Ok(*x),
            Self::Expr(e) => BUILTINS.with(|ctx| e.eval_with_context((("t", t), ctx))),
        }
    }
}

#[derive(Clone, Debug)]
struct CompiledEntry {
    re: Compiled,
    im: Compiled,
}

impl CompiledEntry {
    fn new(entry: &Entry, path: &str) -> Result<Self> {
        let (re, im) = match entry {
            Entry::Real(s) => (s.clone(), Scalar::Number(0.0)),
            Entry::Complex { re, im } => (re.clone(), im.clone()),
        };
        Ok(Self {
            re: Compiled::new(&re, &format!("{path}.re"))?,
            im: Compiled::new(&im, &format!("{path}.im"))?,
        })
    }

    /// Non-finite and failed evaluations become NaN, which the generator
    /// machinery then rejects with the time attached.
    fn eval(&self, t: f64) -> C64 {
        let part = |c: &Compiled| c.eval(t).unwrap_or(f64::NAN);
        C64::new(part(&self.re), part(&self.im))
    }
}

/// A square matrix of compiled entries.
#[derive(Clone, Debug)]
pub struct MatrixExpr {
    dim: usize,
    entries: Arc<Vec<CompiledEntry>>,
}

impl MatrixExpr {
    /// `path` names the config field for diagnostics, e.g. `model.generator`.
    pub fn compile(spec: &MatrixSpec, path: &str) -> Result<Self> {
        let dim = spec.len();
        if dim == 0 {
            return Err(Error::config(path, "matrix is empty"));
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for (r, row) in spec.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::config(
                    format!("{path}[{r}]"),
                    format!("row has {} entries, expected {dim}", row.len()),
                ));
            }
            for (c, entry) in row.iter().enumerate() {
                entries.push(CompiledEntry::new(entry, &format!("{path}[{r}][{c}]"))?);
            }
        }
        Ok(Self {
            dim,
            entries: Arc::new(entries),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, t: f64) -> Operator {
        let dim = self.dim;
        Operator::from_matrix_unchecked(DMatrix::from_fn(dim, dim, |r, c| {
            self.entries[r * dim + c].eval(t)
        }))
    }

    pub fn into_generator(self) -> GeneratorFunction {
        GeneratorFunction::new(self.dim, move |t| self.eval(t))
    }
}

/// Evaluates a vector spec at `t = 0`.
pub fn constant_vector(spec: &VectorSpec, path: &str) -> Result<StateVector> {
    if spec.is_empty() {
        return Err(Error::config(path, "vector is empty"));
    }
    let entries = spec
        .iter()
        .enumerate()
        .map(|(i, e)| CompiledEntry::new(e, &format!("{path}[{i}]")).map(|c| c.eval(0.0)))
        .collect::<Result<Vec<_>>>()?;
    StateVector::new(entries).map_err(|_| Error::config(path, "vector has non-finite entries"))
}

/// Evaluates a matrix spec at `t = 0`.
pub fn constant_matrix(spec: &MatrixSpec, path: &str) -> Result<Operator> {
    let m = MatrixExpr::compile(spec, path)?.eval(0.0);
    if !m.is_finite() {
        return Err(Error::config(path, "matrix has non-finite entries"));
    }
    Ok(m)
}
