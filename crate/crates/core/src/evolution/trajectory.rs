use indexmap::IndexMap;

use super::TimeGrid;

/// Named per-sample diagnostics, each column aligned with the samples of the
/// owning trajectory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResidualLog {
    columns: IndexMap<String, Vec<f64>>,
}

impl ResidualLog {
    pub fn record(&mut self, name: &str, value: f64) {
        self.columns
            .entry(name.to_string())
            .or_default()
            .push(value);
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.get(name).map(Vec::as_slice)
    }

    /// Largest entry of a column; NaN propagates.
    pub fn max(&self, name: &str) -> Option<f64> {
        self.column(name).map(|c| {
            c.iter().copied().fold(0.0_f64, |acc, x| {
                if x.is_nan() || acc.is_nan() {
                    f64::NAN
                } else {
                    acc.max(x)
                }
            })
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.columns.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

/// Time-indexed samples plus their invariant residuals.
#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub grid: TimeGrid,
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub samples: Vec<T>,
    pub residuals: ResidualLog,
}

impl<T> Trajectory<T> {
    pub fn new(grid: TimeGrid) -> Self {
        Self {
            grid,
            steps: Vec::new(),
            times: Vec::new(),
            samples: Vec::new(),
            residuals: ResidualLog::default(),
        }
    }

    pub fn push(&mut self, step: usize, t: f64, sample: T) {
        self.steps.push(step);
        self.times.push(t);
        self.samples.push(sample);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&T> {
        self.samples.last()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &T)> {
        self.times.iter().copied().zip(self.samples.iter())
    }
}
