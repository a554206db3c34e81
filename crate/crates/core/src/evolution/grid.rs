use crate::error::{Error, Result};

/// Uniform time grid `t_k = t_start + k dt`, sampled every `sample_stride` steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    dt: f64,
    sample_stride: usize,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, dt: f64, sample_stride: usize) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite()) || t_end <= t_start {
            return Err(Error::InvalidGrid(format!(
                "need finite t_end > t_start, got [{t_start}, {t_end}]"
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidGrid(format!("dt must be positive, got {dt}")));
        }
        if sample_stride == 0 {
            return Err(Error::InvalidGrid(
                "sample_stride must be at least 1".into(),
            ));
        }
        let ratio = (t_end - t_start) / dt;
        let steps = ratio.round();
        // a few ulps of slack: decimal step sizes are not exactly representable
        if steps < 1.0 || (ratio - steps).abs() > 1e-12 * steps {
            return Err(Error::InvalidGrid(format!(
                "dt = {dt} does not divide the interval [{t_start}, {t_end}]"
            )));
        }
        Ok(Self {
            t_start,
            t_end,
            dt,
            sample_stride,
            steps: steps as usize,
        })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn sample_stride(&self) -> usize {
        self.sample_stride
    }

    /// Number of integration steps.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t_end
        } else {
            self.t_start + k as f64 * self.dt
        }
    }

    pub fn is_sample(&self, k: usize) -> bool {
        k.is_multiple_of(self.sample_stride) || k == self.steps
    }

    /// Step indices at which samples are recorded.
    pub fn sample_steps(&self) -> impl Iterator<Item = usize> + '_ {
        (0..=self.steps).filter(|&k| self.is_sample(k))
    }

    /// Same interval with a new step and stride.
    pub fn with_step(&self, dt: f64, sample_stride: usize) -> Result<Self> {
        Self::new(self.t_start, self.t_end, dt, sample_stride)
    }

    /// Same interval with every sample recorded.
    pub fn dense(&self) -> Self {
        Self {
            sample_stride: 1,
            ..*self
        }
    }
}
