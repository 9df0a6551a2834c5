use crate::error::{Error, Result};
use crate::scalar::Real;

/// Piecewise-constant control `c(t)` on a uniform grid over `[0, T_f]`.
///
/// Sample `k` applies on `[k·dt, (k+1)·dt)` with `dt = T_f / N_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlField<T> {
    final_time: T,
    samples: Vec<T>,
}

impl<T: Real> ControlField<T> {
    pub fn new(final_time: T, samples: Vec<T>) -> Result<Self> {
        if !(final_time.is_finite() && final_time > T::zero()) {
            return Err(Error::InvalidInput(format!(
                "final time must be positive, got {final_time}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::InvalidInput("control needs at least one sample".into()));
        }
        if let Some(k) = samples.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!("control sample {k} is not finite")));
        }
        Ok(ControlField {
            final_time,
            samples,
        })
    }

    pub fn zeros(final_time: T, sample_count: usize) -> Result<Self> {
        Self::new(final_time, vec![T::zero(); sample_count])
    }

    /// Samples `f` at the interval midpoints.
    pub fn from_fn(final_time: T, sample_count: usize, f: impl Fn(T) -> T) -> Result<Self> {
        let dt = final_time / T::from_usize_lossy(sample_count.max(1));
        let samples = (0..sample_count)
            .map(|k| f((T::from_usize_lossy(k) + T::lit(0.5)) * dt))
            .collect();
        Self::new(final_time, samples)
    }

    pub fn final_time(&self) -> T {
        self.final_time
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> T {
        self.final_time / T::from_usize_lossy(self.samples.len())
    }

    /// Left edge of interval `k`.
    pub fn time(&self, k: usize) -> T {
        T::from_usize_lossy(k) * self.dt()
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn sample(&self, k: usize) -> T {
        self.samples[k]
    }

    pub(crate) fn samples_mut(&mut self) -> &mut [T] {
        &mut self.samples
    }

    /// Value in force at time `t`; the last sample also covers `t = T_f`.
    pub fn value_at(&self, t: T) -> T {
        let k = (t / self.dt()).floor().to_usize().unwrap_or(0);
        self.samples[k.min(self.samples.len() - 1)]
    }

    /// Euclidean norm weighted by `dt`, i.e. the L² norm of `c(t)`.
    pub fn l2_norm(&self) -> T {
        (self.samples.iter().map(|&c| c * c).sum::<T>() * self.dt()).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.samples.iter().fold(T::zero(), |m, c| m.max(c.abs()))
    }
}
