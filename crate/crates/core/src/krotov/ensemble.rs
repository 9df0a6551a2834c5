use crate::bath::{BathParameter, BathSpec};
use crate::dynamics::SystemSpec;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default forward-difference step for parameter derivatives.
pub const DEFAULT_DX: f64 = 1e-6;

/// Training ensemble: bath-parameter points sharing one control field.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec<T> {
    pub parameter: BathParameter,
    /// Strictly increasing training values of `parameter`.
    pub values: Vec<T>,
    /// Values of the two non-target parameters (the target entry is ignored).
    pub base: BathSpec<T>,
    pub dx: T,
    pub system: SystemSpec<T>,
    pub final_time: T,
    pub sample_count: usize,
}

/// `n_low` evenly spaced points on `[a, b]` followed by `n_high` evenly
/// spaced points on `(b, c]`.
pub fn split_range<T: Real>(a: T, b: T, c: T, n_low: usize, n_high: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(n_low + n_high);
    if n_low == 1 {
        out.push(a);
    } else {
        let step = (b - a) / T::from_usize_lossy(n_low.saturating_sub(1).max(1));
        out.extend((0..n_low).map(|k| a + step * T::from_usize_lossy(k)));
    }
    let step = (c - b) / T::from_usize_lossy(n_high.max(1));
    out.extend((1..=n_high).map(|k| b + step * T::from_usize_lossy(k)));
    out
}

impl<T: Real> EnsembleSpec<T> {
    /// 60 memory-rate points (20 on [0.4, 0.7], 40 on (0.7, 1.2]) with
    /// Γ = 1, Ω = 0, ω = 1, `T_f = 8` and 1600 control intervals.
    pub fn headline() -> Self {
        EnsembleSpec {
            parameter: BathParameter::Gamma,
            values: split_range(T::lit(0.4), T::lit(0.7), T::lit(1.2), 20, 40),
            base: BathSpec {
                gamma_cap: T::one(),
                gamma: T::lit(0.8),
                omega_shift: T::zero(),
            },
            dx: T::lit(DEFAULT_DX),
            system: SystemSpec::dephasing(T::one()),
            final_time: T::lit(8.0),
            sample_count: 1600,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same context with a different set of training values.
    pub fn with_values(&self, values: Vec<T>) -> Self {
        EnsembleSpec {
            values,
            ..self.clone()
        }
    }

    /// Bath at parameter value `theta`, and at `theta + dx`.
    pub fn bath_pair(&self, theta: T) -> (BathSpec<T>, BathSpec<T>) {
        let lo = self.base.with(self.parameter, theta);
        (lo, lo.shifted(self.parameter, self.dx))
    }

    pub fn member_baths(&self, j: usize) -> (BathSpec<T>, BathSpec<T>) {
        self.bath_pair(self.values[j])
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidInput("ensemble has no training values".into()));
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput(
                "training values must be strictly increasing".into(),
            ));
        }
        if !(self.dx > T::zero()) {
            return Err(Error::InvalidInput("dx must be positive".into()));
        }
        if !(self.final_time > T::zero()) || self.sample_count == 0 {
            return Err(Error::InvalidInput("time grid must be non-empty".into()));
        }
        self.system.validate()?;
        for j in 0..self.len() {
            let (lo, hi) = self.member_baths(j);
            lo.validate()?;
            hi.validate()?;
        }
        Ok(())
    }
}
