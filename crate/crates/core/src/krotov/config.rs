use serde::{Deserialize, Serialize};

use crate::dynamics::ControlField;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Update shape `S(t) ∈ [0, 1]` weighting where the control may change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UpdateShape {
    /// Half-cosine ramps over the first and last `ramp_fraction` of the
    /// window, 1 in between; pins the control to zero at both ends.
    FlatTop { ramp_fraction: f64 },
    /// `S ≡ value` everywhere.
    Constant { value: f64 },
}

impl Default for UpdateShape {
    fn default() -> Self {
        UpdateShape::FlatTop {
            ramp_fraction: 0.05,
        }
    }
}

impl UpdateShape {
    /// Continuous shape at time `t` in `[0, final_time]`.
    pub fn value<T: Real>(&self, t: T, final_time: T) -> T {
        match *self {
            UpdateShape::Constant { value } => T::lit(value),
            UpdateShape::FlatTop { ramp_fraction } => {
                let ramp = T::lit(ramp_fraction) * final_time;
                if ramp <= T::zero() {
                    return T::one();
                }
                let edge = t.min(final_time - t);
                if edge <= T::zero() {
                    T::zero()
                } else if edge >= ramp {
                    T::one()
                } else {
                    let s = (T::FRAC_PI_2() * edge / ramp).sin();
                    s * s
                }
            }
        }
    }

    /// Per-interval weights: the smaller of the shape at the two interval
    /// edges, so a pinned shape gives exactly zero on the first and last
    /// intervals.
    pub fn samples<T: Real>(&self, final_time: T, sample_count: usize) -> Vec<T> {
        let dt = final_time / T::from_usize_lossy(sample_count);
        (0..sample_count)
            .map(|k| {
                let a = self.value(T::from_usize_lossy(k) * dt, final_time);
                let b = self.value(T::from_usize_lossy(k + 1) * dt, final_time);
                a.min(b)
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            UpdateShape::FlatTop { ramp_fraction } if !(0.0..=0.5).contains(&ramp_fraction) => Err(
                Error::InvalidInput("ramp fraction must lie in [0, 0.5]".into()),
            ),
            UpdateShape::Constant { value } if !(0.0..=1.0).contains(&value) => {
                Err(Error::InvalidInput("constant shape must lie in [0, 1]".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Default guard on the smallest final-state eigenvalue. The fitted master
/// equation is not completely positive under strong drive, and the QFI of a
/// member whose eigenvalue approaches zero grows without bound.
pub const DEFAULT_EIGENVALUE_MARGIN: f64 = 0.05;

/// First-order Krotov settings.
#[derive(Debug, Clone, PartialEq)]
pub struct KrotovConfig<T> {
    /// Inverse step size λ_a.
    pub lambda_a: T,
    pub max_iterations: usize,
    /// Stop once an accepted iteration changes J by less than this.
    pub tolerance: T,
    pub shape: UpdateShape,
    /// Largest accepted increase of J per iteration.
    pub monotonic_slack: T,
    /// λ_a doublings allowed per iteration before giving up.
    pub max_retries: usize,
    /// Recompute `Ō` (and with it `𝓛₀`) under every new control.
    pub refresh_obar: bool,
    /// Training halts before any update that leaves a member's final state
    /// with an eigenvalue below this margin. `None` disables the guard.
    pub eigenvalue_margin: Option<T>,
    /// Starting control; zero when absent.
    pub initial_guess: Option<ControlField<T>>,
}

impl<T: Real> Default for KrotovConfig<T> {
    fn default() -> Self {
        KrotovConfig {
            lambda_a: T::lit(100.0),
            max_iterations: 200,
            tolerance: T::lit(1e-7),
            shape: UpdateShape::default(),
            monotonic_slack: T::lit(1e-8),
            max_retries: 10,
            refresh_obar: true,
            eigenvalue_margin: Some(T::lit(DEFAULT_EIGENVALUE_MARGIN)),
            initial_guess: None,
        }
    }
}

impl<T: Real> KrotovConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_a > T::zero() && self.lambda_a.is_finite()) {
            return Err(Error::InvalidInput("lambda_a must be positive".into()));
        }
        if !(self.monotonic_slack >= T::zero()) || !(self.tolerance >= T::zero()) {
            return Err(Error::InvalidInput(
                "slack and tolerance must be non-negative".into(),
            ));
        }
        if let Some(m) = self.eigenvalue_margin {
            if !(m >= T::zero() && m < T::lit(0.5)) {
                return Err(Error::InvalidInput(
                    "eigenvalue margin must lie in [0, 0.5)".into(),
                ));
            }
        }
        self.shape.validate()
    }
}
