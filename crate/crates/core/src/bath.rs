//! Lorentzian bath at zero temperature.
//!
//! The bath enters the reduced dynamics only through its correlation
//! function, so a bath is fully described by three numbers: the coupling
//! strength Γ, the memory rate γ (inverse correlation time) and the central
//! frequency shift Ω.

use std::fmt;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Lorentzian spectral parameters.
///
/// `J(ω) = Γγ² / (2π((ω−Ω)² + γ²))`, correlation
/// `α(t,s) = (Γγ/2) exp(−γ|t−s| − iΩ(t−s))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSpec<T> {
    /// Γ
    pub gamma_cap: T,
    /// γ
    pub gamma: T,
    /// Ω
    pub omega_shift: T,
}

/// Selects one of the three bath parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BathParameter {
    /// Γ
    GammaCap,
    /// γ
    Gamma,
    /// Ω
    OmegaShift,
}

impl BathParameter {
    pub fn name(self) -> &'static str {
        match self {
            BathParameter::GammaCap => "gamma_cap",
            BathParameter::Gamma => "gamma",
            BathParameter::OmegaShift => "omega_shift",
        }
    }

    /// Whether admissible values are restricted to `> 0`.
    pub fn positive(self) -> bool {
        !matches!(self, BathParameter::OmegaShift)
    }
}

impl fmt::Display for BathParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl<T: Real> BathSpec<T> {
    pub fn new(gamma_cap: T, gamma: T, omega_shift: T) -> Result<Self> {
        let spec = BathSpec {
            gamma_cap,
            gamma,
            omega_shift,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_cap.is_finite() && self.gamma_cap > T::zero()) {
            return Err(Error::InvalidInput(format!(
                "coupling strength must be positive, got {}",
                self.gamma_cap
            )));
        }
        if !(self.gamma.is_finite() && self.gamma > T::zero()) {
            return Err(Error::InvalidInput(format!(
                "memory rate must be positive, got {}",
                self.gamma
            )));
        }
        if !self.omega_shift.is_finite() {
            return Err(Error::InvalidInput("central shift must be finite".into()));
        }
        Ok(())
    }

    pub fn get(&self, p: BathParameter) -> T {
        match p {
            BathParameter::GammaCap => self.gamma_cap,
            BathParameter::Gamma => self.gamma,
            BathParameter::OmegaShift => self.omega_shift,
        }
    }

    /// Copy with one parameter replaced.
    pub fn with(&self, p: BathParameter, value: T) -> Self {
        let mut out = *self;
        match p {
            BathParameter::GammaCap => out.gamma_cap = value,
            BathParameter::Gamma => out.gamma = value,
            BathParameter::OmegaShift => out.omega_shift = value,
        }
        out
    }

    /// Copy with one parameter moved by `dx`.
    pub fn shifted(&self, p: BathParameter, dx: T) -> Self {
        self.with(p, self.get(p) + dx)
    }

    /// `J(ω)`; strictly positive with its maximum `Γ/2π` at `ω = Ω`.
    pub fn spectral_density(&self, omega: T) -> T {
        let detuning = omega - self.omega_shift;
        let g2 = self.gamma * self.gamma;
        self.gamma_cap * g2 / (T::lit(2.0) * T::PI() * (detuning * detuning + g2))
    }

    /// `α(t,s)`. Conjugate-symmetric: `α(t,s) = conj(α(s,t))`.
    pub fn correlation(&self, t: T, s: T) -> Complex<T> {
        let tau = t - s;
        let amplitude = self.equal_time_correlation() * (-self.gamma * tau.abs()).exp();
        Complex::from_polar(amplitude, -self.omega_shift * tau)
    }

    /// `α(t,t) = Γγ/2`.
    pub fn equal_time_correlation(&self) -> T {
        self.gamma_cap * self.gamma * T::lit(0.5)
    }

    /// `γ + iΩ`, the decay constant of `α(t,s)` in `t` for `t > s`.
    pub fn kernel_rate(&self) -> Complex<T> {
        Complex::new(self.gamma, self.omega_shift)
    }
}
