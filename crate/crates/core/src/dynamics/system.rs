use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::scalar::Real;

/// Initial pure states available from configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// `(|0⟩ + |1⟩)/√2`
    #[default]
    Plus,
    /// `|0⟩`
    Zero,
    /// `|1⟩`
    One,
}

impl InitialState {
    pub fn density<T: Real>(self) -> Mat2<T> {
        match self {
            InitialState::Plus => Mat2::density_from_bloch(T::one(), T::zero(), T::zero()),
            InitialState::Zero => Mat2::diag(T::one(), T::zero()),
            InitialState::One => Mat2::diag(T::zero(), T::one()),
        }
    }
}

/// Driven qubit coupled to the bath: `H_s(t) = ω H₀ + c(t) H_c`, coupling
/// operator `L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemSpec<T> {
    pub level_splitting: T,
    pub drift: Mat2<T>,
    pub control: Mat2<T>,
    pub coupling: Mat2<T>,
    pub initial_state: Mat2<T>,
}

impl<T: Real> SystemSpec<T> {
    /// Dephasing model `H₀ = L = σz`, `H_c = (σx + σy)/2`, starting in `|+⟩`.
    pub fn dephasing(level_splitting: T) -> Self {
        SystemSpec {
            level_splitting,
            drift: Mat2::sigma_z(),
            control: (Mat2::sigma_x() + Mat2::sigma_y()).scale(T::lit(0.5)),
            coupling: Mat2::sigma_z(),
            initial_state: InitialState::Plus.density(),
        }
    }

    pub fn with_initial_state(mut self, rho: Mat2<T>) -> Self {
        self.initial_state = rho;
        self
    }

    /// `ω H₀ + c H_c`.
    pub fn hamiltonian(&self, control_value: T) -> Mat2<T> {
        self.drift.scale(self.level_splitting) + self.control.scale(control_value)
    }

    pub fn validate(&self) -> Result<()> {
        let tol = T::lit(1e-12);
        if !self.level_splitting.is_finite() {
            return Err(Error::InvalidInput("level splitting must be finite".into()));
        }
        for (name, m) in [("drift", &self.drift), ("control", &self.control)] {
            if m.hermiticity_defect() > tol {
                return Err(Error::InvalidInput(format!("{name} Hamiltonian is not Hermitian")));
            }
        }
        if !self.coupling.is_finite() {
            return Err(Error::InvalidInput("coupling operator must be finite".into()));
        }
        let rho = &self.initial_state;
        if rho.hermiticity_defect() > tol || (rho.trace().re - T::one()).abs() > tol {
            return Err(Error::InvalidInput(
                "initial state must be Hermitian with unit trace".into(),
            ));
        }
        let (p, _) = rho.eigh();
        if p[0] < -tol {
            return Err(Error::InvalidInput("initial state is not positive".into()));
        }
        Ok(())
    }
}
