//! Driven dephasing qubit under the convolutionless non-Markovian master
//! equation.

mod control;
pub mod obar;
pub mod propagate;
pub mod superop;
mod system;

pub use control::ControlField;
pub use obar::{evolve_obar, ObarTrajectory};
pub use propagate::{
    propagate_block, propagate_density, propagate_pair, DirectSumState, GeneratorHistory,
    Trajectory,
};
pub use superop::{assemble_lindbladian, control_superop, uncontrolled_superop};
pub use system::{InitialState, SystemSpec};
