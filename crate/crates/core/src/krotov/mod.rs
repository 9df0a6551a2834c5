//! Krotov ensemble optimization of the final-time QFI.

mod adjoint;
mod config;
pub mod costate;
mod ensemble;
mod trace;
mod train;

pub use adjoint::backward_propagate;
pub use config::{KrotovConfig, UpdateShape, DEFAULT_EIGENVALUE_MARGIN};
pub use costate::{qfi_gradient, terminal_costate, terminal_objective, QfiGradient};
pub use ensemble::{split_range, EnsembleSpec, DEFAULT_DX};
pub use trace::{IterationRecord, OptimizationTrace, StopReason};
pub use train::{single_point_train, train, Costates, Evaluation, KrotovOptimizer};
