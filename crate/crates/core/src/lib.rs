//! Estimation of non-Markovian bath parameters for a driven qubit.
//!
//! The crate propagates the convolutionless master equation of a qubit
//! coupled to a zero-temperature Lorentzian (Ornstein–Uhlenbeck) bath, trains
//! a shared control by Krotov ensemble optimization so the quantum Fisher
//! information of a bath parameter peaks at a prescribed time, and reads the
//! parameter back out from a monotone fit of a measured expectation value.
//!
//! The numerical modules are generic over [`Real`] (`f32`/`f64`); the type
//! aliases below fix the scalar to `f64`, which is what the estimators need.

pub mod analytic;
pub mod bath;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod io;
pub mod krotov;
pub mod linalg;
pub mod optim;
pub mod qfi;
pub mod readout;
pub mod scalar;

pub use bath::BathParameter;
pub use error::{Error, Result};
pub use scalar::Real;

pub type BathSpec = bath::BathSpec<f64>;
pub type SystemSpec = dynamics::SystemSpec<f64>;
pub type ControlField = dynamics::ControlField<f64>;
pub type ObarTrajectory = dynamics::ObarTrajectory<f64>;
pub type DirectSumState = dynamics::DirectSumState<f64>;
pub type Trajectory = dynamics::Trajectory<f64>;
pub type QfiResult = qfi::QfiResult<f64>;
pub type MeasurementObservable = qfi::MeasurementObservable<f64>;
pub type EnsembleSpec = krotov::EnsembleSpec<f64>;
pub type KrotovConfig = krotov::KrotovConfig<f64>;
pub type Mat2 = linalg::Mat2<f64>;
