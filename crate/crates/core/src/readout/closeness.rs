//! Closeness of measured uncertainties to the Cramér–Rao bound.

use serde::{Deserialize, Serialize};

use crate::dynamics::DirectSumState;
use crate::error::Result;
use crate::linalg::Mat2;
use crate::qfi::{
    optimize_observable_ensemble, qfi_from_pair, uncertainty, ObservableFit, CRB_TOL,
};

/// `η = δ√F − 1` of one observable for one final state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Closeness {
    pub qfi: f64,
    pub mean: f64,
    pub delta: f64,
    /// `+∞` when the observable's slope vanished.
    pub eta: f64,
}

impl Closeness {
    /// The bound holds within [`CRB_TOL`].
    pub fn respects_bound(&self) -> bool {
        self.eta >= -CRB_TOL
    }
}

pub fn closeness(
    state: &DirectSumState<f64>,
    dx: f64,
    observable: &Mat2<f64>,
) -> Result<Closeness> {
    let f = qfi_from_pair(state, dx)?.qfi;
    let u = uncertainty(state, dx, observable);
    let eta = if u.is_informative() {
        u.delta * f.sqrt() - 1.0
    } else {
        f64::INFINITY
    };
    Ok(Closeness {
        qfi: f,
        mean: u.mean,
        delta: u.delta,
        eta,
    })
}

/// Single observable minimizing the mean `δ√F` over the given states.
pub fn optimal_measurement(
    states: &[DirectSumState<f64>],
    dx: f64,
) -> Result<ObservableFit<f64>> {
    optimize_observable_ensemble(states, dx)
}
