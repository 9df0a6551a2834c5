//! Terminal co-states `χ = −∂J_T/∂s(T_f)` for `J_T = −(1/n) Σ_k F_k`.
//!
//! For a full-rank density operator the QFI `F = tr(ρL²)` has the exact
//! first variation
//!
//! ```text
//! δF = 2 tr(L δ∂ρ) − tr(L² δρ),
//! ```
//!
//! and with `∂ρ = (ρ_{θ+dx} − ρ_θ)/dx` this gives the gradient with respect
//! to both blocks of the direct sum. Gradients use the complex convention
//! `δF = Re Σ conj(g_i) δs_i` over the real and imaginary parts of every
//! vector entry; non-Hermitian perturbations act through their Hermitian part.

use crate::dynamics::propagate::hermitize;
use crate::dynamics::DirectSumState;
use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec4};
use crate::qfi::{qfi, state_derivative};
use crate::scalar::Real;

/// QFI of one member and its gradient with respect to both blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiGradient<T> {
    pub qfi: T,
    pub left: Vec4<T>,
    pub right: Vec4<T>,
}

fn hermitian_state<T: Real>(state: &DirectSumState<T>) -> DirectSumState<T> {
    let mut s = *state;
    hermitize(&mut s.left);
    hermitize(&mut s.right);
    s
}

/// QFI of the Hermitian part of a member state.
pub fn member_qfi<T: Real>(state: &DirectSumState<T>, dx: T) -> Result<T> {
    let s = hermitian_state(state);
    qfi(&s.left_density(), &state_derivative(&s, dx)).map(|(f, _)| f)
}

pub fn qfi_gradient<T: Real>(state: &DirectSumState<T>, dx: T) -> Result<QfiGradient<T>> {
    if !(dx > T::zero()) {
        return Err(Error::InvalidInput("dx must be positive".into()));
    }
    let s = hermitian_state(state);
    let (f, l) = qfi(&s.left_density(), &state_derivative(&s, dx))?;
    let scaled: Mat2<T> = l.scale(T::lit(2.0) / dx);
    let left = -scaled - l * l;
    Ok(QfiGradient {
        qfi: f,
        left: left.vec(),
        right: scaled.vec(),
    })
}

/// Co-state of one member of an `ensemble_size`-member average.
pub fn terminal_costate<T: Real>(
    state: &DirectSumState<T>,
    dx: T,
    ensemble_size: usize,
) -> Result<(Vec4<T>, Vec4<T>)> {
    let g = qfi_gradient(state, dx)?;
    let w = T::one() / T::from_usize_lossy(ensemble_size);
    let scale = |v: Vec4<T>| [v[0] * w, v[1] * w, v[2] * w, v[3] * w];
    Ok((scale(g.left), scale(g.right)))
}

/// `J_T = −(1/n) Σ_k F_k` over member final states.
pub fn terminal_objective<T: Real>(finals: &[DirectSumState<T>], dx: T) -> Result<T> {
    let mut total = T::zero();
    for s in finals {
        total = total + member_qfi(s, dx)?;
    }
    Ok(-total / T::from_usize_lossy(finals.len()))
}
