use crate::dynamics::{ControlField, GeneratorHistory};
use crate::linalg::Vec4;
use crate::scalar::Real;

/// Propagates a co-state from `T_f` back to 0 through the adjoint of each
/// forward RK4 step, so `χ̇ = −𝓛†(t) χ` is integrated on the forward grid
/// and `Re⟨χ(t_k), s(t_k)⟩` is invariant along any forward trajectory of the
/// same generator. Returns `χ(t_0) … χ(t_N)`.
pub fn backward_propagate<T: Real>(
    history: &GeneratorHistory<T>,
    control: &ControlField<T>,
    terminal: &Vec4<T>,
) -> Vec<Vec4<T>> {
    let n = control.len();
    let mut out = vec![*terminal; n + 1];
    for k in (0..n).rev() {
        out[k] = history.adjoint_step(k, control.sample(k), &out[k + 1]);
    }
    out
}
