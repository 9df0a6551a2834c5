//! Closed-form uncontrolled dephasing with `Ω = 0`.
//!
//! With `H_s = ωσ_z`, `L = σ_z` and no drive the coherence of `|+⟩` decays
//! as `|ρ₀₁(t)| = D(t)/2` with `D(t) = exp(−2Γ(t − (1 − e^{−γt})/γ))`, and the
//! QFI of either rate is `(∂D)²/(1 − D²)`.

use crate::bath::{BathParameter, BathSpec};

/// `(1 − e^{−γt})/γ`
fn memory_integral(gamma: f64, t: f64) -> f64 {
    -(-gamma * t).exp_m1() / gamma
}

pub fn decoherence(bath: &BathSpec<f64>, t: f64) -> f64 {
    (-2.0 * bath.gamma_cap * (t - memory_integral(bath.gamma, t))).exp()
}

/// `∂D/∂θ` for `θ ∈ {γ, Γ}`; `None` for the central shift.
pub fn decoherence_derivative(bath: &BathSpec<f64>, parameter: BathParameter, t: f64) -> Option<f64> {
    let d = decoherence(bath, t);
    let g = bath.gamma;
    match parameter {
        BathParameter::Gamma => {
            let dg = t * (-g * t).exp() / g - memory_integral(g, t) / g;
            Some(2.0 * bath.gamma_cap * dg * d)
        }
        BathParameter::GammaCap => Some(-2.0 * (t - memory_integral(g, t)) * d),
        BathParameter::OmegaShift => None,
    }
}

/// Uncontrolled QFI; zero at `t = 0` where the state does not yet depend on
/// the parameter.
pub fn qfi(bath: &BathSpec<f64>, parameter: BathParameter, t: f64) -> Option<f64> {
    let dd = decoherence_derivative(bath, parameter, t)?;
    let d = decoherence(bath, t);
    let denom = -(2.0 * (d.ln())).exp_m1();
    if dd == 0.0 {
        Some(0.0)
    } else {
        Some(dd * dd / denom)
    }
}
