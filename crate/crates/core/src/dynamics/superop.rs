//! Column-stacked superoperators of the convolutionless master equation
//!
//! ```text
//! ρ̇ = −i[H_s, ρ] + [L, ρŌ†] − [L†, Ōρ],
//! ```
//!
//! split as `𝓛 = 𝓛₀ + c 𝓗_c` with `𝓗_c = −i[H_c, ·]`.

use super::SystemSpec;
use crate::linalg::{Mat2, Super4};
use crate::scalar::Real;

/// Uncontrolled generator `𝓛₀`: free evolution under `ωH₀` plus the
/// `Ō`-dependent dissipator.
pub fn uncontrolled_superop<T: Real>(system: &SystemSpec<T>, obar: &Mat2<T>) -> Super4<T> {
    let l = &system.coupling;
    let l_dag = l.adjoint();
    let obar_dag = obar.adjoint();
    let free = Super4::hamiltonian(&system.drift.scale(system.level_splitting));
    // [L, ρŌ†] = L ρ Ō† − ρ Ō† L ;  −[L†, Ōρ] = −L†Ō ρ + Ō ρ L†
    free + Super4::sandwich(l, &obar_dag)
        - Super4::right(&(obar_dag * *l))
        - Super4::left(&(l_dag * *obar))
        + Super4::sandwich(obar, &l_dag)
}

/// Control superoperator `𝓗_c = −i[H_c, ·]`.
pub fn control_superop<T: Real>(system: &SystemSpec<T>) -> Super4<T> {
    Super4::hamiltonian(&system.control)
}

/// Full generator `𝓛₀(Ō) + c 𝓗_c`.
pub fn assemble_lindbladian<T: Real>(
    system: &SystemSpec<T>,
    obar: &Mat2<T>,
    control_value: T,
) -> Super4<T> {
    uncontrolled_superop(system, obar).add_scaled(control_value, &control_superop(system))
}
