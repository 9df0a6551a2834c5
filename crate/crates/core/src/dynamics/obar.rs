//! Memory-convolved operator `Ō(t) = ∫₀ᵗ α(t,s) O(t,s) ds`.
//!
//! With an exponential kernel the two-time integral closes into a local ODE,
//!
//! ```text
//! dŌ/dt = (Γγ/2) L − (γ + iΩ) Ō + [−i H_s(t) − L†Ō, Ō],   Ō(0) = 0,
//! ```
//!
//! using `O(t,t) = L` and the leading-order evolution
//! `∂ₜO(t,s) = [−iH_s(t) − L†Ō(t), O(t,s)]`.

use num_complex::Complex;

use super::{ControlField, SystemSpec};
use crate::bath::BathSpec;
use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::scalar::Real;

/// `Ō` sampled on the control grid and at every interval midpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct ObarTrajectory<T> {
    dt: T,
    /// index `2k` is `t_k`, index `2k+1` is `t_k + dt/2`
    half_grid: Vec<Mat2<T>>,
}

impl<T: Real> ObarTrajectory<T> {
    pub fn dt(&self) -> T {
        self.dt
    }

    /// Number of control intervals.
    pub fn steps(&self) -> usize {
        (self.half_grid.len() - 1) / 2
    }

    pub fn at_grid(&self, k: usize) -> &Mat2<T> {
        &self.half_grid[2 * k]
    }

    pub fn at_midpoint(&self, k: usize) -> &Mat2<T> {
        &self.half_grid[2 * k + 1]
    }

    pub fn half_grid(&self) -> &[Mat2<T>] {
        &self.half_grid
    }

    /// Grid values `Ō(t_0) … Ō(t_N)`.
    pub fn grid_values(&self) -> impl Iterator<Item = &Mat2<T>> {
        self.half_grid.iter().step_by(2)
    }
}

/// Right-hand side of the closed `Ō` equation for a fixed Hamiltonian.
pub fn obar_rate<T: Real>(
    obar: &Mat2<T>,
    hamiltonian: &Mat2<T>,
    coupling: &Mat2<T>,
    bath: &BathSpec<T>,
) -> Mat2<T> {
    let minus_i = Complex::new(T::zero(), -T::one());
    let effective = hamiltonian.scale_c(minus_i) - coupling.adjoint() * *obar;
    coupling.scale(bath.equal_time_correlation()) - obar.scale_c(bath.kernel_rate())
        + effective.commutator(obar)
}

fn rk4<T: Real>(
    obar: &Mat2<T>,
    h: T,
    hamiltonian: &Mat2<T>,
    coupling: &Mat2<T>,
    bath: &BathSpec<T>,
) -> Mat2<T> {
    let half = h * T::lit(0.5);
    let k1 = obar_rate(obar, hamiltonian, coupling, bath);
    let k2 = obar_rate(&(*obar + k1.scale(half)), hamiltonian, coupling, bath);
    let k3 = obar_rate(&(*obar + k2.scale(half)), hamiltonian, coupling, bath);
    let k4 = obar_rate(&(*obar + k3.scale(h)), hamiltonian, coupling, bath);
    *obar + (k1 + k2.scale(T::lit(2.0)) + k3.scale(T::lit(2.0)) + k4).scale(h / T::lit(6.0))
}

/// Integrates `Ō` with fixed-step RK4 at half the control step, so values are
/// available on the grid and at interval midpoints. The control is held
/// constant within each interval.
pub fn evolve_obar<T: Real>(
    system: &SystemSpec<T>,
    bath: &BathSpec<T>,
    control: &ControlField<T>,
) -> Result<ObarTrajectory<T>> {
    let n = control.len();
    let dt = control.dt();
    let h = dt * T::lit(0.5);
    let mut half_grid = Vec::with_capacity(2 * n + 1);
    let mut obar = Mat2::zero();
    half_grid.push(obar);
    for (k, &c) in control.samples().iter().enumerate() {
        let hamiltonian = system.hamiltonian(c);
        for sub in 0..2 {
            obar = rk4(&obar, h, &hamiltonian, &system.coupling, bath);
            if !obar.is_finite() {
                let time = control.time(k) + h * T::from_usize_lossy(sub + 1);
                return Err(Error::IntegratorFailure {
                    time: time.to_f64_lossy(),
                });
            }
            half_grid.push(obar);
        }
    }
    Ok(ObarTrajectory { dt, half_grid })
}
