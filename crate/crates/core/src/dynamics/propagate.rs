//! Fixed-step RK4 propagation of vectorized density operators.

use log::warn;

use super::obar::{evolve_obar, ObarTrajectory};
use super::superop::{control_superop, uncontrolled_superop};
use super::{ControlField, SystemSpec};
use crate::bath::BathSpec;
use crate::error::{Error, Result};
use crate::linalg::{axpy, Mat2, Super4, Vec4};
use crate::scalar::Real;

/// Positivity violations below this raise a warning.
pub const EIGENVALUE_FLOOR: f64 = -1e-8;

/// Time-dependent generator `𝓛₀(t) + c 𝓗_c` of one block, with `𝓛₀`
/// sampled on the half grid of the control.
#[derive(Debug, Clone)]
pub struct GeneratorHistory<T> {
    dt: T,
    dissipative: Vec<Super4<T>>,
    control: Super4<T>,
}

impl<T: Real> GeneratorHistory<T> {
    pub fn new(system: &SystemSpec<T>, obar: &ObarTrajectory<T>) -> Self {
        GeneratorHistory {
            dt: obar.dt(),
            dissipative: obar
                .half_grid()
                .iter()
                .map(|o| uncontrolled_superop(system, o))
                .collect(),
            control: control_superop(system),
        }
    }

    /// Generator frozen in time.
    pub fn constant(generator: Super4<T>, control: Super4<T>, dt: T, steps: usize) -> Self {
        GeneratorHistory {
            dt,
            dissipative: vec![generator; 2 * steps + 1],
            control,
        }
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn steps(&self) -> usize {
        (self.dissipative.len() - 1) / 2
    }

    pub fn control_superop(&self) -> &Super4<T> {
        &self.control
    }

    /// `𝓛₀` at half-grid index `idx` (`2k` = `t_k`).
    pub fn uncontrolled(&self, idx: usize) -> &Super4<T> {
        &self.dissipative[idx]
    }

    pub fn generator(&self, idx: usize, c: T) -> Super4<T> {
        self.dissipative[idx].add_scaled(c, &self.control)
    }

    #[inline]
    fn apply(&self, idx: usize, c: T, v: &Vec4<T>) -> Vec4<T> {
        axpy(&self.dissipative[idx].apply(v), c, &self.control.apply(v))
    }

    #[inline]
    fn apply_adjoint(&self, idx: usize, c: T, v: &Vec4<T>) -> Vec4<T> {
        axpy(
            &self.dissipative[idx].apply_adjoint(v),
            c,
            &self.control.apply_adjoint(v),
        )
    }

    /// One RK4 step over interval `k` with control value `c`.
    #[inline]
    pub fn step(&self, k: usize, c: T, s: &Vec4<T>) -> Vec4<T> {
        let h = self.dt;
        let half = h * T::lit(0.5);
        let (i0, i1, i2) = (2 * k, 2 * k + 1, 2 * k + 2);
        let a1 = self.apply(i0, c, s);
        let a2 = self.apply(i1, c, &axpy(s, half, &a1));
        let a3 = self.apply(i1, c, &axpy(s, half, &a2));
        let a4 = self.apply(i2, c, &axpy(s, h, &a3));
        let sixth = h / T::lit(6.0);
        let third = h / T::lit(3.0);
        let mut out = *s;
        for i in 0..4 {
            out[i] = out[i] + (a1[i] + a4[i]) * sixth + (a2[i] + a3[i]) * third;
        }
        out
    }

    /// Derivative of [`Self::step`] with respect to the control value `c`.
    pub fn step_control_derivative(&self, k: usize, c: T, s: &Vec4<T>) -> Vec4<T> {
        let h = self.dt;
        let half = h * T::lit(0.5);
        let (i0, i1, i2) = (2 * k, 2 * k + 1, 2 * k + 2);
        let hc = &self.control;
        let a1 = self.apply(i0, c, s);
        let da1 = hc.apply(s);
        let u2 = axpy(s, half, &a1);
        let a2 = self.apply(i1, c, &u2);
        let da2 = axpy(&hc.apply(&u2), half, &self.apply(i1, c, &da1));
        let u3 = axpy(s, half, &a2);
        let da3 = axpy(&hc.apply(&u3), half, &self.apply(i1, c, &da2));
        let u4 = axpy(s, h, &self.apply(i1, c, &u3));
        let da4 = axpy(&hc.apply(&u4), h, &self.apply(i2, c, &da3));
        let sixth = h / T::lit(6.0);
        let third = h / T::lit(3.0);
        let mut out = [num_complex::Complex::new(T::zero(), T::zero()); 4];
        for i in 0..4 {
            out[i] = (da1[i] + da4[i]) * sixth + (da2[i] + da3[i]) * third;
        }
        out
    }

    /// Conjugate transpose of [`Self::step`]: maps a co-state at `t_{k+1}`
    /// to `t_k`, preserving `Re⟨χ, s⟩` exactly across the step.
    #[inline]
    pub fn adjoint_step(&self, k: usize, c: T, chi: &Vec4<T>) -> Vec4<T> {
        let h = self.dt;
        let half = h * T::lit(0.5);
        let (i0, i1, i2) = (2 * k, 2 * k + 1, 2 * k + 2);
        let sixth = h / T::lit(6.0);
        let third = h / T::lit(3.0);
        let scaled = |v: &Vec4<T>, s: T| [v[0] * s, v[1] * s, v[2] * s, v[3] * s];
        let bar_a4 = scaled(chi, sixth);
        let mut bar_a3 = scaled(chi, third);
        let mut bar_a2 = scaled(chi, third);
        let mut bar_a1 = scaled(chi, sixth);
        let mut bar_s = *chi;

        let bar_u4 = self.apply_adjoint(i2, c, &bar_a4);
        bar_s = axpy(&bar_s, T::one(), &bar_u4);
        bar_a3 = axpy(&bar_a3, h, &bar_u4);

        let bar_u3 = self.apply_adjoint(i1, c, &bar_a3);
        bar_s = axpy(&bar_s, T::one(), &bar_u3);
        bar_a2 = axpy(&bar_a2, half, &bar_u3);

        let bar_u2 = self.apply_adjoint(i1, c, &bar_a2);
        bar_s = axpy(&bar_s, T::one(), &bar_u2);
        bar_a1 = axpy(&bar_a1, half, &bar_u2);

        axpy(&bar_s, T::one(), &self.apply_adjoint(i0, c, &bar_a1))
    }
}

/// Projects a vectorized operator onto its Hermitian part.
#[inline]
pub fn hermitize<T: Real>(v: &mut Vec4<T>) {
    let half = T::lit(0.5);
    v[0].im = T::zero();
    v[3].im = T::zero();
    let off = (v[1] + v[2].conj()).scale(half);
    v[1] = off;
    v[2] = off.conj();
}

/// Smallest eigenvalue of the Hermitian operator `unvec(v)`.
#[inline]
pub fn min_eigenvalue<T: Real>(v: &Vec4<T>) -> T {
    let center = (v[0].re + v[3].re) * T::lit(0.5);
    let dz = (v[0].re - v[3].re) * T::lit(0.5);
    center - (dz * dz + v[1].norm_sqr()).sqrt()
}

/// Density operator samples on the control grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    dt: T,
    states: Vec<Vec4<T>>,
    min_eigenvalue: T,
}

impl<T: Real> Trajectory<T> {
    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, k: usize) -> T {
        T::from_usize_lossy(k) * self.dt
    }

    pub fn state(&self, k: usize) -> &Vec4<T> {
        &self.states[k]
    }

    pub fn states(&self) -> &[Vec4<T>] {
        &self.states
    }

    pub fn density(&self, k: usize) -> Mat2<T> {
        Mat2::from_vec(&self.states[k])
    }

    pub fn final_state(&self) -> &Vec4<T> {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// Smallest eigenvalue seen along the run.
    pub fn min_eigenvalue(&self) -> T {
        self.min_eigenvalue
    }
}

/// Propagates one block under `history` and the piecewise-constant control.
/// The state is re-symmetrized after every step.
pub fn propagate_block<T: Real>(
    history: &GeneratorHistory<T>,
    control: &ControlField<T>,
    initial: &Vec4<T>,
) -> Result<Trajectory<T>> {
    let n = control.len();
    if history.steps() != n {
        return Err(Error::Contract(format!(
            "generator history has {} steps, control has {n}",
            history.steps()
        )));
    }
    let mut states = Vec::with_capacity(n + 1);
    let mut s = *initial;
    let mut min_eig = min_eigenvalue(&s);
    states.push(s);
    for (k, &c) in control.samples().iter().enumerate() {
        s = history.step(k, c, &s);
        hermitize(&mut s);
        if !s.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::IntegratorFailure {
                time: control.time(k + 1).to_f64_lossy(),
            });
        }
        min_eig = min_eig.min(min_eigenvalue(&s));
        states.push(s);
    }
    if min_eig < T::lit(EIGENVALUE_FLOOR) {
        warn!(
            "density operator eigenvalue dipped to {} (floor {EIGENVALUE_FLOOR})",
            min_eig
        );
    }
    Ok(Trajectory {
        dt: control.dt(),
        states,
        min_eigenvalue: min_eig,
    })
}

/// Propagates the master equation for one bath.
pub fn propagate_density<T: Real>(
    system: &SystemSpec<T>,
    bath: &BathSpec<T>,
    control: &ControlField<T>,
) -> Result<Trajectory<T>> {
    let obar = evolve_obar(system, bath, control)?;
    let history = GeneratorHistory::new(system, &obar);
    propagate_block(&history, control, &system.initial_state.vec())
}

/// Direct sum `|ρ_θ⟩⟩ ⊕ |ρ_{θ+dx}⟩⟩` at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectSumState<T> {
    pub left: Vec4<T>,
    pub right: Vec4<T>,
    pub time: T,
}

impl<T: Real> DirectSumState<T> {
    pub fn left_density(&self) -> Mat2<T> {
        Mat2::from_vec(&self.left)
    }

    pub fn right_density(&self) -> Mat2<T> {
        Mat2::from_vec(&self.right)
    }

    /// Hermiticity and unit trace of both blocks within `tol`, eigenvalues
    /// above the positivity floor.
    pub fn check(&self, tol: T) -> Result<()> {
        for (name, rho) in [("left", self.left_density()), ("right", self.right_density())] {
            if rho.hermiticity_defect() > tol {
                return Err(Error::Contract(format!("{name} block is not Hermitian")));
            }
            if (rho.trace() - num_complex::Complex::new(T::one(), T::zero())).norm() > tol {
                return Err(Error::Contract(format!("{name} block has trace != 1")));
            }
            if rho.eigh().0[0] < T::lit(EIGENVALUE_FLOOR) {
                return Err(Error::Contract(format!("{name} block is not positive")));
            }
        }
        Ok(())
    }
}

/// Co-propagates the blocks for two baths under a shared control.
pub fn propagate_pair<T: Real>(
    system: &SystemSpec<T>,
    bath_lo: &BathSpec<T>,
    bath_hi: &BathSpec<T>,
    control: &ControlField<T>,
) -> Result<Vec<DirectSumState<T>>> {
    let lo = propagate_density(system, bath_lo, control)?;
    let hi = if bath_lo == bath_hi {
        lo.clone()
    } else {
        propagate_density(system, bath_hi, control)?
    };
    Ok(zip_pair(&lo, &hi))
}

pub fn zip_pair<T: Real>(lo: &Trajectory<T>, hi: &Trajectory<T>) -> Vec<DirectSumState<T>> {
    lo.states()
        .iter()
        .zip(hi.states())
        .enumerate()
        .map(|(k, (l, r))| DirectSumState {
            left: *l,
            right: *r,
            time: lo.time(k),
        })
        .collect()
}
