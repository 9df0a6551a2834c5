//! Symmetric logarithmic derivative, quantum Fisher information and
//! observable-based estimation uncertainty.
//!
//! Parameter derivatives come from the forward difference between the two
//! blocks of a [`DirectSumState`]; the QFI is evaluated on the left block.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::dynamics::DirectSumState;
use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::optim::nelder_mead;
use crate::scalar::Real;

/// Eigenvalue-pair cutoff below which SLD components are dropped.
pub const SLD_CUTOFF: f64 = 1e-10;
/// Tolerated non-Hermiticity of SLD inputs, relative to their magnitude.
pub const HERMITIAN_TOL: f64 = 1e-8;
/// Observable slopes below this are treated as carrying no information.
pub const SLOPE_FLOOR: f64 = 1e-8;
/// Allowed numerical undershoot of the Cramér–Rao bound.
pub const CRB_TOL: f64 = 1e-6;

/// QFI and SLD at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiResult<T> {
    pub qfi: T,
    pub sld: Mat2<T>,
    /// Ascending eigenvalues of the density operator used.
    pub eigenvalues: [T; 2],
    pub dx: T,
    pub time: T,
}

fn check_hermitian<T: Real>(name: &str, m: &Mat2<T>) -> Result<()> {
    let defect = m.hermiticity_defect();
    if !(defect <= T::lit(HERMITIAN_TOL) * (T::one() + m.max_abs())) {
        return Err(Error::Contract(format!(
            "{name} is not Hermitian (defect {defect})"
        )));
    }
    Ok(())
}

/// Eigenbasis data shared by the SLD and QFI: eigenvalues, eigenvectors and
/// the derivative expressed in the eigenbasis.
fn eigen_frame<T: Real>(rho: &Mat2<T>, drho: &Mat2<T>) -> Result<([T; 2], Mat2<T>, Mat2<T>)> {
    check_hermitian("density operator", rho)?;
    check_hermitian("state derivative", drho)?;
    let (p, u) = rho.eigh();
    let d = u.adjoint() * drho.hermitian_part() * u;
    Ok((p, u, d))
}

/// SLD with an explicit support cutoff `eps`: in the eigenbasis of `ρ`,
/// `L_ij = 2 ⟨i|∂ρ|j⟩ / (p_i + p_j)` where `p_i + p_j > eps`, else 0.
pub fn sld_with_cutoff<T: Real>(rho: &Mat2<T>, drho: &Mat2<T>, eps: T) -> Result<Mat2<T>> {
    let (p, u, d) = eigen_frame(rho, drho)?;
    let two = T::lit(2.0);
    let mut l = Mat2::zero();
    for i in 0..2 {
        for j in 0..2 {
            let denom = p[i] + p[j];
            if denom > eps {
                l.0[i][j] = d.0[i][j] * (two / denom);
            }
        }
    }
    Ok((u * l * u.adjoint()).hermitian_part())
}

/// Symmetric logarithmic derivative solving `∂ρ = (ρL + Lρ)/2`.
pub fn sld<T: Real>(rho: &Mat2<T>, drho: &Mat2<T>) -> Result<Mat2<T>> {
    sld_with_cutoff(rho, drho, T::lit(SLD_CUTOFF))
}

/// `tr(ρL²)` and `L` for a density operator and its parameter derivative.
pub fn qfi_with_cutoff<T: Real>(rho: &Mat2<T>, drho: &Mat2<T>, eps: T) -> Result<(T, Mat2<T>)> {
    let (p, u, d) = eigen_frame(rho, drho)?;
    let two = T::lit(2.0);
    let mut l = Mat2::zero();
    let mut f = T::zero();
    for i in 0..2 {
        for j in 0..2 {
            let denom = p[i] + p[j];
            if denom > eps {
                l.0[i][j] = d.0[i][j] * (two / denom);
                // tr(ρL²) = Σ 2|∂ρ_ij|² / (p_i + p_j)
                f = f + two * d.0[i][j].norm_sqr() / denom;
            }
        }
    }
    Ok((f, (u * l * u.adjoint()).hermitian_part()))
}

pub fn qfi<T: Real>(rho: &Mat2<T>, drho: &Mat2<T>) -> Result<(T, Mat2<T>)> {
    qfi_with_cutoff(rho, drho, T::lit(SLD_CUTOFF))
}

/// Forward-difference derivative `(ρ_{θ+dx} − ρ_θ)/dx` of a direct sum.
pub fn state_derivative<T: Real>(state: &DirectSumState<T>, dx: T) -> Mat2<T> {
    (state.right_density() - state.left_density()).scale(T::one() / dx)
}

/// QFI of the left block of a direct-sum state.
pub fn qfi_from_pair<T: Real>(state: &DirectSumState<T>, dx: T) -> Result<QfiResult<T>> {
    if !(dx > T::zero()) {
        return Err(Error::InvalidInput(format!("dx must be positive, got {dx}")));
    }
    let rho = state.left_density();
    let drho = state_derivative(state, dx);
    let (qfi, sld) = qfi(&rho, &drho)?;
    Ok(QfiResult {
        qfi,
        sld,
        eigenvalues: rho.eigh().0,
        dx,
        time: state.time,
    })
}

/// QFI along a propagated direct-sum series.
pub fn qfi_series<T: Real>(states: &[DirectSumState<T>], dx: T) -> Result<Vec<T>> {
    states
        .iter()
        .map(|s| qfi_from_pair(s, dx).map(|r| r.qfi))
        .collect()
}

/// Single-qubit projective observable `n·σ` with unit Bloch vector
/// `n = (sinφ₁ cosφ₂, sinφ₁ sinφ₂, cosφ₁)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementObservable<T> {
    /// φ₁ ∈ [0, π]
    pub polar: T,
    /// φ₂ ∈ [0, 2π)
    pub azimuth: T,
}

impl<T: Real> MeasurementObservable<T> {
    /// Wraps arbitrary angles into the canonical ranges.
    pub fn new(polar: T, azimuth: T) -> Self {
        let two_pi = T::lit(2.0) * T::PI();
        let mut polar = polar % two_pi;
        let mut azimuth = azimuth;
        if polar < T::zero() {
            polar = polar + two_pi;
        }
        if polar > T::PI() {
            polar = two_pi - polar;
            azimuth = azimuth + T::PI();
        }
        azimuth = azimuth % two_pi;
        if azimuth < T::zero() {
            azimuth = azimuth + two_pi;
        }
        MeasurementObservable { polar, azimuth }
    }

    pub fn sigma_z() -> Self {
        MeasurementObservable {
            polar: T::zero(),
            azimuth: T::zero(),
        }
    }

    pub fn bloch_vector(&self) -> [T; 3] {
        let (s1, c1) = self.polar.sin_cos();
        let (s2, c2) = self.azimuth.sin_cos();
        [s1 * c2, s1 * s2, c1]
    }

    pub fn matrix(&self) -> Mat2<T> {
        let [x, y, z] = self.bloch_vector();
        Mat2::from_bloch(x, y, z)
    }
}

/// Uncertainty `δ = ΔA / |d⟨A⟩/dθ|` of an observable together with its
/// ingredients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyEstimate<T> {
    pub delta: T,
    pub mean: T,
    pub spread: T,
    pub slope: T,
}

impl<T: Real> UncertaintyEstimate<T> {
    /// False when the slope vanished and `delta` is the infinite sentinel.
    pub fn is_informative(&self) -> bool {
        self.delta.is_finite()
    }
}

/// Uncertainty from a state and its parameter derivative.
pub fn uncertainty_from_derivative<T: Real>(
    rho: &Mat2<T>,
    drho: &Mat2<T>,
    observable: &Mat2<T>,
) -> UncertaintyEstimate<T> {
    let mean = (*rho * *observable).trace().re;
    let second = (*rho * *observable * *observable).trace().re;
    let spread = (second - mean * mean).max(T::zero()).sqrt();
    let slope = (*drho * *observable).trace().re;
    let delta = if slope.abs() <= T::lit(SLOPE_FLOOR) {
        debug!("observable slope {slope} below floor; uncertainty is unbounded");
        T::infinity()
    } else {
        spread / slope.abs()
    };
    UncertaintyEstimate {
        delta,
        mean,
        spread,
        slope,
    }
}

/// Uncertainty of `observable` measured on the left block, with the slope
/// taken by the same forward difference as the QFI.
pub fn uncertainty<T: Real>(
    state: &DirectSumState<T>,
    dx: T,
    observable: &Mat2<T>,
) -> UncertaintyEstimate<T> {
    uncertainty_from_derivative(&state.left_density(), &state_derivative(state, dx), observable)
}

/// `η = δ√F − 1`; zero means the Cramér–Rao bound is saturated.
pub fn crb_closeness<T: Real>(delta: T, qfi: T) -> Result<T> {
    if !(qfi > T::zero()) || !(delta > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "closeness needs positive δ and F, got δ = {delta}, F = {qfi}"
        )));
    }
    let eta = delta * qfi.sqrt() - T::one();
    if eta < -T::lit(CRB_TOL) {
        return Err(Error::CrbViolation {
            eta: eta.to_f64_lossy(),
        });
    }
    Ok(eta)
}

/// Observable chosen by [`optimize_observable`] with its objective value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableFit<T> {
    pub observable: MeasurementObservable<T>,
    pub objective: T,
}

const POLAR_GRID: usize = 64;
const AZIMUTH_GRID: usize = 128;

/// Minimizes `objective` over Bloch angles: a 64×128 grid scan followed by a
/// Nelder–Mead refinement from the best grid point. Non-finite objective
/// values mark uninformative observables.
pub fn optimize_observable_by<T: Real>(
    objective: impl Fn(&Mat2<T>) -> T,
) -> Result<ObservableFit<T>> {
    let eval = |polar: T, azimuth: T| {
        let v = objective(&MeasurementObservable::new(polar, azimuth).matrix());
        if v.is_nan() {
            T::infinity()
        } else {
            v
        }
    };
    let mut best = (T::infinity(), T::zero(), T::zero());
    for i in 0..POLAR_GRID {
        let polar = T::PI() * T::from_usize_lossy(i) / T::from_usize_lossy(POLAR_GRID - 1);
        for j in 0..AZIMUTH_GRID {
            let azimuth =
                T::lit(2.0) * T::PI() * T::from_usize_lossy(j) / T::from_usize_lossy(AZIMUTH_GRID);
            let v = eval(polar, azimuth);
            if v < best.0 {
                best = (v, polar, azimuth);
            }
        }
    }
    if !best.0.is_finite() {
        return Err(Error::NoInformativeObservable);
    }
    let step = T::PI() / T::from_usize_lossy(POLAR_GRID);
    let (x, value) = nelder_mead(|x| eval(x[0], x[1]), &[best.1, best.2], step, T::lit(1e-12), 4000);
    let (observable, objective) = if value <= best.0 {
        (MeasurementObservable::new(x[0], x[1]), value)
    } else {
        (MeasurementObservable::new(best.1, best.2), best.0)
    };
    Ok(ObservableFit {
        observable,
        objective,
    })
}

/// Observable minimizing the uncertainty for one final-time state pair.
pub fn optimize_observable<T: Real>(
    state: &DirectSumState<T>,
    dx: T,
) -> Result<ObservableFit<T>> {
    let rho = state.left_density();
    let drho = state_derivative(state, dx);
    optimize_observable_by(|a| uncertainty_from_derivative(&rho, &drho, a).delta)
}

/// Observable minimizing the mean normalized uncertainty `δ_j √F_j` over
/// several state pairs (one per parameter value).
pub fn optimize_observable_ensemble<T: Real>(
    states: &[DirectSumState<T>],
    dx: T,
) -> Result<ObservableFit<T>> {
    if states.is_empty() {
        return Err(Error::InvalidInput("no states to optimize over".into()));
    }
    let frames = states
        .iter()
        .map(|s| {
            let rho = s.left_density();
            let drho = state_derivative(s, dx);
            qfi(&rho, &drho).map(|(f, _)| (rho, drho, f.sqrt()))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = T::from_usize_lossy(frames.len());
    optimize_observable_by(|a| {
        frames
            .iter()
            .map(|(rho, drho, root_f)| uncertainty_from_derivative(rho, drho, a).delta * *root_f)
            .sum::<T>()
            / n
    })
}

/// `tr(ρ A)` for a vectorized density operator.
pub fn expectation<T: Real>(rho: &Mat2<T>, observable: &Mat2<T>) -> T {
    (*rho * *observable).trace().re
}
