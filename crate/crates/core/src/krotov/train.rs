//! Sequential first-order Krotov updates over an ensemble of baths.
//!
//! Each iteration refreshes `Ō` (and hence `𝓛₀`) for every member under the
//! current control, propagates forward, seeds co-states from the QFI
//! gradient at `T_f`, propagates them backward and then sweeps forward in
//! time updating the control sample by sample. During the sweep `𝓛₀` is held
//! at its current-iteration value, i.e. `∂𝓛₀/∂c` is neglected.

use std::sync::Arc;
use std::time::Instant;

use log::{debug, info};
use rayon::prelude::*;

use super::adjoint::backward_propagate;
use super::config::KrotovConfig;
use super::costate::{member_qfi, terminal_costate};
use super::ensemble::EnsembleSpec;
use super::trace::{IterationRecord, OptimizationTrace, StopReason};
use crate::dynamics::propagate::{hermitize, min_eigenvalue};
use crate::dynamics::{
    evolve_obar, propagate_block, ControlField, DirectSumState, GeneratorHistory, Trajectory,
};
use crate::error::{Error, Result};
use crate::linalg::{real_pairing, Vec4};
use crate::scalar::Real;

type BlockPair<V> = [V; 2];

/// Forward solution of the whole ensemble under one control.
#[derive(Debug, Clone)]
pub struct Evaluation<T> {
    pub control: ControlField<T>,
    histories: Arc<Vec<BlockPair<GeneratorHistory<T>>>>,
    trajectories: Vec<BlockPair<Trajectory<T>>>,
    pub member_qfi: Vec<T>,
    /// Smallest eigenvalue over both blocks of each member's final state.
    pub member_min_eigenvalue: Vec<T>,
    /// `J_T = −mean F`
    pub objective: T,
}

impl<T: Real> Evaluation<T> {
    pub fn final_state(&self, member: usize) -> DirectSumState<T> {
        let [lo, hi] = &self.trajectories[member];
        DirectSumState {
            left: *lo.final_state(),
            right: *hi.final_state(),
            time: lo.time(lo.len() - 1),
        }
    }

    pub fn trajectories(&self, member: usize) -> &BlockPair<Trajectory<T>> {
        &self.trajectories[member]
    }

    pub fn mean_qfi(&self) -> T {
        -self.objective
    }

    pub fn min_eigenvalue(&self) -> T {
        self.member_min_eigenvalue
            .iter()
            .fold(T::infinity(), |a, &b| a.min(b))
    }
}

/// Co-state series `χ(t_0) … χ(t_N)` for both blocks of every member.
pub type Costates<T> = Vec<BlockPair<Vec<Vec4<T>>>>;

pub struct KrotovOptimizer<T> {
    ensemble: EnsembleSpec<T>,
    config: KrotovConfig<T>,
    shape: Vec<T>,
}

impl<T: Real> KrotovOptimizer<T> {
    pub fn new(ensemble: EnsembleSpec<T>, config: KrotovConfig<T>) -> Result<Self> {
        ensemble.validate()?;
        config.validate()?;
        if let Some(guess) = &config.initial_guess {
            if guess.len() != ensemble.sample_count || guess.final_time() != ensemble.final_time
            {
                return Err(Error::InvalidInput(
                    "initial guess grid does not match the ensemble grid".into(),
                ));
            }
        }
        let shape = config
            .shape
            .samples(ensemble.final_time, ensemble.sample_count);
        Ok(KrotovOptimizer {
            ensemble,
            config,
            shape,
        })
    }

    pub fn ensemble(&self) -> &EnsembleSpec<T> {
        &self.ensemble
    }

    pub fn config(&self) -> &KrotovConfig<T> {
        &self.config
    }

    pub fn shape(&self) -> &[T] {
        &self.shape
    }

    pub fn initial_control(&self) -> Result<ControlField<T>> {
        match &self.config.initial_guess {
            Some(c) => Ok(c.clone()),
            None => ControlField::zeros(self.ensemble.final_time, self.ensemble.sample_count),
        }
    }

    /// Generator histories of all members with `Ō` computed under `control`.
    pub fn build_histories(
        &self,
        control: &ControlField<T>,
    ) -> Result<Vec<BlockPair<GeneratorHistory<T>>>> {
        let system = &self.ensemble.system;
        (0..self.ensemble.len())
            .into_par_iter()
            .map(|j| {
                let (lo, hi) = self.ensemble.member_baths(j);
                let h_lo = GeneratorHistory::new(system, &evolve_obar(system, &lo, control)?);
                let h_hi = GeneratorHistory::new(system, &evolve_obar(system, &hi, control)?);
                Ok([h_lo, h_hi])
            })
            .collect()
    }

    /// Forward-propagates every member. With `frozen` histories the `Ō`
    /// refresh is skipped.
    pub fn evaluate(
        &self,
        control: ControlField<T>,
        frozen: Option<Arc<Vec<BlockPair<GeneratorHistory<T>>>>>,
    ) -> Result<Evaluation<T>> {
        let histories = match frozen {
            Some(h) => h,
            None => Arc::new(self.build_histories(&control)?),
        };
        let initial = self.ensemble.system.initial_state.vec();
        let trajectories = histories
            .par_iter()
            .map(|[lo, hi]| {
                Ok([
                    propagate_block(lo, &control, &initial)?,
                    propagate_block(hi, &control, &initial)?,
                ])
            })
            .collect::<Result<Vec<_>>>()?;
        let dx = self.ensemble.dx;
        let mut member_qfi = Vec::with_capacity(trajectories.len());
        let mut member_min_eigenvalue = Vec::with_capacity(trajectories.len());
        for [lo, hi] in &trajectories {
            member_min_eigenvalue
                .push(min_eigenvalue(lo.final_state()).min(min_eigenvalue(hi.final_state())));
            let state = DirectSumState {
                left: *lo.final_state(),
                right: *hi.final_state(),
                time: self.ensemble.final_time,
            };
            member_qfi.push(member_qfi_value(&state, dx)?);
        }
        let n = T::from_usize_lossy(member_qfi.len());
        let objective = -member_qfi.iter().fold(T::zero(), |a, &f| a + f) / n;
        Ok(Evaluation {
            control,
            histories,
            trajectories,
            member_qfi,
            member_min_eigenvalue,
            objective,
        })
    }

    /// Terminal co-states propagated backward along the evaluation.
    pub fn costates(&self, eval: &Evaluation<T>) -> Result<Costates<T>> {
        let n = self.ensemble.len();
        let dx = self.ensemble.dx;
        (0..n)
            .into_par_iter()
            .map(|j| {
                let (chi_lo, chi_hi) = terminal_costate(&eval.final_state(j), dx, n)?;
                let [h_lo, h_hi] = &eval.histories[j];
                Ok([
                    backward_propagate(h_lo, &eval.control, &chi_lo),
                    backward_propagate(h_hi, &eval.control, &chi_hi),
                ])
            })
            .collect()
    }

    /// Exact gradient `dJ_T/dc_k` of the discretized problem for fixed `𝓛₀`.
    pub fn gradient(&self, eval: &Evaluation<T>, costates: &Costates<T>) -> Vec<T> {
        let control = &eval.control;
        (0..control.len())
            .map(|k| {
                let c = control.sample(k);
                let mut acc = T::zero();
                for (j, pair) in eval.histories.iter().enumerate() {
                    for b in 0..2 {
                        let s = eval.trajectories[j][b].state(k);
                        let ds = pair[b].step_control_derivative(k, c, s);
                        acc = acc + real_pairing(&costates[j][b][k + 1], &ds);
                    }
                }
                -acc
            })
            .collect()
    }

    /// Sequential update: sample `k` moves by
    /// `(S_k/λ) Σ Re⟨χ(t_{k+1}), ∂_c U_k s_new(t_k)⟩ / dt`, then the updated
    /// states are stepped with the new sample before moving to `k + 1`.
    pub fn control_update(
        &self,
        eval: &Evaluation<T>,
        costates: &Costates<T>,
        lambda_a: T,
    ) -> Result<ControlField<T>> {
        let old = &eval.control;
        let dt = old.dt();
        let initial = self.ensemble.system.initial_state.vec();
        let mut states: Vec<BlockPair<Vec4<T>>> = vec![[initial, initial]; eval.histories.len()];
        let mut updated = old.clone();
        for k in 0..old.len() {
            let c_old = old.sample(k);
            let weight = self.shape[k] / lambda_a;
            let c_new = if weight > T::zero() {
                let mut acc = T::zero();
                for (j, pair) in eval.histories.iter().enumerate() {
                    for b in 0..2 {
                        let ds = pair[b].step_control_derivative(k, c_old, &states[j][b]);
                        acc = acc + real_pairing(&costates[j][b][k + 1], &ds);
                    }
                }
                c_old + weight * acc / dt
            } else {
                c_old
            };
            if !c_new.is_finite() {
                return Err(Error::IntegratorFailure {
                    time: old.time(k).to_f64_lossy(),
                });
            }
            updated.samples_mut()[k] = c_new;
            for (pair, s) in eval.histories.iter().zip(states.iter_mut()) {
                for b in 0..2 {
                    s[b] = pair[b].step(k, c_new, &s[b]);
                    hermitize(&mut s[b]);
                }
            }
        }
        Ok(updated)
    }

    /// Runs Krotov iterations until the change in `J_T` drops below the
    /// tolerance or the iteration cap is hit.
    pub fn run(&self) -> Result<(ControlField<T>, OptimizationTrace)> {
        let start = Instant::now();
        let guess = self.initial_control()?;
        let frozen = if self.config.refresh_obar {
            None
        } else {
            Some(Arc::new(self.build_histories(&guess)?))
        };
        let mut current = self.evaluate(guess, frozen.clone())?;
        let mut lambda = self.config.lambda_a;
        let mut trace = OptimizationTrace::default();
        trace.records.push(record(0, &current, T::zero(), lambda, 0, &start));

        for iteration in 1..=self.config.max_iterations {
            let costates = self.costates(&current)?;
            let mut retries = 0;
            let candidate = loop {
                let control = self.control_update(&current, &costates, lambda)?;
                let candidate = self.evaluate(control, frozen.clone())?;
                let increase = candidate.objective - current.objective;
                if increase <= self.config.monotonic_slack {
                    break candidate;
                }
                debug!(
                    "iteration {iteration}: J rose by {increase}, doubling lambda_a from {lambda}"
                );
                retries += 1;
                if retries > self.config.max_retries {
                    return Err(Error::NonConvergence {
                        iteration,
                        retries: self.config.max_retries,
                        trace: Box::new(trace),
                    });
                }
                lambda = lambda * T::lit(2.0);
            };
            if let Some(margin) = self.config.eigenvalue_margin {
                let p = candidate.min_eigenvalue();
                if p < margin {
                    info!(
                        "krotov iteration {iteration}: update would leave eigenvalue {} below margin {margin}; stopping",
                        p.to_f64_lossy()
                    );
                    trace.stop_reason = StopReason::EigenvalueMargin;
                    break;
                }
            }
            let delta = candidate.objective - current.objective;
            let change = control_distance(&current.control, &candidate.control);
            trace
                .records
                .push(record(iteration, &candidate, change, lambda, retries, &start));
            if iteration % 25 == 0 || iteration == 1 {
                info!(
                    "krotov iteration {iteration}: mean F = {:.6}, dJ = {:.3e}, lambda_a = {}",
                    candidate.mean_qfi().to_f64_lossy(),
                    delta.to_f64_lossy(),
                    lambda
                );
            }
            current = candidate;
            if delta.abs() < self.config.tolerance {
                trace.stop_reason = StopReason::Converged;
                break;
            }
        }
        Ok((current.control, trace))
    }
}

fn member_qfi_value<T: Real>(state: &DirectSumState<T>, dx: T) -> Result<T> {
    member_qfi(state, dx)
}

fn control_distance<T: Real>(a: &ControlField<T>, b: &ControlField<T>) -> T {
    let sq: T = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum();
    (sq * a.dt()).sqrt()
}

fn record<T: Real>(
    iteration: usize,
    eval: &Evaluation<T>,
    change: T,
    lambda: T,
    retries: usize,
    start: &Instant,
) -> IterationRecord {
    IterationRecord {
        iteration,
        objective: eval.objective.to_f64_lossy(),
        member_qfi: eval.member_qfi.iter().map(|f| f.to_f64_lossy()).collect(),
        control_change: change.to_f64_lossy(),
        lambda_a: lambda.to_f64_lossy(),
        retries,
        wall_time: start.elapsed().as_secs_f64(),
    }
}

/// Trains one shared control over the ensemble.
pub fn train<T: Real>(
    ensemble: &EnsembleSpec<T>,
    config: &KrotovConfig<T>,
) -> Result<(ControlField<T>, OptimizationTrace)> {
    KrotovOptimizer::new(ensemble.clone(), config.clone())?.run()
}

/// Baseline: the same optimization for the single point `midpoint`.
pub fn single_point_train<T: Real>(
    ensemble: &EnsembleSpec<T>,
    midpoint: T,
    config: &KrotovConfig<T>,
) -> Result<(ControlField<T>, OptimizationTrace)> {
    train(&ensemble.with_values(vec![midpoint]), config)
}
