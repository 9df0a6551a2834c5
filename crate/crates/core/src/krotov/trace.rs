use serde::{Deserialize, Serialize};

/// One accepted Krotov iteration (iteration 0 is the guess).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `J_T`, the negative mean final QFI.
    pub objective: f64,
    pub member_qfi: Vec<f64>,
    /// L² norm of the accepted control change.
    pub control_change: f64,
    pub lambda_a: f64,
    /// Step-size doublings needed before acceptance.
    pub retries: usize,
    /// Seconds since the start of training.
    pub wall_time: f64,
}

impl IterationRecord {
    pub fn mean_qfi(&self) -> f64 {
        -self.objective
    }
}

/// Why training returned.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// `|ΔJ|` fell below the tolerance.
    Converged,
    #[default]
    IterationCap,
    /// The next update would have crossed the eigenvalue margin.
    EigenvalueMargin,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub records: Vec<IterationRecord>,
    pub stop_reason: StopReason,
}

impl OptimizationTrace {
    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    /// Number of accepted updates.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn first(&self) -> Option<&IterationRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// Largest per-iteration increase of `J_T` (negative when strictly
    /// decreasing throughout).
    pub fn max_increase(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| w[1].objective - w[0].objective)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_monotone(&self, slack: f64) -> bool {
        self.records.len() < 2 || self.max_increase() <= slack
    }
}
