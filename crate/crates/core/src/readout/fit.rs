//! Monotone polynomial readout `θ ↦ ⟨A(T_f)⟩` and its inversion.

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_DEGREE: usize = 3;
pub const MAX_DEGREE: usize = 6;
/// Points of the grid on which monotonicity is verified.
pub const MONOTONE_GRID: usize = 1000;
/// Bracket width at which inversion stops.
pub const INVERSION_TOL: f64 = 1e-10;
/// Relative slack, in units of the curve's span, within which a measurement
/// at the end of the range counts as inside it.
const RANGE_SLACK: f64 = 1e-12;

/// Least-squares polynomial in the scaled variable
/// `x = (θ − center) / half_width`, strictly monotone on `domain`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutCurve {
    /// Ascending powers of `x`.
    pub coefficients: Vec<f64>,
    pub degree: usize,
    pub center: f64,
    pub half_width: f64,
    pub domain: (f64, f64),
    pub increasing: bool,
    /// Training pairs `(θ_j, ⟨A⟩_j)`.
    pub training: Vec<(f64, f64)>,
    pub residual_rms: f64,
    pub residual_max: f64,
    /// Leave-one-out RMS residual of each candidate degree.
    pub cv_scores: Vec<(usize, f64)>,
    /// Curve values on the monotonicity grid.
    pub monotone_grid: Vec<(f64, f64)>,
}

/// Result of inverting a measured expectation value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inversion {
    pub estimate: f64,
    /// The measurement fell outside the curve's range and was clamped.
    pub extrapolated: bool,
}

fn horner(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn least_squares(xs: &[f64], ys: &[f64], degree: usize) -> Result<Vec<f64>> {
    let a = DMatrix::from_fn(xs.len(), degree + 1, |i, j| xs[i].powi(j as i32));
    let b = DVector::from_column_slice(ys);
    let svd = a.svd(true, true);
    let solution = svd
        .solve(&b, 1e-13)
        .map_err(|e| Error::InvalidInput(format!("least squares failed: {e}")))?;
    Ok(solution.iter().copied().collect())
}

fn leave_one_out(xs: &[f64], ys: &[f64], degree: usize) -> Result<f64> {
    let mut sq = 0.0;
    for skip in 0..xs.len() {
        let (tx, ty): (Vec<f64>, Vec<f64>) = xs
            .iter()
            .zip(ys)
            .enumerate()
            .filter(|&(i, _)| i != skip)
            .map(|(_, (&x, &y))| (x, y))
            .unzip();
        let c = least_squares(&tx, &ty, degree)?;
        let r = horner(&c, xs[skip]) - ys[skip];
        sq += r * r;
    }
    Ok((sq / xs.len() as f64).sqrt())
}

impl ReadoutCurve {
    /// Fits `⟨A⟩` against `θ` with the degree in `3..=6` that minimizes the
    /// leave-one-out residual (lowest degree on ties), then checks strict
    /// monotonicity over the span of the training values.
    pub fn fit(pairs: &[(f64, f64)]) -> Result<Self> {
        if pairs.len() < 4 {
            return Err(Error::InvalidInput(format!(
                "readout fit needs at least 4 pairs, got {}",
                pairs.len()
            )));
        }
        if pairs.iter().any(|(t, y)| !t.is_finite() || !y.is_finite()) {
            return Err(Error::InvalidInput("readout pairs must be finite".into()));
        }
        let mut training = pairs.to_vec();
        training.sort_by(|a, b| a.0.total_cmp(&b.0));
        let lo = training[0].0;
        let hi = training[training.len() - 1].0;
        if !(hi > lo) {
            return Err(Error::InvalidInput("readout pairs need distinct θ".into()));
        }
        let center = 0.5 * (lo + hi);
        let half_width = 0.5 * (hi - lo);
        let xs: Vec<f64> = training.iter().map(|p| (p.0 - center) / half_width).collect();
        let ys: Vec<f64> = training.iter().map(|p| p.1).collect();
        let y_scale = ys.iter().fold(0.0f64, |m, y| m.max(y.abs())).max(f64::MIN_POSITIVE);

        let top = MAX_DEGREE.min(training.len() - 1);
        let mut cv_scores = Vec::new();
        for degree in MIN_DEGREE..=top {
            let score = if training.len() >= degree + 2 {
                leave_one_out(&xs, &ys, degree)?
            } else {
                f64::INFINITY
            };
            cv_scores.push((degree, score));
        }
        // Scores within rounding of the best count as ties.
        let best = cv_scores.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        let degree = if best.is_finite() {
            cv_scores
                .iter()
                .find(|s| s.1 <= best * (1.0 + 1e-6) + 1e-12 * y_scale)
                .map(|s| s.0)
                .expect("best score present")
        } else {
            MIN_DEGREE
        };
        let coefficients = least_squares(&xs, &ys, degree)?;

        let residuals: Vec<f64> = xs
            .iter()
            .zip(&ys)
            .map(|(&x, &y)| horner(&coefficients, x) - y)
            .collect();
        let residual_rms =
            (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
        let residual_max = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));

        let monotone_grid: Vec<(f64, f64)> = (0..MONOTONE_GRID)
            .map(|i| {
                let t = lo + (hi - lo) * i as f64 / (MONOTONE_GRID - 1) as f64;
                (t, horner(&coefficients, (t - center) / half_width))
            })
            .collect();
        let increasing = monotone_grid[MONOTONE_GRID - 1].1 > monotone_grid[0].1;
        for w in monotone_grid.windows(2) {
            let step = w[1].1 - w[0].1;
            if (increasing && step <= 0.0) || (!increasing && step >= 0.0) {
                return Err(Error::NonMonotoneFit {
                    lo: w[0].0,
                    hi: w[1].0,
                });
            }
        }

        Ok(ReadoutCurve {
            coefficients,
            degree,
            center,
            half_width,
            domain: (lo, hi),
            increasing,
            training,
            residual_rms,
            residual_max,
            cv_scores,
            monotone_grid,
        })
    }

    /// Fitted `⟨A⟩` at `θ`.
    pub fn evaluate(&self, theta: f64) -> f64 {
        horner(&self.coefficients, (theta - self.center) / self.half_width)
    }

    /// Curve values at the two ends of the domain, low end first.
    pub fn range(&self) -> (f64, f64) {
        (self.evaluate(self.domain.0), self.evaluate(self.domain.1))
    }

    /// Bisection for `θ` with `evaluate(θ) = measured`. Measurements beyond
    /// the curve's range are clamped to the nearest end of the domain.
    pub fn invert(&self, measured: f64) -> Result<Inversion> {
        if !measured.is_finite() {
            return Err(Error::InvalidInput("measured value must be finite".into()));
        }
        let (mut a, mut b) = self.domain;
        let (ya, yb) = self.range();
        let (min, max) = if self.increasing { (ya, yb) } else { (yb, ya) };
        let slack = RANGE_SLACK * (max - min);
        if measured < min - slack || measured > max + slack {
            let clamp_low = (measured < min) == self.increasing;
            let estimate = if clamp_low { a } else { b };
            warn!(
                "measurement {measured} outside readout range [{min}, {max}]; clamped to {estimate}"
            );
            return Ok(Inversion {
                estimate,
                extrapolated: true,
            });
        }
        // invariant: the root stays in [a, b]
        let sign = if self.increasing { 1.0 } else { -1.0 };
        while b - a > INVERSION_TOL {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if sign * (self.evaluate(mid) - measured) < 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(Inversion {
            estimate: 0.5 * (a + b),
            extrapolated: false,
        })
    }
}
