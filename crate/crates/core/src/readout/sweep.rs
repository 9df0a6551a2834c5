//! Seeded parameter sweeps under a fixed control.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::{BathParameter, BathSpec};
use crate::dynamics::{propagate_pair, ControlField, DirectSumState, SystemSpec};
use crate::error::{Error, Result};
use crate::krotov::EnsembleSpec;
use crate::qfi::qfi_series;

/// Where a test value sits relative to the training range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Below,
    InRange,
    Above,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::Below => "below",
            Region::InRange => "in_range",
            Region::Above => "above",
        }
    }
}

/// Uniform sampling interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRange {
    pub low: f64,
    pub high: f64,
    pub count: usize,
}

/// Test values for a validation sweep: `R = [in_range.low, in_range.high]`
/// closed, `below` is `[low, high)` and `above` is `(low, high]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    pub in_range: SampleRange,
    pub above: SampleRange,
    pub below: SampleRange,
    pub seed: u64,
}

impl Default for SweepPlan {
    fn default() -> Self {
        SweepPlan {
            in_range: SampleRange {
                low: 0.4,
                high: 1.2,
                count: 600,
            },
            above: SampleRange {
                low: 1.2,
                high: 1.6,
                count: 200,
            },
            below: SampleRange {
                low: 0.2,
                high: 0.4,
                count: 200,
            },
            seed: 0,
        }
    }
}

impl SweepPlan {
    pub fn validate(&self, parameter: BathParameter) -> Result<()> {
        for (name, r) in [
            ("in_range", &self.in_range),
            ("above", &self.above),
            ("below", &self.below),
        ] {
            if !(r.low.is_finite() && r.high.is_finite() && r.low < r.high) {
                return Err(Error::InvalidInput(format!(
                    "sweep range {name} must satisfy low < high"
                )));
            }
            if parameter.positive() && r.low < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "sweep range {name} must be non-negative for {parameter}"
                )));
            }
        }
        if parameter.positive() && self.below.count > 0 && self.below.low <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "below-range samples of {parameter} must stay positive"
            )));
        }
        Ok(())
    }

    /// Draws all test values, below-range first, then in range, then above.
    /// Identical seeds give identical values.
    pub fn sample(&self) -> Vec<(Region, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::with_capacity(self.below.count + self.in_range.count + self.above.count);
        let b = self.below;
        for _ in 0..b.count {
            out.push((Region::Below, b.low + rng.gen::<f64>() * (b.high - b.low)));
        }
        let r = self.in_range;
        for _ in 0..r.count {
            out.push((Region::InRange, rng.gen_range(r.low..=r.high)));
        }
        let a = self.above;
        for _ in 0..a.count {
            out.push((Region::Above, a.high - rng.gen::<f64>() * (a.high - a.low)));
        }
        out
    }
}

/// One test of a validation sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub index: usize,
    pub region: Region,
    pub value: f64,
    /// `F(t_k)` on the control grid; empty when propagation failed.
    pub qfi: Vec<f64>,
    pub final_qfi: f64,
    pub peak_time: f64,
    /// `max_t F₀(t)` without control.
    pub uncontrolled_peak: f64,
    pub uncontrolled_peak_time: f64,
    pub final_state: Option<DirectSumState<f64>>,
    pub failure: Option<String>,
}

impl SweepRecord {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }

    /// Whether the controlled final QFI beats the uncontrolled peak.
    pub fn beats_uncontrolled(&self) -> bool {
        self.succeeded() && self.final_qfi > self.uncontrolled_peak
    }
}

/// QFI series of one bath under `control` and its final direct-sum state.
pub fn qfi_trajectory(
    system: &SystemSpec<f64>,
    parameter: BathParameter,
    bath: &BathSpec<f64>,
    dx: f64,
    control: &ControlField<f64>,
) -> Result<(Vec<f64>, DirectSumState<f64>)> {
    let hi = bath.shifted(parameter, dx);
    let pair = propagate_pair(system, bath, &hi, control)?;
    let series = qfi_series(&pair, dx)?;
    let last = *pair.last().expect("propagation yields at least one state");
    Ok((series, last))
}

/// Index and value of the largest finite entry.
pub fn argmax(values: &[f64]) -> (usize, f64) {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        })
}

fn sweep_record(
    ensemble: &EnsembleSpec<f64>,
    control: &ControlField<f64>,
    uncontrolled: &ControlField<f64>,
    index: usize,
    region: Region,
    value: f64,
) -> SweepRecord {
    let bath = ensemble.base.with(ensemble.parameter, value);
    let dt = control.dt();
    let run = || -> Result<_> {
        bath.validate()?;
        let (series, last) =
            qfi_trajectory(&ensemble.system, ensemble.parameter, &bath, ensemble.dx, control)?;
        let (free, _) = qfi_trajectory(
            &ensemble.system,
            ensemble.parameter,
            &bath,
            ensemble.dx,
            uncontrolled,
        )?;
        Ok((series, last, free))
    };
    match run() {
        Ok((series, last, free)) => {
            let (k, _) = argmax(&series);
            let (k0, f0) = argmax(&free);
            SweepRecord {
                index,
                region,
                value,
                final_qfi: *series.last().expect("non-empty series"),
                peak_time: k as f64 * dt,
                qfi: series,
                uncontrolled_peak: f0,
                uncontrolled_peak_time: k0 as f64 * dt,
                final_state: Some(last),
                failure: None,
            }
        }
        Err(e) => SweepRecord {
            index,
            region,
            value,
            qfi: Vec::new(),
            final_qfi: f64::NAN,
            peak_time: f64::NAN,
            uncontrolled_peak: f64::NAN,
            uncontrolled_peak_time: f64::NAN,
            final_state: None,
            failure: Some(e.to_string()),
        },
    }
}

/// Propagates every test value of `values` under `control` (and without
/// control for the uncontrolled peak). Failures are recorded per test.
/// Records come back in input order.
pub fn sweep_values(
    ensemble: &EnsembleSpec<f64>,
    control: &ControlField<f64>,
    values: &[(Region, f64)],
) -> Result<Vec<SweepRecord>> {
    let uncontrolled = ControlField::zeros(control.final_time(), control.len())?;
    Ok(values
        .par_iter()
        .enumerate()
        .map(|(i, &(region, value))| sweep_record(ensemble, control, &uncontrolled, i, region, value))
        .collect())
}

/// Seeded validation sweep of the ensemble's target parameter.
pub fn validation_sweep(
    plan: &SweepPlan,
    ensemble: &EnsembleSpec<f64>,
    control: &ControlField<f64>,
) -> Result<Vec<SweepRecord>> {
    plan.validate(ensemble.parameter)?;
    sweep_values(ensemble, control, &plan.sample())
}

/// The two bath parameters held fixed while the target is estimated.
pub fn nuisance_parameters(target: BathParameter) -> [BathParameter; 2] {
    match target {
        BathParameter::Gamma => [BathParameter::GammaCap, BathParameter::OmegaShift],
        BathParameter::GammaCap => [BathParameter::Gamma, BathParameter::OmegaShift],
        BathParameter::OmegaShift => [BathParameter::GammaCap, BathParameter::Gamma],
    }
}

/// Box around the nominal nuisance parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessPlan {
    /// Target-parameter value at which the curves are computed.
    pub target_value: f64,
    /// Half-width of the box in both nuisance parameters.
    pub half_width: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for RobustnessPlan {
    fn default() -> Self {
        RobustnessPlan {
            target_value: 0.8,
            half_width: 0.1,
            samples: 1000,
            seed: 0,
        }
    }
}

/// QFI curve for one nuisance-parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxCurve {
    /// Values of the two nuisance parameters, in [`nuisance_parameters`] order.
    pub nuisance: [f64; 2],
    pub qfi: Vec<f64>,
}

impl BoxCurve {
    pub fn final_qfi(&self) -> f64 {
        *self.qfi.last().expect("non-empty curve")
    }

    pub fn peak_qfi(&self) -> f64 {
        argmax(&self.qfi).1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessResult {
    pub nuisance: [BathParameter; 2],
    pub nominal: BoxCurve,
    /// `(−,−)`, `(−,+)`, `(+,−)`, `(+,+)` corners.
    pub corners: [BoxCurve; 4],
    /// Pointwise minimum and maximum over random points, corners and nominal.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Final QFI of each random sample.
    pub samples: Vec<BoxCurve>,
    /// Random samples whose propagation failed.
    pub failures: Vec<([f64; 2], String)>,
}

/// QFI envelope over a box of nuisance parameters around the ensemble's
/// base bath. The envelope always contains the nominal curve.
pub fn robustness_sweep(
    plan: &RobustnessPlan,
    ensemble: &EnsembleSpec<f64>,
    control: &ControlField<f64>,
) -> Result<RobustnessResult> {
    if !(plan.half_width >= 0.0 && plan.half_width.is_finite()) {
        return Err(Error::InvalidInput("box half-width must be non-negative".into()));
    }
    let target = ensemble.parameter;
    let nuisance = nuisance_parameters(target);
    let nominal_bath = ensemble.base.with(target, plan.target_value);
    let center = [nominal_bath.get(nuisance[0]), nominal_bath.get(nuisance[1])];
    let w = plan.half_width;

    let curve = |point: [f64; 2]| -> Result<BoxCurve> {
        let bath = nominal_bath
            .with(nuisance[0], point[0])
            .with(nuisance[1], point[1]);
        bath.validate()?;
        let (qfi, _) = qfi_trajectory(&ensemble.system, target, &bath, ensemble.dx, control)?;
        Ok(BoxCurve {
            nuisance: point,
            qfi,
        })
    };

    let nominal = curve(center)?;
    let corner_points = [
        [center[0] - w, center[1] - w],
        [center[0] - w, center[1] + w],
        [center[0] + w, center[1] - w],
        [center[0] + w, center[1] + w],
    ];
    let corners: Vec<BoxCurve> = corner_points
        .par_iter()
        .map(|&p| curve(p))
        .collect::<Result<_>>()?;
    let corners: [BoxCurve; 4] = corners.try_into().expect("four corners");

    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let points: Vec<[f64; 2]> = (0..plan.samples)
        .map(|_| {
            [
                center[0] + w * (2.0 * rng.gen::<f64>() - 1.0),
                center[1] + w * (2.0 * rng.gen::<f64>() - 1.0),
            ]
        })
        .collect();
    let outcomes: Vec<(usize, Result<BoxCurve>)> =
        points.par_iter().map(|&p| curve(p)).enumerate().collect();
    let mut samples = Vec::with_capacity(points.len());
    let mut failures = Vec::new();
    for (i, outcome) in outcomes {
        match outcome {
            Ok(c) => samples.push(c),
            Err(e) => failures.push((points[i], e.to_string())),
        }
    }

    let mut lower = nominal.qfi.clone();
    let mut upper = nominal.qfi.clone();
    for c in corners.iter().chain(samples.iter()) {
        for (k, &f) in c.qfi.iter().enumerate() {
            lower[k] = lower[k].min(f);
            upper[k] = upper[k].max(f);
        }
    }
    Ok(RobustnessResult {
        nuisance,
        nominal,
        corners,
        lower,
        upper,
        samples,
        failures,
    })
}
