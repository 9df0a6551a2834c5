//! Experiment runners behind the CLI subcommands.
//!
//! Each runner returns its data together with the acceptance checks it is
//! responsible for; the CLI persists both, the acceptance suite asserts them.

use log::info;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic;
use crate::bath::BathParameter;
use crate::config::ExperimentConfig;
use crate::dynamics::{propagate_pair, ControlField, DirectSumState};
use crate::error::{Error, Result};
use crate::krotov::{single_point_train, train, OptimizationTrace};
use crate::linalg::Mat2;
use crate::qfi::{qfi_series, MeasurementObservable, ObservableFit, CRB_TOL};
use crate::readout::{
    argmax, closeness, optimal_measurement, qfi_trajectory, robustness_sweep, spearman,
    sweep_values, validation_sweep, Closeness, Inversion, ReadoutCurve, Region,
    RobustnessResult, SweepRecord,
};

/// Outcome of one acceptance threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub relation: &'static str,
    pub threshold: f64,
}

impl Check {
    pub fn new(name: &str, value: f64, relation: &'static str, threshold: f64) -> Self {
        let passed = match relation {
            "<=" => value <= threshold,
            "<" => value < threshold,
            ">=" => value >= threshold,
            ">" => value > threshold,
            "==" => value == threshold,
            _ => unreachable!("unknown relation {relation}"),
        };
        Check {
            name: name.to_string(),
            passed,
            value,
            relation,
            threshold,
        }
    }

    pub fn flag(name: &str, passed: bool) -> Self {
        Check {
            name: name.to_string(),
            passed,
            value: if passed { 1.0 } else { 0.0 },
            relation: "==",
            threshold: 1.0,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] {}: {} {} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.relation,
            self.threshold
        )
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Largest relative deviation over points where the reference is positive.
fn max_relative_error(values: &[f64], reference: &[f64]) -> f64 {
    values
        .iter()
        .zip(reference)
        .filter(|(_, &r)| r > 0.0)
        .map(|(&v, &r)| ((v - r) / r).abs())
        .fold(0.0, f64::max)
}

fn uncontrolled(cfg: &ExperimentConfig) -> Result<ControlField<f64>> {
    ControlField::zeros(cfg.ensemble.final_time, cfg.ensemble.sample_count)
}

/// Whether the closed-form dephasing oracle applies to this configuration.
fn analytic_applies(cfg: &ExperimentConfig, control: &ControlField<f64>) -> bool {
    cfg.bath.omega_shift == 0.0
        && cfg.ensemble.parameter != BathParameter::OmegaShift
        && cfg.system.initial_state == crate::dynamics::InitialState::Plus
        && control.samples().iter().all(|&c| c == 0.0)
}

fn analytic_curve(cfg: &ExperimentConfig, value: f64, times: &[f64]) -> Vec<f64> {
    let bath = cfg.bath.with(cfg.ensemble.parameter, value);
    times
        .iter()
        .map(|&t| analytic::qfi(&bath, cfg.ensemble.parameter, t).unwrap_or(f64::NAN))
        .collect()
}

fn grid_times(control: &ControlField<f64>) -> Vec<f64> {
    (0..=control.len()).map(|k| k as f64 * control.dt()).collect()
}

// ---------------------------------------------------------------- propagate

#[derive(Debug, Clone)]
pub struct PropagateCurve {
    pub value: f64,
    pub states: Vec<DirectSumState<f64>>,
    pub qfi: Vec<f64>,
    pub analytic_qfi: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct PropagateReport {
    pub times: Vec<f64>,
    pub curves: Vec<PropagateCurve>,
    pub checks: Vec<Check>,
}

/// Density and QFI series for each configured value under `control`
/// (uncontrolled when `None`).
pub fn run_propagate(
    cfg: &ExperimentConfig,
    control: Option<&ControlField<f64>>,
) -> Result<PropagateReport> {
    let zero = uncontrolled(cfg)?;
    let control = control.unwrap_or(&zero);
    let times = grid_times(control);
    let system = cfg.system_spec();
    let parameter = cfg.ensemble.parameter;
    let dx = cfg.ensemble.dx;
    let with_oracle = analytic_applies(cfg, control);
    let curves = cfg
        .scan
        .propagate_values
        .par_iter()
        .map(|&value| {
            let lo = cfg.bath.with(parameter, value);
            let states = propagate_pair(&system, &lo, &lo.shifted(parameter, dx), control)?;
            let qfi = qfi_series(&states, dx)?;
            let analytic_qfi = with_oracle.then(|| analytic_curve(cfg, value, &times));
            Ok(PropagateCurve {
                value,
                states,
                qfi,
                analytic_qfi,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut checks = vec![Check::new(
        "F(0) = 0",
        curves.iter().map(|c| c.qfi[0].abs()).fold(0.0, f64::max),
        "==",
        0.0,
    )];
    let peaks: Vec<f64> = curves.iter().map(|c| times[argmax(&c.qfi).0]).collect();
    if peaks.len() >= 2 {
        let spread = peaks.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - peaks.iter().cloned().fold(f64::INFINITY, f64::min);
        checks.push(Check::new("peak-time spread", spread, ">", 0.0));
    }
    if with_oracle {
        let err = curves
            .iter()
            .map(|c| max_relative_error(&c.qfi, c.analytic_qfi.as_ref().expect("oracle")))
            .fold(0.0, f64::max);
        checks.push(Check::new("analytic QFI relative error", err, "<=", 1e-4));
    }
    Ok(PropagateReport {
        times,
        curves,
        checks,
    })
}

// ---------------------------------------------------------------- qfi-scan

#[derive(Debug, Clone, Serialize)]
pub struct ScanPeak {
    pub value: f64,
    pub peak_time: f64,
    pub peak_qfi: f64,
    pub analytic_peak_time: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ScanReport {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `normalized[i][k]`: `F_i(t_k) / max_t F_i`.
    pub normalized: Vec<Vec<f64>>,
    pub peaks: Vec<ScanPeak>,
    pub checks: Vec<Check>,
}

/// Uncontrolled QFI over the scan grid, each curve scaled by its maximum.
pub fn run_qfi_scan(cfg: &ExperimentConfig) -> Result<ScanReport> {
    let control = uncontrolled(cfg)?;
    let times = grid_times(&control);
    let values = cfg.scan_values();
    let system = cfg.system_spec();
    let with_oracle = analytic_applies(cfg, &control);
    let series = values
        .par_iter()
        .map(|&v| {
            let bath = cfg.bath.with(cfg.ensemble.parameter, v);
            qfi_trajectory(&system, cfg.ensemble.parameter, &bath, cfg.ensemble.dx, &control)
                .map(|(s, _)| s)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut normalized = Vec::with_capacity(values.len());
    let mut peaks = Vec::with_capacity(values.len());
    for (&value, s) in values.iter().zip(&series) {
        let (k, peak) = argmax(s);
        normalized.push(s.iter().map(|f| f / peak).collect::<Vec<_>>());
        let analytic_peak_time = with_oracle.then(|| {
            let a = analytic_curve(cfg, value, &times);
            times[argmax(&a).0]
        });
        peaks.push(ScanPeak {
            value,
            peak_time: times[k],
            peak_qfi: peak,
            analytic_peak_time,
        });
    }
    let dt = control.dt();
    let mut checks = vec![
        Check::flag(
            "peak locus finite",
            peaks.iter().all(|p| p.peak_time.is_finite() && p.peak_qfi > 0.0),
        ),
        Check::flag(
            "normalized values in [0, 1]",
            normalized
                .iter()
                .flatten()
                .all(|v| (0.0..=1.0).contains(v)),
        ),
    ];
    if with_oracle {
        let worst = peaks
            .iter()
            .map(|p| (p.peak_time - p.analytic_peak_time.expect("oracle")).abs())
            .fold(0.0, f64::max);
        checks.push(Check::new("peak locus deviation from oracle", worst, "<=", dt));
    }
    Ok(ScanReport {
        times,
        values,
        normalized,
        peaks,
        checks,
    })
}

// ---------------------------------------------------------------- train

#[derive(Debug, Clone)]
pub struct TrainedControl {
    pub control: ControlField<f64>,
    pub trace: OptimizationTrace,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub ensemble: TrainedControl,
    pub single_point: TrainedControl,
    /// Mean member `F(T_f)` without control.
    pub uncontrolled_mean_final_qfi: f64,
    pub checks: Vec<Check>,
}

impl TrainReport {
    pub fn final_mean_qfi(&self) -> f64 {
        self.ensemble.trace.last().map_or(f64::NAN, |r| r.mean_qfi())
    }
}

fn member_final_qfi(cfg: &ExperimentConfig, control: &ControlField<f64>) -> Result<Vec<f64>> {
    let e = cfg.ensemble_spec();
    e.values
        .par_iter()
        .map(|&v| {
            let bath = e.base.with(e.parameter, v);
            qfi_trajectory(&e.system, e.parameter, &bath, e.dx, control)
                .map(|(s, _)| *s.last().expect("non-empty"))
        })
        .collect()
}

/// Ensemble training plus the single-point baseline at the midpoint.
pub fn run_train(cfg: &ExperimentConfig) -> Result<TrainReport> {
    let ensemble = cfg.ensemble_spec();
    let config = cfg.krotov_config()?;
    info!("training on {} members", ensemble.len());
    let (control, trace) = train(&ensemble, &config)?;
    info!(
        "ensemble training stopped after {} iterations ({:?})",
        trace.iterations(),
        trace.stop_reason
    );
    let (single_control, single_trace) =
        single_point_train(&ensemble, cfg.ensemble.midpoint, &config)?;
    let uncontrolled_mean_final_qfi = mean(member_final_qfi(cfg, &uncontrolled(cfg)?)?);

    let slack = config.monotonic_slack;
    let last = trace.last().expect("trace has the initial record");
    let n = control.len();
    let checks = vec![
        Check::new("ensemble J max increase", trace.max_increase().max(-f64::MAX), "<=", slack),
        Check::new(
            "single-point J max increase",
            single_trace.max_increase().max(-f64::MAX),
            "<=",
            slack,
        ),
        Check::new(
            "trained mean F(T_f) minus uncontrolled",
            last.mean_qfi() - uncontrolled_mean_final_qfi,
            ">",
            0.0,
        ),
        Check::new(
            "control endpoint magnitude",
            control.sample(0).abs().max(control.sample(n - 1).abs()),
            "==",
            0.0,
        ),
    ];
    Ok(TrainReport {
        ensemble: TrainedControl { control, trace },
        single_point: TrainedControl {
            control: single_control,
            trace: single_trace,
        },
        uncontrolled_mean_final_qfi,
        checks,
    })
}

// ---------------------------------------------------------------- test

#[derive(Debug, Clone)]
pub struct TestReport {
    pub records: Vec<SweepRecord>,
    /// In-range records under the single-point control, same values.
    pub single_point_records: Vec<SweepRecord>,
    pub dx_halving: DxHalving,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DxHalving {
    pub value: f64,
    pub final_qfi: f64,
    pub final_qfi_half_dx: f64,
    pub relative_change: f64,
}

fn in_range(records: &[SweepRecord]) -> impl Iterator<Item = &SweepRecord> {
    records
        .iter()
        .filter(|r| r.region == Region::InRange && r.succeeded())
}

/// Validation sweep in, above and below the training range.
pub fn run_test(
    cfg: &ExperimentConfig,
    control: &ControlField<f64>,
    single_point: &ControlField<f64>,
) -> Result<TestReport> {
    let ensemble = cfg.ensemble_spec();
    let records = validation_sweep(&cfg.sweep_plan(), &ensemble, control)?;
    let in_values: Vec<(Region, f64)> = in_range(&records).map(|r| (r.region, r.value)).collect();
    let mut single_point_records = sweep_values(&ensemble, single_point, &in_values)?;
    // sweep_values numbers from zero; keep the sweep's indices
    for (r, orig) in single_point_records.iter_mut().zip(in_range(&records)) {
        r.index = orig.index;
    }

    let probe = in_range(&records)
        .next()
        .ok_or_else(|| Error::InvalidInput("sweep has no in-range tests".into()))?;
    let bath = ensemble.base.with(ensemble.parameter, probe.value);
    let (half, _) =
        qfi_trajectory(&ensemble.system, ensemble.parameter, &bath, ensemble.dx / 2.0, control)?;
    let half = *half.last().expect("non-empty");
    let dx_halving = DxHalving {
        value: probe.value,
        final_qfi: probe.final_qfi,
        final_qfi_half_dx: half,
        relative_change: ((half - probe.final_qfi) / probe.final_qfi).abs(),
    };

    let inside: Vec<&SweepRecord> = in_range(&records).collect();
    let wins = inside.iter().filter(|r| r.beats_uncontrolled()).count();
    let fraction = wins as f64 / inside.len().max(1) as f64;
    let ensemble_mean = mean(inside.iter().map(|r| r.final_qfi));
    let single_mean = mean(
        single_point_records
            .iter()
            .filter(|r| r.succeeded())
            .map(|r| r.final_qfi),
    );
    let xs: Vec<f64> = inside.iter().map(|r| r.value).collect();
    let ys: Vec<f64> = inside.iter().map(|r| r.final_qfi).collect();
    let rho = spearman(&xs, &ys);
    let failures = records.iter().filter(|r| !r.succeeded()).count()
        + single_point_records.iter().filter(|r| !r.succeeded()).count();
    let checks = vec![
        Check::new("in-range fraction beating uncontrolled peak", fraction, ">=", 0.9),
        Check::new(
            "in-range mean F(T_f) ensemble minus single-point",
            ensemble_mean - single_mean,
            ">",
            0.0,
        ),
        Check::new("in-range Spearman(value, F(T_f))", rho, "<=", -0.9),
        Check::new("dx halving relative change", dx_halving.relative_change, "<=", 1e-3),
        Check::new("failed propagations", failures as f64, "==", 0.0),
    ];
    Ok(TestReport {
        records,
        single_point_records,
        dx_halving,
        checks,
    })
}

// ---------------------------------------------------------------- robustness

#[derive(Debug, Clone)]
pub struct RobustnessReport {
    pub result: RobustnessResult,
    pub times: Vec<f64>,
    pub checks: Vec<Check>,
}

pub fn run_robustness(
    cfg: &ExperimentConfig,
    control: &ControlField<f64>,
) -> Result<RobustnessReport> {
    let result = robustness_sweep(&cfg.robustness_plan(), &cfg.ensemble_spec(), control)?;
    let mut checks: Vec<Check> = result
        .corners
        .iter()
        .enumerate()
        .map(|(i, c)| {
            Check::new(
                &format!(
                    "corner {} ({}, {}) F(T_f) / max F",
                    i + 1,
                    c.nuisance[0],
                    c.nuisance[1]
                ),
                c.final_qfi() / c.peak_qfi(),
                ">=",
                0.8,
            )
        })
        .collect();
    let contains = result
        .nominal
        .qfi
        .iter()
        .zip(result.lower.iter().zip(&result.upper))
        .all(|(v, (lo, hi))| lo <= v && v <= hi);
    checks.push(Check::flag("envelope contains nominal", contains));
    checks.push(Check::new(
        "failed box samples",
        result.failures.len() as f64,
        "==",
        0.0,
    ));
    Ok(RobustnessReport {
        times: grid_times(control),
        result,
        checks,
    })
}

// ---------------------------------------------------------------- measure

/// Final direct-sum states of the training members under `control`.
pub fn training_final_states(
    cfg: &ExperimentConfig,
    control: &ControlField<f64>,
) -> Result<Vec<DirectSumState<f64>>> {
    let e = cfg.ensemble_spec();
    e.values
        .par_iter()
        .map(|&v| {
            let bath = e.base.with(e.parameter, v);
            qfi_trajectory(&e.system, e.parameter, &bath, e.dx, control).map(|(_, s)| s)
        })
        .collect()
}

/// `M_opt` for the trained control, chosen on the training states.
pub fn optimal_observable(
    cfg: &ExperimentConfig,
    control: &ControlField<f64>,
) -> Result<ObservableFit<f64>> {
    optimal_measurement(&training_final_states(cfg, control)?, cfg.ensemble.dx)
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosenessRow {
    pub index: usize,
    pub region: Region,
    pub value: f64,
    pub sigma_z: Closeness,
    pub optimized: Closeness,
}

#[derive(Debug, Clone)]
pub struct MeasureReport {
    pub observable: ObservableFit<f64>,
    pub rows: Vec<ClosenessRow>,
    pub mean_eta_sigma_z: f64,
    pub mean_eta_optimized: f64,
    pub checks: Vec<Check>,
}

/// CRB closeness of `σ_z` and `M_opt` over the validation sweep.
pub fn run_measure(cfg: &ExperimentConfig, control: &ControlField<f64>) -> Result<MeasureReport> {
    let observable = optimal_observable(cfg, control)?;
    let m_opt = observable.observable.matrix();
    let sz: Mat2<f64> = MeasurementObservable::sigma_z().matrix();
    let records = validation_sweep(&cfg.sweep_plan(), &cfg.ensemble_spec(), control)?;
    let dx = cfg.ensemble.dx;
    let rows = records
        .iter()
        .filter_map(|r| r.final_state.as_ref().map(|s| (r, s)))
        .map(|(r, s)| {
            Ok(ClosenessRow {
                index: r.index,
                region: r.region,
                value: r.value,
                sigma_z: closeness(s, dx, &sz)?,
                optimized: closeness(s, dx, &m_opt)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let inside = || rows.iter().filter(|r| r.region == Region::InRange);
    let mean_eta_sigma_z = mean(inside().map(|r| r.sigma_z.eta));
    let mean_eta_optimized = mean(inside().map(|r| r.optimized.eta));
    let min_eta = rows
        .iter()
        .flat_map(|r| [r.sigma_z.eta, r.optimized.eta])
        .fold(f64::INFINITY, f64::min);
    let min_eta_in_range = inside()
        .flat_map(|r| [r.sigma_z.eta, r.optimized.eta])
        .fold(f64::INFINITY, f64::min);
    let checks = vec![
        Check::new("min eta in range", min_eta_in_range, ">=", -CRB_TOL),
        Check::new("min eta over all tests", min_eta, ">=", -CRB_TOL),
        Check::new("in-range mean eta (M_opt)", mean_eta_optimized, "<=", 0.05),
        Check::new(
            "in-range mean eta (M_opt) minus (sigma_z)",
            mean_eta_optimized - mean_eta_sigma_z,
            "<",
            0.0,
        ),
    ];
    Ok(MeasureReport {
        observable,
        rows,
        mean_eta_sigma_z,
        mean_eta_optimized,
        checks,
    })
}

// ---------------------------------------------------------------- fit

#[derive(Debug, Clone, Serialize)]
pub struct InversionRow {
    pub value: f64,
    pub measured: f64,
    pub inversion: Inversion,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct ReadoutOutcome {
    pub observable: MeasurementObservable<f64>,
    pub curve: std::result::Result<ReadoutCurve, String>,
    pub rows: Vec<InversionRow>,
    pub max_error: f64,
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub sigma_z: ReadoutOutcome,
    pub optimized: ReadoutOutcome,
    pub checks: Vec<Check>,
}

fn readout(
    observable: MeasurementObservable<f64>,
    training: &[(f64, DirectSumState<f64>)],
    tests: &[(f64, DirectSumState<f64>)],
) -> ReadoutOutcome {
    let a = observable.matrix();
    let expect = |s: &DirectSumState<f64>| (s.left_density() * a).trace().re;
    let pairs: Vec<(f64, f64)> = training.iter().map(|(v, s)| (*v, expect(s))).collect();
    match ReadoutCurve::fit(&pairs) {
        Ok(curve) => {
            let rows: Vec<InversionRow> = tests
                .iter()
                .map(|(v, s)| {
                    let measured = expect(s);
                    let inversion = curve.invert(measured).expect("finite measurement");
                    InversionRow {
                        value: *v,
                        measured,
                        inversion,
                        error: (inversion.estimate - v).abs(),
                    }
                })
                .collect();
            let max_error = rows.iter().map(|r| r.error).fold(0.0, f64::max);
            ReadoutOutcome {
                observable,
                curve: Ok(curve),
                rows,
                max_error,
            }
        }
        Err(e) => ReadoutOutcome {
            observable,
            curve: Err(e.to_string()),
            rows: Vec::new(),
            max_error: f64::INFINITY,
        },
    }
}

/// Readout curves for `σ_z` and `M_opt` fitted on the training points and
/// inverted on an evenly spaced test grid over `R`.
pub fn run_fit(cfg: &ExperimentConfig, control: &ControlField<f64>) -> Result<FitReport> {
    let values = cfg.training_values();
    let finals = training_final_states(cfg, control)?;
    let observable = optimal_measurement(&finals, cfg.ensemble.dx)?.observable;
    let training: Vec<(f64, DirectSumState<f64>)> = values.into_iter().zip(finals).collect();
    let e = cfg.ensemble_spec();
    let tests = cfg
        .readout_test_values()
        .par_iter()
        .map(|&v| {
            let bath = e.base.with(e.parameter, v);
            qfi_trajectory(&e.system, e.parameter, &bath, e.dx, control).map(|(_, s)| (v, s))
        })
        .collect::<Result<Vec<_>>>()?;
    let sigma_z = readout(MeasurementObservable::sigma_z(), &training, &tests);
    let optimized = readout(observable, &training, &tests);
    let checks = vec![
        Check::flag("sigma_z readout monotone", sigma_z.curve.is_ok()),
        Check::new("sigma_z max inversion error", sigma_z.max_error, "<=", 1e-2),
        Check::flag("M_opt readout monotone", optimized.curve.is_ok()),
    ];
    Ok(FitReport {
        sigma_z,
        optimized,
        checks,
    })
}
