//! `nmr-probe` command-line harness.
//!
//! Every subcommand writes CSV data, a JSON summary with its acceptance
//! checks (`summary_<subcommand>.json`), the resolved config and a manifest
//! (`manifest_<subcommand>.json`) into the output directory.
//! CSV files contain no timing data, so identical inputs give identical bytes.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use log::{info, warn};
use serde::Serialize;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::dynamics::ControlField;
use crate::error::{Error, Result};
use crate::experiment::{self, all_passed, Check, ReadoutOutcome};
use crate::io::{self, Manifest};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_ACCEPTANCE: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Subcommand {
    /// QFI and density time series for the configured propagation values.
    Propagate,
    /// Normalized uncontrolled QFI over a grid of parameter values.
    QfiScan,
    /// Ensemble and single-point Krotov training.
    Train,
    /// Validation sweep in and around the training range.
    Test,
    /// QFI envelope over the nuisance-parameter box.
    Robustness,
    /// Cramér–Rao closeness of σ_z and the optimized observable.
    Measure,
    /// Readout curve fit and inversion.
    Fit,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Propagate => "propagate",
            Subcommand::QfiScan => "qfi-scan",
            Subcommand::Train => "train",
            Subcommand::Test => "test",
            Subcommand::Robustness => "robustness",
            Subcommand::Measure => "measure",
            Subcommand::Fit => "fit",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nmr-probe", version, about = "Bath memory estimation with trained controls")]
pub struct Cli {
    pub command: Subcommand,
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; defaults to the one named in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Exit with status 4 when an acceptance check fails.
    #[arg(long)]
    pub enforce: bool,
    /// Trained ensemble control; defaults to `control.csv` in the output
    /// directory, training one if absent.
    #[arg(long)]
    pub control: Option<PathBuf>,
    /// Single-point control for `test`; defaults to `control_single.csv`.
    #[arg(long)]
    pub single_control: Option<PathBuf>,
}

/// Parses arguments, runs, and maps the outcome to an exit status.
pub fn main_with_args<I, S>(args: I) -> ExitCode
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    match run(&cli) {
        Ok(checks) => {
            for c in &checks {
                println!("{}", c.line());
            }
            if cli.enforce && !all_passed(&checks) {
                ExitCode::from(EXIT_ACCEPTANCE)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_status(&e))
        }
    }
}

pub fn exit_status(e: &Error) -> u8 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

struct Run {
    cfg: ExperimentConfig,
    out: PathBuf,
    manifest: Manifest,
}

impl Run {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn output(&mut self, name: &str) -> PathBuf {
        let p = self.path(name);
        self.manifest.add_output(&p);
        p
    }

    fn summary<S: Serialize>(&mut self, checks: &[Check], details: S) -> Result<()> {
        let path = self.output(&format!("summary_{}.json", self.manifest.subcommand));
        io::write_json(
            &path,
            &json!({
                "subcommand": self.manifest.subcommand,
                "seed": self.cfg.seed,
                "all_passed": all_passed(checks),
                "checks": checks,
                "details": details,
            }),
        )
    }
}

/// Runs one subcommand and returns its acceptance checks.
pub fn run(cli: &Cli) -> Result<Vec<Check>> {
    let started = Instant::now();
    let mut cfg = ExperimentConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let out = match &cli.out {
        Some(dir) => dir.clone(),
        None => cfg.resolve(&cfg.output.directory),
    };
    io::create_dir(&out)?;
    let mut manifest = Manifest::new(cli.command.name(), cfg.seed);
    manifest.add_input(&cli.config)?;
    let mut run = Run { cfg, out, manifest };
    let resolved = run.output("config.resolved.toml");
    std::fs::write(&resolved, run.cfg.to_toml())?;

    info!("{} -> {}", cli.command.name(), run.out.display());
    let checks = match cli.command {
        Subcommand::Propagate => propagate(&mut run, cli)?,
        Subcommand::QfiScan => qfi_scan(&mut run)?,
        Subcommand::Train => train(&mut run)?.0,
        Subcommand::Test => test(&mut run, cli)?,
        Subcommand::Robustness => {
            let control = trained_control(&mut run, cli)?;
            robustness(&mut run, &control)?
        }
        Subcommand::Measure => {
            let control = trained_control(&mut run, cli)?;
            measure(&mut run, &control)?
        }
        Subcommand::Fit => {
            let control = trained_control(&mut run, cli)?;
            fit(&mut run, &control)?
        }
    };
    run.manifest.wall_time_seconds = started.elapsed().as_secs_f64();
    let path = run.path(&format!("manifest_{}.json", cli.command.name()));
    io::write_json(&path, &run.manifest)?;
    Ok(checks)
}

fn load_control(run: &mut Run, path: &Path) -> Result<ControlField<f64>> {
    let control = io::read_control(path)?;
    let e = &run.cfg.ensemble;
    if control.len() != e.sample_count || control.final_time() != e.final_time {
        return Err(Error::Config(format!(
            "{} does not match the {}-sample grid on [0, {}]",
            path.display(),
            e.sample_count,
            e.final_time
        )));
    }
    run.manifest.add_input(path)?;
    Ok(control)
}

fn trained_controls(
    run: &mut Run,
    cli: &Cli,
    with_single: bool,
) -> Result<(ControlField<f64>, Option<ControlField<f64>>)> {
    let ensemble = cli.control.clone().unwrap_or_else(|| run.path("control.csv"));
    let single = cli
        .single_control
        .clone()
        .unwrap_or_else(|| run.path("control_single.csv"));
    let present = ensemble.exists() && (!with_single || single.exists());
    if present {
        let c = load_control(run, &ensemble)?;
        let s = if with_single {
            Some(load_control(run, &single)?)
        } else {
            None
        };
        return Ok((c, s));
    }
    if cli.control.is_some() || cli.single_control.is_some() {
        let missing = if ensemble.exists() { &single } else { &ensemble };
        return Err(Error::Config(format!(
            "control file {} not found",
            missing.display()
        )));
    }
    warn!("no trained control in {}; training now", run.out.display());
    let (_, report) = train(run)?;
    Ok((
        report.ensemble.control,
        with_single.then_some(report.single_point.control),
    ))
}

fn trained_control(run: &mut Run, cli: &Cli) -> Result<ControlField<f64>> {
    Ok(trained_controls(run, cli, false)?.0)
}

fn propagate(run: &mut Run, cli: &Cli) -> Result<Vec<Check>> {
    let control = match &cli.control {
        Some(p) => Some(load_control(run, p)?),
        None => None,
    };
    let report = experiment::run_propagate(&run.cfg, control.as_ref())?;
    let path = run.output("propagate.csv");
    let mut w = io::csv_writer(&path)?;
    w.write_record([
        "value",
        "t",
        "qfi",
        "analytic_qfi",
        "rho00",
        "rho11",
        "rho01_re",
        "rho01_im",
    ])?;
    for curve in &report.curves {
        for (k, t) in report.times.iter().enumerate() {
            let rho = curve.states[k].left_density();
            let analytic = curve
                .analytic_qfi
                .as_ref()
                .map_or(String::new(), |a| a[k].to_string());
            w.write_record([
                curve.value.to_string(),
                t.to_string(),
                curve.qfi[k].to_string(),
                analytic,
                rho.get(0, 0).re.to_string(),
                rho.get(1, 1).re.to_string(),
                rho.get(0, 1).re.to_string(),
                rho.get(0, 1).im.to_string(),
            ])?;
        }
    }
    w.flush()?;
    let peaks: Vec<_> = report
        .curves
        .iter()
        .map(|c| {
            let (k, f) = crate::readout::argmax(&c.qfi);
            json!({"value": c.value, "peak_time": report.times[k], "peak_qfi": f})
        })
        .collect();
    run.summary(&report.checks, json!({ "peaks": peaks }))?;
    Ok(report.checks)
}

fn qfi_scan(run: &mut Run) -> Result<Vec<Check>> {
    let report = experiment::run_qfi_scan(&run.cfg)?;
    let path = run.output("qfi_scan.csv");
    io::write_rows(
        &path,
        &["value", "t", "normalized_qfi"],
        report.values.iter().zip(&report.normalized).flat_map(|(v, row)| {
            report
                .times
                .iter()
                .zip(row)
                .map(move |(t, f)| [*v, *t, *f])
        }),
    )?;
    let path = run.output("peak_locus.csv");
    let mut w = io::csv_writer(&path)?;
    w.write_record(["value", "peak_time", "peak_qfi", "analytic_peak_time"])?;
    for p in &report.peaks {
        w.write_record([
            p.value.to_string(),
            p.peak_time.to_string(),
            p.peak_qfi.to_string(),
            p.analytic_peak_time.map_or(String::new(), |t| t.to_string()),
        ])?;
    }
    w.flush()?;
    run.summary(&report.checks, json!({ "values": report.values.len() }))?;
    Ok(report.checks)
}

fn train(run: &mut Run) -> Result<(Vec<Check>, experiment::TrainReport)> {
    let report = experiment::run_train(&run.cfg)?;
    let values = run.cfg.training_values();
    let p = run.output("control.csv");
    io::write_control(&p, &report.ensemble.control)?;
    let p = run.output("control_single.csv");
    io::write_control(&p, &report.single_point.control)?;
    let p = run.output("trace.csv");
    io::write_trace(&p, &report.ensemble.trace)?;
    let p = run.output("trace_single.csv");
    io::write_trace(&p, &report.single_point.trace)?;
    let p = run.output("member_trace.csv");
    io::write_member_trace(&p, &report.ensemble.trace, &values)?;
    // the hash pins what a control was trained for, so it can be matched later
    let metadata = |values: &[f64], trace: &crate::krotov::OptimizationTrace| -> Result<_> {
        let c = &run.cfg;
        let spec = json!({
            "parameter": c.ensemble.parameter,
            "values": values,
            "dx": c.ensemble.dx,
            "final_time": c.ensemble.final_time,
            "sample_count": c.ensemble.sample_count,
            "bath": c.bath,
            "system": c.system,
        });
        let bytes = serde_json::to_vec(&spec).map_err(|e| Error::Config(e.to_string()))?;
        Ok(json!({
            "ensemble_hash": io::sha256_hex(&bytes),
            "ensemble": spec,
            "krotov": c.krotov,
            "final_objective": trace.last().map(|r| r.objective),
            "iterations": trace.iterations(),
            "stop_reason": trace.stop_reason,
        }))
    };
    let meta = metadata(&values, &report.ensemble.trace)?;
    let meta_single = metadata(&[run.cfg.ensemble.midpoint], &report.single_point.trace)?;
    let p = run.output("control.json");
    io::write_json(&p, &meta)?;
    let p = run.output("control_single.json");
    io::write_json(&p, &meta_single)?;
    let describe = |t: &crate::krotov::OptimizationTrace| {
        json!({
            "iterations": t.iterations(),
            "stop_reason": t.stop_reason,
            "initial_objective": t.first().map(|r| r.objective),
            "final_objective": t.last().map(|r| r.objective),
            "final_mean_qfi": t.last().map(|r| r.mean_qfi()),
        })
    };
    run.summary(
        &report.checks,
        json!({
            "ensemble": describe(&report.ensemble.trace),
            "single_point": describe(&report.single_point.trace),
            "uncontrolled_mean_final_qfi": report.uncontrolled_mean_final_qfi,
        }),
    )?;
    Ok((report.checks.clone(), report))
}

fn test(run: &mut Run, cli: &Cli) -> Result<Vec<Check>> {
    let (control, single) = trained_controls(run, cli, true)?;
    let single = single.expect("requested");
    let report = experiment::run_test(&run.cfg, &control, &single)?;
    let single_by_index: std::collections::HashMap<usize, f64> = report
        .single_point_records
        .iter()
        .filter(|r| r.succeeded())
        .map(|r| (r.index, r.final_qfi))
        .collect();
    let path = run.output("sweep.csv");
    let mut w = io::csv_writer(&path)?;
    w.write_record([
        "index",
        "region",
        "value",
        "final_qfi",
        "peak_time",
        "uncontrolled_peak",
        "uncontrolled_peak_time",
        "single_point_final_qfi",
        "beats_uncontrolled",
        "failure",
    ])?;
    for r in &report.records {
        w.write_record([
            r.index.to_string(),
            r.region.name().to_string(),
            r.value.to_string(),
            r.final_qfi.to_string(),
            r.peak_time.to_string(),
            r.uncontrolled_peak.to_string(),
            r.uncontrolled_peak_time.to_string(),
            single_by_index
                .get(&r.index)
                .map_or(String::new(), f64::to_string),
            r.beats_uncontrolled().to_string(),
            r.failure.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    let stride = run.cfg.sweep.series_stride.max(1);
    let dt = control.dt();
    let path = run.output("sweep_series.csv");
    io::write_rows(
        &path,
        &["index", "t", "qfi"],
        report.records.iter().flat_map(|r| {
            r.qfi
                .iter()
                .enumerate()
                .step_by(stride)
                .map(move |(k, f)| [r.index.to_string(), (k as f64 * dt).to_string(), f.to_string()])
        }),
    )?;
    run.summary(&report.checks, json!({ "dx_halving": report.dx_halving }))?;
    Ok(report.checks)
}

fn robustness(run: &mut Run, control: &ControlField<f64>) -> Result<Vec<Check>> {
    let report = experiment::run_robustness(&run.cfg, control)?;
    let r = &report.result;
    let path = run.output("robustness_envelope.csv");
    let mut w = io::csv_writer(&path)?;
    w.write_record([
        "t", "nominal", "lower", "upper", "corner_1", "corner_2", "corner_3", "corner_4",
    ])?;
    for (k, t) in report.times.iter().enumerate() {
        let mut row = vec![
            t.to_string(),
            r.nominal.qfi[k].to_string(),
            r.lower[k].to_string(),
            r.upper[k].to_string(),
        ];
        row.extend(r.corners.iter().map(|c| c.qfi[k].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    let path = run.output("robustness_samples.csv");
    let names = [r.nuisance[0].name(), r.nuisance[1].name(), "final_qfi", "peak_qfi"];
    io::write_rows(
        &path,
        &names,
        r.samples
            .iter()
            .map(|s| [s.nuisance[0], s.nuisance[1], s.final_qfi(), s.peak_qfi()]),
    )?;
    run.summary(
        &report.checks,
        json!({
            "nuisance": r.nuisance,
            "corners": r.corners.iter().map(|c| json!({
                "nuisance": c.nuisance,
                "final_qfi": c.final_qfi(),
                "peak_qfi": c.peak_qfi(),
            })).collect::<Vec<_>>(),
            "failures": r.failures,
        }),
    )?;
    Ok(report.checks)
}

fn measure(run: &mut Run, control: &ControlField<f64>) -> Result<Vec<Check>> {
    let report = experiment::run_measure(&run.cfg, control)?;
    let path = run.output("closeness.csv");
    let mut w = io::csv_writer(&path)?;
    w.write_record([
        "index",
        "region",
        "value",
        "qfi",
        "sigma_z_delta",
        "sigma_z_eta",
        "m_opt_delta",
        "m_opt_eta",
    ])?;
    for r in &report.rows {
        w.write_record([
            r.index.to_string(),
            r.region.name().to_string(),
            r.value.to_string(),
            r.sigma_z.qfi.to_string(),
            r.sigma_z.delta.to_string(),
            r.sigma_z.eta.to_string(),
            r.optimized.delta.to_string(),
            r.optimized.eta.to_string(),
        ])?;
    }
    w.flush()?;
    run.summary(
        &report.checks,
        json!({
            "observable": report.observable.observable,
            "training_objective": report.observable.objective,
            "mean_eta_sigma_z": report.mean_eta_sigma_z,
            "mean_eta_m_opt": report.mean_eta_optimized,
        }),
    )?;
    Ok(report.checks)
}

fn write_readout(run: &mut Run, name: &str, outcome: &ReadoutOutcome) -> Result<()> {
    let path = run.output(&format!("readout_{name}.csv"));
    let mut w = io::csv_writer(&path)?;
    w.write_record(["value", "measured", "estimate", "extrapolated", "error"])?;
    for r in &outcome.rows {
        w.write_record([
            r.value.to_string(),
            r.measured.to_string(),
            r.inversion.estimate.to_string(),
            r.inversion.extrapolated.to_string(),
            r.error.to_string(),
        ])?;
    }
    w.flush()?;
    if let Ok(curve) = &outcome.curve {
        let path = run.output(&format!("readout_{name}_curve.csv"));
        io::write_rows(&path, &["value", "fitted"], curve.monotone_grid.iter().map(|p| [p.0, p.1]))?;
        let path = run.output(&format!("readout_{name}_training.csv"));
        io::write_rows(&path, &["value", "measured"], curve.training.iter().map(|p| [p.0, p.1]))?;
    }
    Ok(())
}

fn fit(run: &mut Run, control: &ControlField<f64>) -> Result<Vec<Check>> {
    let report = experiment::run_fit(&run.cfg, control)?;
    write_readout(run, "sigma_z", &report.sigma_z)?;
    write_readout(run, "m_opt", &report.optimized)?;
    let describe = |o: &ReadoutOutcome| match &o.curve {
        Ok(c) => json!({
            "observable": o.observable,
            "degree": c.degree,
            "coefficients": c.coefficients,
            "center": c.center,
            "half_width": c.half_width,
            "increasing": c.increasing,
            "residual_rms": c.residual_rms,
            "cv_scores": c.cv_scores,
            "max_inversion_error": o.max_error,
        }),
        Err(e) => json!({ "observable": o.observable, "error": e }),
    };
    run.summary(
        &report.checks,
        json!({
            "sigma_z": describe(&report.sigma_z),
            "m_opt": describe(&report.optimized),
        }),
    )?;
    Ok(report.checks)
}
