//! CSV and JSON persistence.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! value reads back bit-exactly and identical runs give identical files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dynamics::ControlField;
use crate::error::{Error, Result};
use crate::krotov::OptimizationTrace;

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path)?;
    Ok(())
}

/// CSV writer over a buffered file.
pub fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

/// Writes `header` and then one row per element of `rows`.
pub fn write_rows<R, I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: ToString,
{
    let mut w = csv_writer(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.into_iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Control as `t_start,t_end,c`, one row per piecewise-constant interval.
pub fn write_control(path: &Path, control: &ControlField<f64>) -> Result<()> {
    let dt = control.dt();
    let n = control.len();
    write_rows(
        path,
        &["t_start", "t_end", "c"],
        (0..n).map(|k| {
            let end = if k + 1 == n {
                control.final_time()
            } else {
                (k + 1) as f64 * dt
            };
            [k as f64 * dt, end, control.sample(k)]
        }),
    )
}

pub fn read_control(path: &Path) -> Result<ControlField<f64>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut samples = Vec::new();
    let mut final_time = f64::NAN;
    for row in reader.records() {
        let row = row?;
        let field = |i: usize| -> Result<f64> {
            row.get(i)
                .ok_or_else(|| Error::InvalidInput(format!("{}: short row", path.display())))?
                .parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
        };
        final_time = field(1)?;
        samples.push(field(2)?);
    }
    ControlField::new(final_time, samples)
}

/// Per-iteration trace without wall times, which would break byte-level
/// reproducibility; those go to the JSON summary.
pub fn write_trace(path: &Path, trace: &OptimizationTrace) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "iteration",
        "objective",
        "mean_qfi",
        "control_change",
        "lambda_a",
        "retries",
    ])?;
    for r in &trace.records {
        w.write_record([
            r.iteration.to_string(),
            r.objective.to_string(),
            r.mean_qfi().to_string(),
            r.control_change.to_string(),
            r.lambda_a.to_string(),
            r.retries.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Final QFI of every member at every iteration, long format.
pub fn write_member_trace(path: &Path, trace: &OptimizationTrace, values: &[f64]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["iteration", "member", "value", "final_qfi"])?;
    for r in &trace.records {
        for (j, f) in r.member_qfi.iter().enumerate() {
            w.write_record([
                r.iteration.to_string(),
                j.to_string(),
                values.get(j).map_or(String::new(), f64::to_string),
                f.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

/// Provenance record written next to every subcommand's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub subcommand: String,
    pub version: String,
    pub seed: u64,
    /// sha256 of every input file, keyed by path.
    pub inputs: Vec<(String, String)>,
    pub outputs: Vec<String>,
    pub wall_time_seconds: f64,
}

impl Manifest {
    pub fn new(subcommand: &str, seed: u64) -> Self {
        Manifest {
            subcommand: subcommand.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            wall_time_seconds: 0.0,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let digest = sha256_file(path)?;
        self.inputs.push((path.display().to_string(), digest));
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) {
        let name = path
            .file_name()
            .map(PathBuf::from)
            .unwrap_or_else(|| path.to_path_buf());
        self.outputs.push(name.display().to_string());
    }
}
