// Each integration test uses a different subset of these helpers.
#![allow(dead_code)]

pub mod oracle;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// Reduced experiment: 5 training members, 400 control intervals and five
/// Krotov iterations, so every subcommand finishes in about a second.
pub const SMALL_CONFIG: &str = r#"seed = 3
[system]
level_splitting = 1.0
initial_state = "plus"
[bath]
gamma_cap = 1.0
gamma = 0.8
omega_shift = 0.0
[ensemble]
parameter = "gamma"
low = 0.4
split = 0.7
high = 1.2
count_low = 2
count_high = 3
final_time = 8.0
sample_count = 400
midpoint = 0.8
[krotov]
lambda_a = 100.0
max_iterations = 5
tolerance = 1e-7
initial_guess = { kind = "sine_burst", amplitude = 2.0, frequency = 2.0 }
[sweep]
in_range = { low = 0.4, high = 1.2, count = 20 }
above = { low = 1.2, high = 1.6, count = 5 }
below = { low = 0.2, high = 0.4, count = 5 }
[robustness]
target_value = 0.8
half_width = 0.1
samples = 10
[scan]
propagate_values = [0.3, 1.3]
scan_low = 0.2
scan_high = 1.6
scan_count = 8
[readout]
test_points = 20
[output]
directory = "small-out"
"#;

pub const SUBCOMMANDS: [&str; 7] = [
    "propagate",
    "qfi-scan",
    "train",
    "test",
    "robustness",
    "measure",
    "fit",
];

pub fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("experiment.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

pub fn run_cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nmr-probe"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

/// Every CSV file in `dir` with its bytes, sorted by name.
pub fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}
