//! Acceptance criteria for the headline experiment.
//!
//! Runs every subcommand of the binary twice on `headline.cfg` into two
//! scratch directories, then recomputes each statistic from the written
//! CSVs with the reference computations in `common::oracle`. Prints one
//! `[PASS]`/`[FAIL] criterion N` line per criterion and exits non-zero if
//! any fails.

mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use common::oracle;
use nmr_probe::dynamics::{evolve_obar, propagate_pair};
use nmr_probe::experiment::training_final_states;
use nmr_probe::krotov::{terminal_costate, terminal_objective};
use nmr_probe::qfi::qfi_series;
use nmr_probe::config::ExperimentConfig;
use nmr_probe::{BathParameter, BathSpec, ControlField, SystemSpec};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const HEADLINE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../headline.cfg");

struct Outcome {
    criterion: u8,
    passed: bool,
    detail: String,
}

impl Outcome {
    fn report(&self) {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {}: {}", self.criterion, self.detail);
    }
}

/// Wall time of each subcommand in one CLI run.
struct CliRun {
    dir: PathBuf,
    times: BTreeMap<&'static str, Duration>,
    failures: Vec<String>,
}

fn run_all(dir: PathBuf) -> CliRun {
    let mut times = BTreeMap::new();
    let mut failures = Vec::new();
    let out = dir.to_str().unwrap();
    for cmd in common::SUBCOMMANDS {
        let start = Instant::now();
        let o = common::run_cli(&[cmd, "--config", HEADLINE, "--out", out]);
        times.insert(cmd, start.elapsed());
        if !o.status.success() {
            failures.push(format!("{cmd} exited {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr)));
        }
    }
    CliRun { dir, times, failures }
}

fn read_table(path: &Path) -> Vec<BTreeMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let headers = r.headers().unwrap().clone();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            headers.iter().map(String::from).zip(rec.iter().map(String::from)).collect()
        })
        .collect()
}

fn num(row: &BTreeMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap_or_else(|_| panic!("{key} = {:?}", row[key]))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn strictly_monotone(v: &[f64]) -> bool {
    let up = v.windows(2).all(|w| w[1] > w[0]);
    let down = v.windows(2).all(|w| w[1] < w[0]);
    up || down
}

fn uncontrolled_pair(gamma: f64, final_time: f64, samples: usize) -> Vec<nmr_probe::DirectSumState> {
    let system = SystemSpec::dephasing(1.0);
    let bath = BathSpec::new(1.0, gamma, 0.0).unwrap();
    let control = ControlField::zeros(final_time, samples).unwrap();
    propagate_pair(&system, &bath, &bath.shifted(BathParameter::Gamma, 1e-6), &control).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (t_f, n) = (8.0, 1600);
    let mut worst = 0.0f64;
    for g in [0.3, 0.8, 1.3] {
        for (k, s) in uncontrolled_pair(g, t_f, n).iter().enumerate() {
            let measured = 2.0 * s.left_density().get(0, 1).norm();
            let exact = oracle::decoherence(1.0, g, k as f64 * t_f / n as f64);
            worst = worst.max(((measured - exact) / exact).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        criterion: 1,
        passed: worst <= 1e-6 && secs < 1.0,
        detail: format!("coherence relative error {worst:.3e} <= 1e-6, {secs:.2} s < 1 s"),
    }
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let (t_f, n) = (8.0, 1600);
    let mut worst = 0.0f64;
    let mut first = Vec::new();
    for g in [0.3, 0.8, 1.3] {
        let series = qfi_series(&uncontrolled_pair(g, t_f, n), 1e-6).unwrap();
        first.push(series[0]);
        for (k, f) in series.iter().enumerate().skip(1) {
            let exact = oracle::dephasing_qfi(1.0, g, k as f64 * t_f / n as f64);
            worst = worst.max(((f - exact) / exact).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let origin = first.iter().all(|&f| f == 0.0);
    Outcome {
        criterion: 2,
        passed: worst <= 1e-4 && origin && secs < 5.0,
        detail: format!("QFI relative error {worst:.3e} <= 1e-4, F(0) = 0: {origin}, {secs:.2} s < 5 s"),
    }
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let system = SystemSpec::dephasing(1.0);
    let control =
        ControlField::from_fn(8.0, 1600, |t| 0.6 * (1.3 * t).sin() + 0.25).unwrap();
    let mut worst = 0.0f64;
    for bath in [BathSpec::new(1.0, 0.8, 0.0).unwrap(), BathSpec::new(0.7, 0.4, 0.3).unwrap()] {
        let fast = evolve_obar(&system, &bath, &control).unwrap();
        let reference = oracle::obar_quadrature(&system, &bath, &control, 4);
        let err = fast
            .grid_values()
            .zip(&reference)
            .map(|(a, b)| (*a - *b).max_abs())
            .fold(0.0, f64::max);
        worst = worst.max(err);
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        criterion: 3,
        passed: worst <= 1e-5 && secs < 10.0,
        detail: format!("memory operator max-norm error {worst:.3e} <= 1e-5, {secs:.2} s < 10 s"),
    }
}

/// Largest step-to-step increase of the objective column.
fn max_increase(path: &Path) -> f64 {
    let j: Vec<f64> = read_table(path).iter().map(|r| num(r, "objective")).collect();
    j.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
}

/// Terminal co-state against central differences of the ensemble `J_T` at
/// ten random (member, block, entry, real or imaginary part) probes of the
/// trained final states. Error is relative to the member's co-state
/// max-norm; the step tracks `dx`, which sets the curvature scale.
fn costate_probe_error(cfg: &ExperimentConfig, control: &ControlField) -> f64 {
    let dx = cfg.ensemble.dx;
    let finals = training_final_states(cfg, control).unwrap();
    let n = finals.len();
    let step = 1e-3 * dx;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let j = rng.gen_range(0..n);
        let block = rng.gen_range(0..2);
        let i = rng.gen_range(0..4);
        let unit = if rng.gen_bool(0.5) { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 1.0) };
        let (left, right) = terminal_costate(&finals[j], dx, n).unwrap();
        let scale = left.iter().chain(&right).map(|c| c.norm()).fold(0.0, f64::max);
        let chi = if block == 0 { left } else { right };
        let shifted = |sign: f64| {
            let mut states = finals.clone();
            let s = &mut states[j];
            let v = if block == 0 { &mut s.left } else { &mut s.right };
            v[i] += unit * (sign * step);
            terminal_objective(&states, dx).unwrap()
        };
        let fd = (shifted(1.0) - shifted(-1.0)) / (2.0 * step);
        let predicted = -(chi[i].conj() * unit).re;
        worst = worst.max((fd - predicted).abs() / scale);
    }
    worst
}

fn criterion_4(cfg: &ExperimentConfig, run: &CliRun) -> Outcome {
    let ensemble = max_increase(&run.dir.join("trace.csv"));
    let single = max_increase(&run.dir.join("trace_single.csv"));
    let control = nmr_probe::io::read_control(&run.dir.join("control.csv")).unwrap();
    let probe = costate_probe_error(cfg, &control);
    let secs = run.times["train"].as_secs_f64();
    Outcome {
        criterion: 4,
        passed: ensemble <= 1e-8 && single <= 1e-8 && probe <= 1e-5 && secs <= 900.0,
        detail: format!(
            "J max increase {ensemble:.3e} (single point {single:.3e}) <= 1e-8, \
             co-state probe error {probe:.3e} <= 1e-5, train {secs:.0} s <= 900 s"
        ),
    }
}

fn in_range(rows: &[BTreeMap<String, String>]) -> Vec<&BTreeMap<String, String>> {
    rows.iter().filter(|r| r["region"] == "in_range").collect()
}

fn criterion_5(run: &CliRun) -> Outcome {
    let rows = read_table(&run.dir.join("sweep.csv"));
    let inside = in_range(&rows);
    let beats = inside
        .iter()
        .filter(|r| num(r, "final_qfi") > num(r, "uncontrolled_peak"))
        .count();
    let fraction = beats as f64 / inside.len() as f64;
    let ens = mean(&inside.iter().map(|r| num(r, "final_qfi")).collect::<Vec<_>>());
    let single = mean(&inside.iter().map(|r| num(r, "single_point_final_qfi")).collect::<Vec<_>>());
    let secs = run.times["test"].as_secs_f64();
    Outcome {
        criterion: 5,
        passed: inside.len() == 600 && fraction >= 0.9 && ens > single && secs <= 600.0,
        detail: format!(
            "{beats}/{} in-range tests beat the uncontrolled peak ({fraction:.3} >= 0.9), \
             mean F(T_f) {ens:.4} > single-point {single:.4}, test {secs:.0} s <= 600 s",
            inside.len()
        ),
    }
}

fn criterion_6(run: &CliRun) -> Outcome {
    let rows = read_table(&run.dir.join("sweep.csv"));
    let inside = in_range(&rows);
    let xs: Vec<f64> = inside.iter().map(|r| num(r, "value")).collect();
    let ys: Vec<f64> = inside.iter().map(|r| num(r, "final_qfi")).collect();
    let rho = oracle::spearman(&xs, &ys);
    Outcome {
        criterion: 6,
        passed: rho <= -0.9,
        detail: format!("in-range Spearman {rho:.4} <= -0.9"),
    }
}

fn criterion_7(run: &CliRun) -> Outcome {
    let rows = read_table(&run.dir.join("robustness_envelope.csv"));
    let ratios: Vec<f64> = (1..=4)
        .map(|c| {
            let curve: Vec<f64> = rows.iter().map(|r| num(r, &format!("corner_{c}"))).collect();
            curve[curve.len() - 1] / curve.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let worst = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let secs = run.times["robustness"].as_secs_f64();
    Outcome {
        criterion: 7,
        passed: worst >= 0.8 && secs <= 600.0,
        detail: format!("corner F(T_f) / max F {ratios:.4?}, min {worst:.4} >= 0.8, robustness {secs:.0} s <= 600 s"),
    }
}

fn criterion_8(run: &CliRun) -> Outcome {
    let rows = read_table(&run.dir.join("closeness.csv"));
    let min_eta = rows
        .iter()
        .flat_map(|r| [num(r, "sigma_z_eta"), num(r, "m_opt_eta")])
        .fold(f64::INFINITY, f64::min);
    let inside = in_range(&rows);
    let opt = mean(&inside.iter().map(|r| num(r, "m_opt_eta")).collect::<Vec<_>>());
    let sz = mean(&inside.iter().map(|r| num(r, "sigma_z_eta")).collect::<Vec<_>>());
    Outcome {
        criterion: 8,
        passed: rows.len() == 1000 && min_eta >= -1e-6 && opt <= 0.05 && opt < sz,
        detail: format!(
            "min eta {min_eta:.3e} >= -1e-6 over {} tests, in-range mean eta M_opt {opt:.4} <= 0.05 \
             and < sigma_z {sz:.4}",
            rows.len()
        ),
    }
}

fn criterion_9(run: &CliRun) -> Outcome {
    let curve = |name: &str| -> Vec<f64> {
        read_table(&run.dir.join(format!("readout_{name}_curve.csv")))
            .iter()
            .map(|r| num(r, "fitted"))
            .collect()
    };
    let sz_monotone = strictly_monotone(&curve("sigma_z"));
    let opt_monotone = strictly_monotone(&curve("m_opt"));
    let rows = read_table(&run.dir.join("readout_sigma_z.csv"));
    let worst = rows
        .iter()
        .map(|r| (num(r, "estimate") - num(r, "value")).abs())
        .fold(0.0, f64::max);
    Outcome {
        criterion: 9,
        passed: sz_monotone && opt_monotone && rows.len() == 200 && worst <= 1e-2,
        detail: format!(
            "sigma_z readout monotone: {sz_monotone}, max inversion error {worst:.3e} <= 1e-2 \
             over {} points, M_opt readout monotone: {opt_monotone}",
            rows.len()
        ),
    }
}

fn criterion_10(a: &CliRun, b: &CliRun) -> Outcome {
    let (fa, fb) = (common::csv_files(&a.dir), common::csv_files(&b.dir));
    let differing: Vec<&str> = fa
        .iter()
        .zip(&fb)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    let same_names = fa.iter().map(|f| &f.0).eq(fb.iter().map(|f| &f.0));
    Outcome {
        criterion: 10,
        passed: !fa.is_empty() && same_names && differing.is_empty(),
        detail: format!(
            "{} CSV files from two runs of every subcommand, differing: {differing:?}",
            fa.len()
        ),
    }
}

fn main() {
    let cfg = ExperimentConfig::load(Path::new(HEADLINE)).unwrap();
    let mut outcomes = Vec::new();
    let mut record = |o: Outcome| {
        o.report();
        outcomes.push(o.passed);
    };

    record(criterion_1());
    record(criterion_2());
    record(criterion_3());

    let scratch = tempfile::tempdir().unwrap();
    let a = run_all(scratch.path().join("a"));
    let b = run_all(scratch.path().join("b"));
    for f in a.failures.iter().chain(&b.failures) {
        println!("subcommand failed: {f}");
    }
    for (cmd, t) in &a.times {
        println!("  {cmd}: {:.1} s", t.as_secs_f64());
    }

    record(criterion_4(&cfg, &a));
    record(criterion_5(&a));
    record(criterion_6(&a));
    record(criterion_7(&a));
    record(criterion_8(&a));
    record(criterion_9(&a));
    record(criterion_10(&a, &b));

    let ok = a.failures.is_empty() && b.failures.is_empty() && outcomes.iter().all(|&p| p);
    println!("acceptance: {}", if ok { "all criteria passed" } else { "FAILED" });
    if !ok {
        std::process::exit(1);
    }
}
