//! TOML experiment configuration.
//!
//! Every section rejects unknown keys and the whole file is validated before
//! any computation starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bath::{BathParameter, BathSpec};
use crate::dynamics::{ControlField, InitialState, SystemSpec};
use crate::error::{Error, Result};
use crate::krotov::{split_range, EnsembleSpec, KrotovConfig, UpdateShape, DEFAULT_DX};
use crate::readout::{RobustnessPlan, SampleRange, SweepPlan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    /// ω
    pub level_splitting: f64,
    #[serde(default)]
    pub initial_state: InitialState,
}

/// Training values: either listed explicitly or `count_low` evenly spaced
/// points on `[low, split]` followed by `count_high` on `(split, high]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub parameter: BathParameter,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    pub low: f64,
    pub split: f64,
    pub high: f64,
    pub count_low: usize,
    pub count_high: usize,
    #[serde(default = "default_dx")]
    pub dx: f64,
    pub final_time: f64,
    pub sample_count: usize,
    /// Single training point of the comparison baseline.
    pub midpoint: f64,
}

fn default_dx() -> f64 {
    DEFAULT_DX
}

/// Starting control for training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GuessSection {
    Zero,
    /// `A sin²(πt/T_f) sin(νt + φ)`
    SineBurst {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Control CSV as written by `train`, relative to the config file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrotovSection {
    pub lambda_a: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    #[serde(default = "default_slack")]
    pub monotonic_slack: f64,
    #[serde(default = "default_retries")]
    pub max_retries: usize,
    #[serde(default = "default_true")]
    pub refresh_obar: bool,
    #[serde(default)]
    pub eigenvalue_margin: Option<f64>,
    #[serde(default)]
    pub shape: UpdateShape,
    pub initial_guess: GuessSection,
}

fn default_slack() -> f64 {
    1e-8
}

fn default_retries() -> usize {
    10
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub in_range: SampleRange,
    pub above: SampleRange,
    pub below: SampleRange,
    /// Keep every n-th time step in series outputs.
    #[serde(default = "default_stride")]
    pub series_stride: usize,
}

fn default_stride() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessSection {
    pub target_value: f64,
    pub half_width: f64,
    pub samples: usize,
}

/// Uncontrolled curves for `propagate` and the grid for `qfi-scan`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub propagate_values: Vec<f64>,
    pub scan_low: f64,
    pub scan_high: f64,
    pub scan_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutSection {
    /// Evenly spaced test values over the training range.
    pub test_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
}

/// Complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub system: SystemSection,
    pub bath: BathSpec<f64>,
    pub ensemble: EnsembleSection,
    pub krotov: KrotovSection,
    pub sweep: SweepSection,
    pub robustness: RobustnessSection,
    pub scan: ScanSection,
    pub readout: ReadoutSection,
    pub output: OutputSection,
    /// Directory relative paths resolve against; the config file's parent.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Configuration shipped with the repository.
pub const HEADLINE_CONFIG: &str = include_str!("../../../headline.cfg");

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn headline() -> Self {
        Self::from_toml(HEADLINE_CONFIG).expect("shipped config is valid")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| Error::Config(e.to_string());
        self.system_spec().validate().map_err(cfg)?;
        self.bath.validate().map_err(cfg)?;
        let e = &self.ensemble;
        if self.ensemble.values.is_none() && !(e.low <= e.split && e.split < e.high) {
            return Err(Error::Config("ensemble needs low <= split < high".into()));
        }
        if e.count_low + e.count_high == 0 && e.values.is_none() {
            return Err(Error::Config("ensemble has no training values".into()));
        }
        self.ensemble_spec().validate().map_err(cfg)?;
        self.base_krotov_config().validate().map_err(cfg)?;
        self.sweep_plan()
            .validate(self.ensemble.parameter)
            .map_err(cfg)?;
        if self.sweep.series_stride == 0 {
            return Err(Error::Config("series_stride must be positive".into()));
        }
        let r = &self.robustness;
        if !(r.half_width >= 0.0 && r.half_width.is_finite()) {
            return Err(Error::Config("robustness half_width must be >= 0".into()));
        }
        let s = &self.scan;
        if s.scan_count < 2 || !(s.scan_low < s.scan_high) {
            return Err(Error::Config("scan needs scan_low < scan_high and 2+ points".into()));
        }
        if self.readout.test_points < 2 {
            return Err(Error::Config("readout needs at least 2 test points".into()));
        }
        if let GuessSection::SineBurst {
            amplitude,
            frequency,
            phase,
        } = &self.krotov.initial_guess
        {
            if !(amplitude.is_finite() && frequency.is_finite() && phase.is_finite()) {
                return Err(Error::Config("initial guess parameters must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn system_spec(&self) -> SystemSpec<f64> {
        SystemSpec::dephasing(self.system.level_splitting)
            .with_initial_state(self.system.initial_state.density())
    }

    pub fn training_values(&self) -> Vec<f64> {
        let e = &self.ensemble;
        match &e.values {
            Some(v) => v.clone(),
            None => split_range(e.low, e.split, e.high, e.count_low, e.count_high),
        }
    }

    /// Training range `R`.
    pub fn training_range(&self) -> (f64, f64) {
        let v = self.training_values();
        (v[0], v[v.len() - 1])
    }

    pub fn ensemble_spec(&self) -> EnsembleSpec<f64> {
        let e = &self.ensemble;
        EnsembleSpec {
            parameter: e.parameter,
            values: self.training_values(),
            base: self.bath,
            dx: e.dx,
            system: self.system_spec(),
            final_time: e.final_time,
            sample_count: e.sample_count,
        }
    }

    fn base_krotov_config(&self) -> KrotovConfig<f64> {
        let k = &self.krotov;
        KrotovConfig {
            lambda_a: k.lambda_a,
            max_iterations: k.max_iterations,
            tolerance: k.tolerance,
            shape: k.shape,
            monotonic_slack: k.monotonic_slack,
            max_retries: k.max_retries,
            refresh_obar: k.refresh_obar,
            eigenvalue_margin: k.eigenvalue_margin,
            initial_guess: None,
        }
    }

    pub fn initial_guess(&self) -> Result<ControlField<f64>> {
        let e = &self.ensemble;
        match &self.krotov.initial_guess {
            GuessSection::Zero => ControlField::zeros(e.final_time, e.sample_count),
            GuessSection::SineBurst {
                amplitude,
                frequency,
                phase,
            } => {
                let tf = e.final_time;
                let n = e.sample_count;
                let dt = tf / n as f64;
                let envelope = |t: f64| (std::f64::consts::PI * t / tf).sin().powi(2);
                // envelope taken at the weaker interval edge so c(0) = c(T_f) = 0
                let samples = (0..n)
                    .map(|k| {
                        let (a, b) = (k as f64 * dt, (k + 1) as f64 * dt);
                        let weight = if k == 0 || k + 1 == n {
                            0.0
                        } else {
                            envelope(a).min(envelope(b))
                        };
                        amplitude * weight * (frequency * 0.5 * (a + b) + phase).sin()
                    })
                    .collect();
                ControlField::new(tf, samples)
            }
            GuessSection::File { path } => {
                let control = crate::io::read_control(&self.resolve(path))?;
                if control.len() != e.sample_count || control.final_time() != e.final_time {
                    return Err(Error::Config(format!(
                        "initial guess {} does not match the {}-sample grid on [0, {}]",
                        path.display(),
                        e.sample_count,
                        e.final_time
                    )));
                }
                Ok(control)
            }
        }
    }

    pub fn krotov_config(&self) -> Result<KrotovConfig<f64>> {
        Ok(KrotovConfig {
            initial_guess: Some(self.initial_guess()?),
            ..self.base_krotov_config()
        })
    }

    pub fn sweep_plan(&self) -> SweepPlan {
        SweepPlan {
            in_range: self.sweep.in_range,
            above: self.sweep.above,
            below: self.sweep.below,
            seed: self.seed,
        }
    }

    pub fn robustness_plan(&self) -> RobustnessPlan {
        RobustnessPlan {
            target_value: self.robustness.target_value,
            half_width: self.robustness.half_width,
            samples: self.robustness.samples,
            seed: self.seed,
        }
    }

    pub fn scan_values(&self) -> Vec<f64> {
        let s = &self.scan;
        (0..s.scan_count)
            .map(|i| s.scan_low + (s.scan_high - s.scan_low) * i as f64 / (s.scan_count - 1) as f64)
            .collect()
    }

    /// Evenly spaced readout test values over `R`.
    pub fn readout_test_values(&self) -> Vec<f64> {
        let (lo, hi) = self.training_range();
        let n = self.readout.test_points;
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headline_config_round_trips() {
        let cfg = ExperimentConfig::headline();
        assert_eq!(cfg.training_values().len(), 60);
        assert_eq!(cfg.training_range(), (0.4, 1.2));
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn sine_burst_guess_is_pinned() {
        let cfg = ExperimentConfig::headline();
        let c = cfg.initial_guess().unwrap();
        assert_eq!(c.len(), cfg.ensemble.sample_count);
        assert_eq!(c.sample(0), 0.0);
        assert_eq!(c.sample(c.len() - 1), 0.0);
        assert!(c.max_abs() > 1.0 && c.max_abs() <= 2.0);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = ExperimentConfig::headline()
            .to_toml()
            .replace("[bath]", "[bath]\nextra = 1");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_invalid_values() {
        let mut cfg = ExperimentConfig::headline();
        cfg.bath.gamma = -1.0;
        assert!(matches!(
            ExperimentConfig::from_toml(&cfg.to_toml()),
            Err(Error::Config(_))
        ));
    }
}
