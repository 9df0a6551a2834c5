//! Library integrators against the independent reference computations.

mod common;

use common::oracle;
use nmr_probe::dynamics::{evolve_obar, propagate_pair};
use nmr_probe::qfi::qfi_series;
use nmr_probe::{BathParameter, BathSpec, ControlField, SystemSpec};
use proptest::prelude::*;

fn nonzero_control(final_time: f64, samples: usize) -> ControlField {
    ControlField::from_fn(final_time, samples, |t| 0.6 * (1.3 * t).sin() + 0.25).unwrap()
}

#[test]
fn obar_matches_two_time_quadrature() {
    let system = SystemSpec::dephasing(1.0);
    let control = nonzero_control(4.0, 800);
    for &(gc, g, w) in &[(1.0, 0.8, 0.0), (0.7, 0.4, 0.3)] {
        let bath = BathSpec::new(gc, g, w).unwrap();
        let fast = evolve_obar(&system, &bath, &control).unwrap();
        let reference = oracle::obar_quadrature(&system, &bath, &control, 4);
        let err = fast
            .grid_values()
            .zip(&reference)
            .map(|(a, b)| (*a - *b).max_abs())
            .fold(0.0, f64::max);
        eprintln!("Γ={gc} γ={g} Ω={w}: {err:e}");
        assert!(err <= 1e-5, "Γ={gc} γ={g} Ω={w}: {err:e}");
    }
}

fn uncontrolled(gc: f64, g: f64, final_time: f64, samples: usize) -> Vec<nmr_probe::DirectSumState> {
    let system = SystemSpec::dephasing(1.0);
    let bath = BathSpec::new(gc, g, 0.0).unwrap();
    let control = ControlField::zeros(final_time, samples).unwrap();
    let hi = bath.shifted(BathParameter::Gamma, 1e-6);
    propagate_pair(&system, &bath, &hi, &control).unwrap()
}

fn coherence_error(gc: f64, g: f64, final_time: f64, samples: usize) -> f64 {
    let dt = final_time / samples as f64;
    uncontrolled(gc, g, final_time, samples)
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let measured = 2.0 * s.left_density().get(0, 1).norm();
            let exact = oracle::decoherence(gc, g, k as f64 * dt);
            ((measured - exact) / exact).abs()
        })
        .fold(0.0, f64::max)
}

fn qfi_error(gc: f64, g: f64, final_time: f64, samples: usize) -> (f64, f64) {
    let dt = final_time / samples as f64;
    let series = qfi_series(&uncontrolled(gc, g, final_time, samples), 1e-6).unwrap();
    let err = series
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, f)| {
            let exact = oracle::dephasing_qfi(gc, g, k as f64 * dt);
            ((f - exact) / exact).abs()
        })
        .fold(0.0, f64::max);
    (series[0], err)
}

#[test]
fn dephasing_coherence_matches_closed_form() {
    for g in [0.3, 0.8, 1.3] {
        let err = coherence_error(1.0, g, 8.0, 1600);
        assert!(err <= 1e-6, "γ={g}: {err:e}");
    }
}

#[test]
fn dephasing_qfi_matches_closed_form() {
    for g in [0.3, 0.8, 1.3] {
        let (f0, err) = qfi_error(1.0, g, 8.0, 1600);
        assert_eq!(f0, 0.0);
        assert!(err <= 1e-4, "γ={g}: {err:e}");
    }
}

#[test]
fn analytic_module_agrees_with_oracle() {
    let bath = BathSpec::new(0.9, 0.6, 0.0).unwrap();
    for t in [0.0, 0.5, 2.0, 7.5] {
        let d = nmr_probe::analytic::decoherence(&bath, t);
        assert!((d - oracle::decoherence(0.9, 0.6, t)).abs() <= 1e-15);
        let f = nmr_probe::analytic::qfi(&bath, BathParameter::Gamma, t).unwrap();
        let exact = oracle::dephasing_qfi(0.9, 0.6, t);
        assert!((f - exact).abs() <= 1e-12 * exact.max(1e-300), "t={t}: {f} vs {exact}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn coherence_decay_for_random_baths(gc in 0.2f64..1.5, g in 0.2f64..2.0) {
        let err = coherence_error(gc, g, 4.0, 800);
        prop_assert!(err <= 1e-6, "Γ={} γ={}: {:e}", gc, g, err);
    }

    #[test]
    fn qfi_for_random_baths(gc in 0.5f64..1.5, g in 0.3f64..1.5) {
        let (f0, err) = qfi_error(gc, g, 4.0, 800);
        prop_assert_eq!(f0, 0.0);
        prop_assert!(err <= 1e-4, "Γ={} γ={}: {:e}", gc, g, err);
    }
}
