//! Krotov co-states, adjoint propagation and training on small ensembles.

use std::sync::Arc;

use nmr_probe::dynamics::{evolve_obar, propagate_block, GeneratorHistory};
use nmr_probe::krotov::{
    backward_propagate, single_point_train, terminal_costate, terminal_objective, train,
    KrotovOptimizer, StopReason, UpdateShape,
};
use nmr_probe::linalg::{Mat2, Super4, Vec4};
use nmr_probe::{
    BathParameter, BathSpec, ControlField, DirectSumState, EnsembleSpec, Error, KrotovConfig,
    SystemSpec,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pairing(a: &Vec4<f64>, b: &Vec4<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum()
}

fn burst(final_time: f64, samples: usize, amplitude: f64) -> ControlField {
    ControlField::from_fn(final_time, samples, |t| {
        amplitude * (std::f64::consts::PI * t / final_time).sin().powi(2) * (2.0 * t).sin()
    })
    .unwrap()
}

fn small_ensemble() -> EnsembleSpec {
    EnsembleSpec {
        parameter: BathParameter::Gamma,
        values: vec![0.5, 0.7, 0.9, 1.1],
        base: BathSpec::new(1.0, 0.8, 0.0).unwrap(),
        dx: 1e-6,
        system: SystemSpec::dephasing(1.0),
        final_time: 4.0,
        sample_count: 400,
    }
}

/// `burst` with the first and last samples zeroed, as the update shape
/// never moves them.
fn pinned_burst(final_time: f64, samples: usize, amplitude: f64) -> ControlField {
    let mut s = burst(final_time, samples, amplitude).samples().to_vec();
    s[0] = 0.0;
    s[samples - 1] = 0.0;
    ControlField::new(final_time, s).unwrap()
}

fn small_config(iterations: usize) -> KrotovConfig {
    KrotovConfig {
        max_iterations: iterations,
        initial_guess: Some(pinned_burst(4.0, 400, 1.0)),
        ..KrotovConfig::default()
    }
}

fn random_density(rng: &mut ChaCha8Rng) -> Mat2<f64> {
    // Bloch vector strictly inside the ball keeps both eigenvalues ≥ 0.1
    let r = rng.gen_range(0.1..0.8);
    let z: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let s = (1.0 - z * z).sqrt();
    Mat2::density_from_bloch(r * s * phi.cos(), r * s * phi.sin(), r * z)
}

fn random_state(rng: &mut ChaCha8Rng, dx: f64) -> DirectSumState {
    let rho = random_density(rng);
    let direction = Mat2::from_bloch(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    );
    DirectSumState {
        left: rho.vec(),
        right: (rho + direction.scale(0.5 * dx)).vec(),
        time: 1.0,
    }
}

/// Max-norm relative deviation of the co-state from central differences of
/// `J_T` over the real and imaginary part of every direct-sum entry.
fn costate_fd_error(state: &DirectSumState, dx: f64, step: f64) -> f64 {
    let (left, right) = terminal_costate(state, dx, 1).unwrap();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for block in 0..2 {
        let chi = if block == 0 { left } else { right };
        for i in 0..4 {
            for unit in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                let shifted = |sign: f64| {
                    let mut s = *state;
                    let v = if block == 0 { &mut s.left } else { &mut s.right };
                    v[i] += unit * (sign * step);
                    terminal_objective(&[s], dx).unwrap()
                };
                let fd = (shifted(1.0) - shifted(-1.0)) / (2.0 * step);
                let predicted = -(chi[i].conj() * unit).re;
                worst = worst.max((fd - predicted).abs());
                scale = scale.max(predicted.abs());
            }
        }
    }
    worst / scale
}

#[test]
fn costate_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let s = random_state(&mut rng, 1e-4);
        let err = costate_fd_error(&s, 1e-4, 1e-6);
        assert!(err <= 1e-5, "dx = 1e-4: {err:e}");
        // the step must shrink with dx, which sets the curvature scale
        let s = random_state(&mut rng, 1e-6);
        let err = costate_fd_error(&s, 1e-6, 1e-9);
        assert!(err <= 1e-5, "dx = 1e-6: {err:e}");
    }
}

#[test]
fn costate_vanishes_at_stationary_point_and_scales_with_ensemble_size() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rho = random_density(&mut rng).vec();
    let flat = DirectSumState {
        left: rho,
        right: rho,
        time: 0.0,
    };
    let (l, r) = terminal_costate(&flat, 1e-6, 1).unwrap();
    assert!(l.iter().chain(&r).all(|z| z.norm() == 0.0));

    let s = random_state(&mut rng, 1e-4);
    let (l1, r1) = terminal_costate(&s, 1e-4, 5).unwrap();
    let (l2, r2) = terminal_costate(&s, 1e-4, 10).unwrap();
    for (a, b) in l1.iter().chain(&r1).zip(l2.iter().chain(&r2)) {
        assert!((*a - *b * 2.0).norm() <= 1e-12 * a.norm().max(1.0));
    }
}

#[test]
fn costate_is_constant_without_generator() {
    let history = GeneratorHistory::constant(Super4::zero(), Super4::zero(), 0.01, 100);
    let control = burst(1.0, 100, 1.0);
    let chi = [Complex64::new(0.3, 0.1); 4];
    assert!(backward_propagate(&history, &control, &chi)
        .iter()
        .all(|c| *c == chi));
}

#[test]
fn pairing_is_conserved_under_unitary_generator() {
    let system = SystemSpec::dephasing(1.0);
    let history = GeneratorHistory::constant(
        Super4::hamiltonian(&system.drift),
        Super4::hamiltonian(&system.control),
        0.005,
        1600,
    );
    let control = burst(8.0, 1600, 1.5);
    let forward = propagate_block(&history, &control, &system.initial_state.vec()).unwrap();
    let terminal = Mat2::sigma_x().vec();
    let chi = backward_propagate(&history, &control, &terminal);
    let reference = pairing(&chi[0], forward.state(0));
    for k in 0..=control.len() {
        let p = pairing(&chi[k], forward.state(k));
        assert!((p - reference).abs() <= 1e-12, "k={k}: {p} vs {reference}");
    }
}

#[test]
fn pairing_is_conserved_under_dephasing_generator() {
    let system = SystemSpec::dephasing(1.0);
    let bath = BathSpec::new(1.0, 0.6, 0.2).unwrap();
    let control = burst(8.0, 1600, 1.5);
    let history = GeneratorHistory::new(&system, &evolve_obar(&system, &bath, &control).unwrap());
    let forward = propagate_block(&history, &control, &system.initial_state.vec()).unwrap();
    let terminal = (Mat2::sigma_z() + Mat2::sigma_y().scale(0.4)).vec();
    let chi = backward_propagate(&history, &control, &terminal);
    let reference = pairing(&chi[control.len()], forward.final_state());
    for k in 0..=control.len() {
        let p = pairing(&chi[k], forward.state(k));
        assert!(
            (p - reference).abs() <= 1e-6 * reference.abs(),
            "k={k}: {p} vs {reference}"
        );
    }
}

fn frozen_setup() -> (KrotovOptimizer<f64>, ControlField, Arc<Vec<[GeneratorHistory<f64>; 2]>>) {
    let config = KrotovConfig {
        refresh_obar: false,
        ..small_config(1)
    };
    // dx = 1e-4 keeps the rounding noise of J well below the differences taken
    let ensemble = EnsembleSpec {
        dx: 1e-4,
        ..small_ensemble()
    };
    let opt = KrotovOptimizer::new(ensemble, config).unwrap();
    let control = opt.initial_control().unwrap();
    let histories = Arc::new(opt.build_histories(&control).unwrap());
    (opt, control, histories)
}

fn with_sample(control: &ControlField, k: usize, delta: f64) -> ControlField {
    let mut samples = control.samples().to_vec();
    samples[k] += delta;
    ControlField::new(control.final_time(), samples).unwrap()
}

#[test]
fn gradient_matches_finite_differences_of_objective() {
    let (opt, control, histories) = frozen_setup();
    let eval = opt.evaluate(control.clone(), Some(histories.clone())).unwrap();
    let gradient = opt.gradient(&eval, &opt.costates(&eval).unwrap());
    let objective = |c: ControlField| opt.evaluate(c, Some(histories.clone())).unwrap().objective;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-3;
    for _ in 0..10 {
        let k = rng.gen_range(0..control.len());
        let fd = (objective(with_sample(&control, k, h)) - objective(with_sample(&control, k, -h)))
            / (2.0 * h);
        let rel = (fd - gradient[k]).abs() / gradient[k].abs();
        assert!(rel <= 1e-5, "k={k}: adjoint {} vs fd {fd} ({rel:e})", gradient[k]);
    }
}

#[test]
fn directional_derivative_matches_gradient() {
    let (opt, control, histories) = frozen_setup();
    let eval = opt.evaluate(control.clone(), Some(histories.clone())).unwrap();
    let gradient = opt.gradient(&eval, &opt.costates(&eval).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let direction: Vec<f64> = (0..control.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let predicted: f64 = gradient.iter().zip(&direction).map(|(g, d)| g * d).sum();
    let moved = |eps: f64| {
        let samples = control
            .samples()
            .iter()
            .zip(&direction)
            .map(|(c, d)| c + eps * d)
            .collect();
        let c = ControlField::new(control.final_time(), samples).unwrap();
        opt.evaluate(c, Some(histories.clone())).unwrap().objective
    };
    let eps = 1e-4;
    let fd = (moved(eps) - moved(-eps)) / (2.0 * eps);
    assert!(
        (fd - predicted).abs() <= 1e-3 * predicted.abs(),
        "{fd} vs {predicted}"
    );
}

#[test]
fn update_vanishes_for_zero_shape_and_infinite_step_penalty() {
    let config = KrotovConfig {
        shape: UpdateShape::Constant { value: 0.0 },
        ..small_config(1)
    };
    let opt = KrotovOptimizer::new(small_ensemble(), config).unwrap();
    let eval = opt.evaluate(opt.initial_control().unwrap(), None).unwrap();
    let costates = opt.costates(&eval).unwrap();
    let updated = opt.control_update(&eval, &costates, 100.0).unwrap();
    assert_eq!(updated.samples(), eval.control.samples());

    let opt = KrotovOptimizer::new(small_ensemble(), small_config(1)).unwrap();
    let eval = opt.evaluate(opt.initial_control().unwrap(), None).unwrap();
    let costates = opt.costates(&eval).unwrap();
    let step = |lambda: f64| {
        let u = opt.control_update(&eval, &costates, lambda).unwrap();
        u.samples()
            .iter()
            .zip(eval.control.samples())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    let (near, far) = (step(1e2), step(1e8));
    assert!(near > 0.0);
    assert!(far <= 1e-5 * near, "{far} vs {near}");
}

#[test]
fn small_ensemble_training_is_monotone_and_deterministic() {
    let ensemble = small_ensemble();
    let config = small_config(15);
    let (a, trace) = train(&ensemble, &config).unwrap();
    let (b, _) = train(&ensemble, &config).unwrap();
    assert!(trace.iterations() >= 1);
    assert!(trace.is_monotone(config.monotonic_slack));
    assert!(trace.last().unwrap().objective < trace.first().unwrap().objective);
    assert!(a.samples().iter().zip(b.samples()).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert_eq!(a.sample(0), 0.0);
    assert_eq!(a.sample(a.len() - 1), 0.0);
}

#[test]
fn single_member_with_loose_tolerance_stops_immediately() {
    let ensemble = small_ensemble();
    let guess = pinned_burst(4.0, 400, 1.0);
    let config = KrotovConfig {
        max_iterations: 0,
        ..small_config(0)
    };
    let (c, trace) = single_point_train(&ensemble, 0.8, &config).unwrap();
    assert_eq!(c, guess);
    assert_eq!(trace.iterations(), 0);

    let config = KrotovConfig {
        tolerance: 1e6,
        ..small_config(50)
    };
    let (_, trace) = single_point_train(&ensemble, 0.8, &config).unwrap();
    assert_eq!(trace.iterations(), 1);
    assert_eq!(trace.stop_reason, StopReason::Converged);
}

#[test]
fn exhausted_retries_report_the_trace() {
    let config = KrotovConfig {
        lambda_a: 1e-2,
        max_retries: 2,
        eigenvalue_margin: None,
        ..small_config(5)
    };
    match train(&small_ensemble(), &config) {
        Err(Error::NonConvergence {
            iteration,
            retries,
            trace,
        }) => {
            assert_eq!(retries, 2);
            // accepted iterations before the failing one are all recorded
            assert_eq!(trace.records.len(), iteration);
            assert!(trace.is_monotone(config.monotonic_slack));
        }
        other => panic!("expected non-convergence, got {:?}", other.map(|r| r.1)),
    }
}

#[test]
fn first_headline_iteration_decreases_objective() {
    let cfg = nmr_probe::config::ExperimentConfig::headline();
    let config = KrotovConfig {
        max_iterations: 1,
        tolerance: 0.0,
        ..cfg.krotov_config().unwrap()
    };
    let (_, trace) = train(&cfg.ensemble_spec(), &config).unwrap();
    let j = trace.objectives();
    assert_eq!(j.len(), 2);
    assert!(j[1] < j[0], "{} -> {}", j[0], j[1]);
}

/// From the zero control the final-time QFI and its gradient are so small
/// that one update leaves `J` unchanged to machine precision.
#[test]
fn zero_guess_stalls() {
    let config = KrotovConfig {
        max_iterations: 1,
        tolerance: 0.0,
        ..KrotovConfig::default()
    };
    let (c, trace) = train(&EnsembleSpec::headline(), &config).unwrap();
    let j = trace.objectives();
    assert!(j[1] <= j[0]);
    assert!(-j[0] < 1e-8, "{}", j[0]);
    assert!(c.max_abs() < 1e-15, "{}", c.max_abs());
}
