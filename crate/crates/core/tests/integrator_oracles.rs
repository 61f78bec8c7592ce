use sdde_core::dynamics::{
    evaluate_drift, integrate_deterministic, integrate_full, integrate_interlaced, integrate_truncated, DriftSpec,
    IntegratorConfig, Scheme,
};
use sdde_core::levy::{Atom, JumpEvent, LevyMeasureModel};
use sdde_core::memory::{DelayMeasure, HistorySegment};
use sdde_core::quadrature::{integrate, Tolerance};
use sdde_core::stats::MeanEstimate;

fn constant(c: f64) -> HistorySegment {
    HistorySegment::constant(1.0, &[c], -1.0).unwrap()
}

fn cubic_atom() -> DriftSpec {
    DriftSpec::cubic_example(DelayMeasure::atom(-0.3).unwrap())
}

/// Root of `1 - 2x + x² - 2x³` by bisection on `[0, 1]`.
fn cubic_equilibrium() -> f64 {
    let g = |x: f64| 1.0 - 2.0 * x + x * x - 2.0 * x * x * x;
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn cubic_drift_on_exponential_memory_matches_quadrature() {
    let lambda = 5.0;
    let spec = DriftSpec::cubic_example(DelayMeasure::exponential(lambda).unwrap());
    let thetas = vec![-2.0, -1.3, -0.4, -0.1, 0.0];
    let values = vec![0.3, -0.8, 1.1, 0.2, 0.6];
    let seg = HistorySegment::with_matched_tail(1.0, thetas, values).unwrap();
    let got = evaluate_drift(&spec, &seg).unwrap()[0];
    let mut x = [0.0];
    let grid = integrate(
        |t| {
            seg.value_at(t, &mut x);
            lambda * (lambda * t).exp() * x[0] * x[0]
        },
        -2.0,
        0.0,
        Tolerance { abs: 1e-13, rel: 1e-12, ..Tolerance::DEFAULT },
    )
    .unwrap();
    let v = seg.tail_coefficient()[0];
    let tail = lambda * v * v * ((lambda - 2.0) * -2.0f64).exp() / (lambda - 2.0);
    let x0 = 0.6f64;
    let oracle = 1.0 - 2.0 * x0 - 2.0 * x0.powi(3) + grid + tail;
    assert!((got - oracle).abs() < 1e-8 * oracle.abs().max(1.0), "{got} vs {oracle}");
}

#[test]
fn linear_ode_matches_exponential() {
    let rec = integrate_deterministic(&DriftSpec::linear(1, -1.0), &constant(1.0), 1.0, &IntegratorConfig::with_dt(1e-4)).unwrap();
    assert!((rec.final_state()[0] - (-1.0f64).exp()).abs() < 1e-3);
}

#[test]
fn cubic_trajectory_settles_at_equilibrium() {
    let rec = integrate_deterministic(&cubic_atom(), &constant(0.5), 50.0, &IntegratorConfig::with_dt(1e-3)).unwrap();
    let x_star = cubic_equilibrium();
    assert!((rec.final_state()[0] - x_star).abs() < 1e-6, "{} vs {x_star}", rec.final_state()[0]);
    assert_eq!(rec.shift_violations, 0);
}

#[test]
fn step_halving_ratios() {
    let spec = cubic_atom();
    let xi = HistorySegment::constant(1.0, &[1.5], -1.0).unwrap();
    for (scheme, expected) in [(Scheme::Euler, 2.0), (Scheme::Heun, 4.0)] {
        let run = |dt: f64| {
            let cfg = IntegratorConfig { scheme, ..IntegratorConfig::with_dt(dt) };
            integrate_deterministic(&spec, &xi, 1.2, &cfg).unwrap().final_state()[0]
        };
        let (a, b, c) = (run(0.02), run(0.01), run(0.005));
        let ratio = (a - b) / (b - c);
        assert!((ratio - expected).abs() < 0.3 * expected, "{scheme:?}: ratio {ratio}");
    }
}

#[test]
fn zero_drift_truncated_mean_is_initial_value() {
    let levy = LevyMeasureModel::from_positive_half(1, vec![Atom::scalar(0.2, 3.0), Atom::scalar(0.4, 1.0)]).unwrap();
    let cfg = IntegratorConfig::with_dt(0.05);
    let finals: Vec<f64> = (0..10_000u64)
        .map(|s| integrate_truncated(&DriftSpec::zero(1), &constant(0.3), &levy, 0.5, 0.005, 1.0, &cfg, s).unwrap().final_state()[0])
        .collect();
    let est = MeanEstimate::from_samples(&finals);
    assert!((est.mean - 0.3).abs() < 3.0 * est.std_error);
}

#[test]
fn zero_noise_full_run_is_deterministic() {
    let spec = cubic_atom();
    let cfg = IntegratorConfig::with_dt(0.01);
    let det = integrate_deterministic(&spec, &constant(0.5), 3.0, &cfg).unwrap();
    let full = integrate_full(&spec, &constant(0.5), &LevyMeasureModel::zero(1), 0.01, 3.0, &cfg, 17).unwrap();
    assert_eq!(det.times, full.times);
    assert_eq!(det.states, full.states);
}

#[test]
fn injected_jump_on_zero_drift() {
    let levy = LevyMeasureModel::zero(1);
    let jumps = [JumpEvent { time: 0.737, mark: vec![2.5] }];
    let rec = integrate_interlaced(&DriftSpec::zero(1), &constant(1.0), &levy, 0.01, 2.0, &IntegratorConfig::with_dt(0.1), 0, &jumps).unwrap();
    for i in 0..rec.len() {
        let t = rec.times[i];
        let expected = if t > 0.737 || (t == 0.737 && rec.jump_flags[i]) { 3.5 } else { 1.0 };
        assert_eq!(rec.state(i)[0], expected, "row {i} at t = {t}");
    }
    assert!(rec.times.windows(2).any(|w| w[0] == 0.737 && w[1] == 0.737));
}

#[test]
fn large_jump_counts_are_poisson() {
    let levy = LevyMeasureModel::from_positive_half(1, vec![Atom::scalar(1.5, 0.3), Atom::scalar(0.5, 2.0)]).unwrap();
    let cfg = IntegratorConfig::with_dt(0.5);
    let t_end = 2.0;
    let counts: Vec<f64> = (0..10_000u64)
        .map(|s| integrate_full(&DriftSpec::zero(1), &constant(0.0), &levy, 0.01, t_end, &cfg, s).unwrap().jump_log.len() as f64)
        .collect();
    let est = MeanEstimate::from_samples(&counts);
    assert!((est.mean - t_end * levy.mass_above(1.0)).abs() < 3.0 * est.std_error);
}

#[test]
fn records_are_reproducible() {
    let levy = LevyMeasureModel::from_positive_half(1, vec![Atom::scalar(1.5, 0.3), Atom::scalar(0.2, 3.0)]).unwrap();
    let cfg = IntegratorConfig::with_dt(0.01);
    let a = integrate_full(&cubic_atom(), &constant(0.5), &levy, 0.005, 5.0, &cfg, 99).unwrap();
    let b = integrate_full(&cubic_atom(), &constant(0.5), &levy, 0.005, 5.0, &cfg, 99).unwrap();
    assert_eq!(a.times, b.times);
    assert_eq!(a.states, b.states);
    assert_eq!(a.norms, b.norms);
    assert_eq!(a.jump_log, b.jump_log);
}
