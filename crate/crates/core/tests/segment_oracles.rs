use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdde_core::maps::FnMap;
use sdde_core::memory::{delay_integral, DelayComponent, DelayKind, DelayMeasure, HistorySegment};
use sdde_core::quadrature::{integrate, integrate_to_neg_infinity, Tolerance};

fn random_segment(rng: &mut ChaCha8Rng, r: f64, dim: usize) -> HistorySegment {
    let theta_min = -rng.random_range(0.5..4.0);
    let n = rng.random_range(2..=40);
    let mut thetas: Vec<f64> = (0..n - 2).map(|_| theta_min * rng.random::<f64>()).collect();
    thetas.extend([theta_min, 0.0]);
    thetas.sort_by(f64::total_cmp);
    thetas.dedup();
    let values: Vec<f64> = (0..thetas.len() * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    HistorySegment::with_matched_tail(r, thetas, values).unwrap()
}

/// Weighted sup over 10⁵ equispaced points of `[θ_min, 0]`, the nodes, and the tail.
fn dense_norm(seg: &HistorySegment) -> f64 {
    let r = seg.r();
    let tm = seg.theta_min();
    let mut x = vec![0.0; seg.dim()];
    let mut weighted = |theta: f64| {
        seg.value_at(theta, &mut x);
        (r * theta).exp() * x.iter().map(|v| v * v).sum::<f64>().sqrt()
    };
    let n = 100_000;
    let mut best = (0..=n).map(|k| weighted(tm * (1.0 - k as f64 / n as f64))).fold(0.0, f64::max);
    let nodes: Vec<f64> = seg.nodes().map(|(t, _)| t).collect();
    for t in nodes {
        best = best.max(weighted(t));
    }
    let v = seg.tail_coefficient();
    best.max(v.iter().map(|c| c * c).sum::<f64>().sqrt())
}

#[test]
fn fading_norm_matches_dense_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..200 {
        let r = rng.random_range(0.1..2.0);
        let seg = random_segment(&mut rng, r, 1 + i % 3);
        let (exact, dense) = (seg.fading_norm(), dense_norm(&seg));
        assert!(exact >= dense - 1e-12, "segment {i}: {exact} below sampled {dense}");
        assert!(exact - dense < 1e-9, "segment {i}: {exact} vs {dense}");
    }
}

#[test]
fn appended_deterministic_path_matches_dense_grid() {
    let mut seg = HistorySegment::constant(1.0, &[0.5], -1.0).unwrap();
    let taus: Vec<f64> = (0..=400).map(|k| k as f64 * 0.01).collect();
    let values: Vec<f64> = taus.iter().map(|t| 0.5 * (3.0 * t).cos() * (-t).exp()).collect();
    seg.append(&taus, &values).unwrap();
    assert!((seg.fading_norm() - dense_norm(&seg)).abs() < 1e-9);
}

fn random_measure(rng: &mut ChaCha8Rng, kappa: f64) -> DelayMeasure {
    let k = rng.random_range(1..=4);
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let components = raw
        .iter()
        .map(|w| {
            let kind = if rng.random::<bool>() {
                DelayKind::Atom { theta0: -rng.random_range(0.0..3.0) }
            } else {
                DelayKind::Exponential { rate: kappa + rng.random_range(0.5..5.0) }
            };
            DelayComponent { weight: w / total, kind }
        })
        .collect();
    DelayMeasure::new(components).unwrap()
}

#[test]
fn exp_moment_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let tol = Tolerance { abs: 1e-13, rel: 1e-12, ..Tolerance::DEFAULT };
    for i in 0..100 {
        let kappa = rng.random_range(0.0..3.0);
        let mu = random_measure(&mut rng, kappa);
        let mut oracle = 0.0;
        for c in mu.components() {
            oracle += c.weight
                * match c.kind {
                    DelayKind::Atom { theta0 } => (-kappa * theta0).exp(),
                    DelayKind::Exponential { rate } => {
                        integrate_to_neg_infinity(|t| rate * ((rate - kappa) * t).exp(), 0.0, tol).unwrap()
                    }
                };
        }
        let v = mu.exp_moment(kappa);
        assert!((v - oracle).abs() <= 1e-10 * v.abs().max(1.0), "measure {i}: {v} vs {oracle}");
    }
}

#[test]
fn mixture_moment_example() {
    let mu = DelayMeasure::new(vec![
        DelayComponent { weight: 0.5, kind: DelayKind::Atom { theta0: -1.0 } },
        DelayComponent { weight: 0.5, kind: DelayKind::Exponential { rate: 5.0 } },
    ])
    .unwrap();
    let expected = 0.5 * 2f64.exp() + 0.5 * 5.0 / 3.0;
    assert!((mu.exp_moment(2.0) - expected).abs() < 1e-12);
    assert!(mu.in_m_kappa(2.0));
    assert!(!DelayMeasure::exponential(1.0).unwrap().in_m_kappa(2.0));
    let q = integrate(|t| 0.5 * 5.0 * (3.0 * t).exp(), -40.0, 0.0, Tolerance::DEFAULT).unwrap();
    assert!((0.5 * 2f64.exp() + q - expected).abs() < 1e-8);
}

#[test]
fn exponential_delay_integral_matches_trapezoid() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let square = FnMap::new(1, 1, |x: &[f64], out: &mut [f64]| out[0] = x[0] * x[0]).with_growth_degree(2.0);
    for _ in 0..5 {
        let r = rng.random_range(0.2..1.0);
        let lambda = 2.0 * r + rng.random_range(0.5..4.0);
        let seg = random_segment(&mut rng, r, 1);
        let mu = DelayMeasure::exponential(lambda).unwrap();
        let got = delay_integral(&seg, &mu, &square).unwrap()[0];

        let tm = seg.theta_min();
        let n = 1_000_000;
        let h = -tm / n as f64;
        let mut x = [0.0];
        let mut f = |t: f64| {
            seg.value_at(t, &mut x);
            lambda * (lambda * t).exp() * x[0] * x[0]
        };
        let mut trap = 0.5 * (f(tm) + f(0.0));
        for k in 1..n {
            trap += f(tm + k as f64 * h);
        }
        trap *= h;
        let v = seg.tail_coefficient()[0];
        let tail = lambda * v * v * ((lambda - 2.0 * r) * tm).exp() / (lambda - 2.0 * r);
        let oracle = trap + tail;
        assert!((got - oracle).abs() <= 1e-8 * oracle.abs().max(1e-12), "{got} vs {oracle}");
    }
}

fn segment_strategy() -> impl Strategy<Value = (u64, f64)> {
    (any::<u64>(), 0.1f64..2.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_is_homogeneous((seed, r) in segment_strategy(), a in -10.0f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seg = random_segment(&mut rng, r, 2);
        let n = seg.fading_norm();
        prop_assert!((seg.scaled(a).fading_norm() - a.abs() * n).abs() <= 1e-12 * (1.0 + a.abs() * n));
    }

    #[test]
    fn norm_obeys_triangle_inequality((seed, r) in segment_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = random_segment(&mut rng, r, 1);
        // rebuild ψ on the same θ_min so the sum is representable
        let other = random_segment(&mut rng, r, 1);
        let mut thetas: Vec<f64> = other.nodes().map(|(t, _)| t * phi.theta_min() / other.theta_min()).collect();
        thetas[0] = phi.theta_min();
        let values: Vec<f64> = other.nodes().map(|(_, v)| v[0]).collect();
        let psi = HistorySegment::with_matched_tail(r, thetas, values).unwrap();
        let sum = HistorySegment::linear_combination(1.0, &phi, 1.0, &psi).unwrap();
        prop_assert!(sum.fading_norm() <= phi.fading_norm() + psi.fading_norm() + 1e-12);
    }

    #[test]
    fn norm_is_monotone_in_rate(seed in any::<u64>(), r1 in 0.1f64..1.0, gap in 0.01f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seg = random_segment(&mut rng, r1, 1);
        // same grid values at the larger rate; the tail continues φ(θ_min),
        // whose weight e^{r₂θ_min} is below e^{r₁θ_min}
        let r2 = r1 + gap;
        let thetas: Vec<f64> = seg.nodes().map(|(t, _)| t).collect();
        let values: Vec<f64> = seg.nodes().map(|(_, v)| v[0]).collect();
        let coarse = HistorySegment::with_matched_tail(r2, thetas, values).unwrap();
        prop_assert!(coarse.fading_norm() <= seg.fading_norm() + 1e-12);
    }
}
