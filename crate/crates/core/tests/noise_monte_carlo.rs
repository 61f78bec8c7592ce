use sdde_core::levy::{Atom, LevyMeasureModel, RadialLaw};
use sdde_core::quadrature::{integrate, Tolerance};
use sdde_core::rng::{derive_seed, stream_rng, LARGE_JUMP_STREAM, SMALL_JUMP_STREAM};
use sdde_core::stats::{ks_p_value, ks_statistic, MeanEstimate};

fn unit_atoms() -> LevyMeasureModel {
    LevyMeasureModel::from_positive_half(1, vec![Atom::scalar(1.0, 0.7)]).unwrap()
}

#[test]
fn closed_form_tail_quantities() {
    let m = unit_atoms();
    assert_eq!(m.mass_above(0.5), 1.4);
    assert_eq!(m.mass_above(2.0), 0.0);
    assert_eq!(m.small_jump_second_moment(0.5), 0.0);
    let small = LevyMeasureModel::from_positive_half(1, vec![Atom::scalar(0.2, 3.0)]).unwrap();
    assert!((small.small_jump_second_moment(0.5) - 0.24).abs() < 1e-15);

    let stable = LevyMeasureModel::radial_density(1.0, 1.5, f64::INFINITY).unwrap();
    let tail = 2.0 * integrate(|z| z.powf(-2.5), 0.1, 1e4, Tolerance::DEFAULT).unwrap() + 2.0 * 1e4f64.powf(-1.5) / 1.5;
    assert!((stable.mass_above(0.1) - tail).abs() < 1e-7 * tail);
    assert!((stable.mass_above(0.1) - 2.0 * 0.1f64.powf(-1.5) / 1.5).abs() < 1e-10);
    // z = u² removes the z^{-1/2} singularity of z²·z^{-5/2}
    let m2 = 2.0 * integrate(|u| 2.0 * u * (u * u).powf(-0.5), 0.0, 0.1f64.sqrt(), Tolerance::DEFAULT).unwrap();
    assert!((stable.small_jump_second_moment(0.1) - m2).abs() < 1e-9);
    assert!((m2 - 2.0 * 0.1f64.sqrt() / 0.5).abs() < 1e-9);
}

#[test]
fn tail_mass_and_moment_are_monotone() {
    let models = [
        unit_atoms(),
        LevyMeasureModel::radial_density(1.0, 0.7, 3.0).unwrap(),
        LevyMeasureModel::compound_poisson(2, 2.0, RadialLaw::Exponential { scale: 0.5 }).unwrap(),
    ];
    for m in &models {
        let grid: Vec<f64> = (1..200).map(|k| k as f64 * 0.02).collect();
        for w in grid.windows(2) {
            assert!(m.mass_above(w[0]) >= m.mass_above(w[1]));
            assert!(m.small_jump_second_moment(w[0]) <= m.small_jump_second_moment(w[1]));
            assert!(m.small_jump_second_moment(w[1]).is_finite());
        }
    }
}

#[test]
fn first_arrival_mean_and_sign_symmetry() {
    let m = unit_atoms();
    let n = 100_000;
    let mut firsts = Vec::with_capacity(n);
    let mut positives = 0usize;
    let mut marks = 0usize;
    for i in 0..n {
        let mut rng = stream_rng(derive_seed(3, 0, i as u64), LARGE_JUMP_STREAM);
        let jumps = m.sample_large_jumps(0.5, 10.0, &mut rng);
        if let Some(j) = jumps.first() {
            firsts.push(j.time);
        }
        for j in &jumps {
            marks += 1;
            positives += usize::from(j.mark[0] > 0.0);
        }
    }
    // P(no jump on [0, 10]) = e^{-14} is negligible at this sample size
    assert_eq!(firsts.len(), n);
    let est = MeanEstimate::from_samples(&firsts);
    assert!((est.mean - 1.0 / 1.4).abs() < 3.0 * est.std_error);
    let frac = positives as f64 / marks as f64;
    assert!((frac - 0.5).abs() < 3.0 * (0.25 / marks as f64).sqrt());
}

#[test]
fn inter_arrival_times_are_exponential() {
    let m = unit_atoms();
    let mut gaps = Vec::new();
    let mut seed = 0;
    while gaps.len() < 10_000 {
        let mut rng = stream_rng(derive_seed(9, 0, seed), LARGE_JUMP_STREAM);
        let jumps = m.sample_large_jumps(0.5, 20.0, &mut rng);
        let mut prev = 0.0;
        for j in jumps {
            gaps.push(j.time - prev);
            prev = j.time;
        }
        seed += 1;
    }
    let d = ks_statistic(&gaps, |t| 1.0 - (-1.4 * t).exp());
    assert!(ks_p_value(d, gaps.len()) > 0.01);
}

#[test]
fn negated_marks_keep_event_times() {
    let m = LevyMeasureModel::from_positive_half(1, vec![Atom::scalar(1.0, 0.7), Atom::scalar(2.5, 0.2)]).unwrap();
    let a = m.sample_large_jumps(0.5, 50.0, &mut stream_rng(1, LARGE_JUMP_STREAM));
    let b = m.sample_large_jumps(0.5, 50.0, &mut stream_rng(1, LARGE_JUMP_STREAM));
    let negated: Vec<f64> = b.iter().map(|j| -j.mark[0]).collect();
    assert_eq!(a.iter().map(|j| j.time).collect::<Vec<_>>(), b.iter().map(|j| j.time).collect::<Vec<_>>());
    // the negated stream takes values in the same symmetric support
    assert!(negated.iter().all(|z| [1.0, -1.0, 2.5, -2.5].contains(z)));
}

#[test]
fn small_jump_increments_are_centered_with_band_second_moment() {
    let models = [
        LevyMeasureModel::from_positive_half(1, vec![Atom::scalar(0.2, 3.0), Atom::scalar(0.05, 10.0)]).unwrap(),
        LevyMeasureModel::radial_density(1.0, 1.5, f64::INFINITY).unwrap(),
    ];
    for m in &models {
        let n = 100_000;
        let (delta, eps) = (0.05, 0.5);
        let mut rng = stream_rng(42, SMALL_JUMP_STREAM);
        let xs: Vec<f64> = (0..n).map(|_| m.sample_small_jump_increment(delta, eps, 1.0, &mut rng).unwrap()[0]).collect();
        let mean = MeanEstimate::from_samples(&xs);
        assert!(mean.mean.abs() < 3.0 * mean.std_error);
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let second = MeanEstimate::from_samples(&sq);
        let target = m.band_second_moment(delta, eps);
        assert!((second.mean - target).abs() < 3.0 * second.std_error, "{} vs {target}", second.mean);
    }
}

#[test]
fn band_rejects_bad_truncation() {
    let m = unit_atoms();
    let mut rng = stream_rng(0, SMALL_JUMP_STREAM);
    assert!(m.sample_small_jump_increment(0.5, 0.5, 1.0, &mut rng).is_err());
    assert_eq!(m.sample_small_jump_increment(0.01, 0.5, 1.0, &mut rng).unwrap(), vec![0.0]);
}
