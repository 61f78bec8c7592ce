//! Random history segments for randomized condition checks.

use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::memory::HistorySegment;
#[allow(unused_imports)]
use num_traits::Float;

/// Piecewise-linear segments with Gaussian node values, a continuously
/// matched tail, and norm drawn uniformly in `(0, radius]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSampler {
    pub r: f64,
    pub dim: usize,
    pub radius: f64,
    /// `θ_min` is drawn uniformly from this range.
    pub theta_min: (f64, f64),
    /// Node count is drawn uniformly from this inclusive range.
    pub nodes: (usize, usize),
}

impl SegmentSampler {
    pub fn new(r: f64, dim: usize, radius: f64) -> Self {
        Self { r, dim, radius, theta_min: (-8.0, -0.05), nodes: (2, 40) }
    }

    fn raw<R: Rng + ?Sized>(&self, theta_min: f64, rng: &mut R) -> HistorySegment {
        let n = rng.random_range(self.nodes.0..=self.nodes.1.max(self.nodes.0));
        let mut thetas: Vec<f64> = (0..n.saturating_sub(2)).map(|_| theta_min * rng.random::<f64>()).collect();
        thetas.push(theta_min);
        thetas.push(0.0);
        thetas.sort_by(f64::total_cmp);
        thetas.dedup();
        let values: Vec<f64> = (0..thetas.len() * self.dim).map(|_| StandardNormal.sample(rng)).collect();
        HistorySegment::with_matched_tail(self.r, thetas, values).expect("sampled segment is well formed")
    }

    fn theta_min<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (a, b) = self.theta_min;
        if a < b {
            rng.random_range(a..b)
        } else {
            a
        }
    }

    fn fit_to_ball<R: Rng + ?Sized>(&self, seg: HistorySegment, rng: &mut R) -> HistorySegment {
        let target = self.radius * (1.0 - rng.random::<f64>());
        let n = seg.fading_norm();
        if n > 0.0 {
            seg.scaled(target / n)
        } else {
            seg
        }
    }

    /// A segment with `‖φ‖_r ≤ radius`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> HistorySegment {
        let seg = self.raw(self.theta_min(rng), rng);
        self.fit_to_ball(seg, rng)
    }

    /// A pair inside the ball sharing `θ_min`. Half of the pairs are
    /// independent draws; the other half are near-pairs `ψ = φ + η·ζ` with
    /// `η` log-uniform in `[1e-6, 1e-1]` relative to `‖φ‖_r`.
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (HistorySegment, HistorySegment) {
        let tm = self.theta_min(rng);
        let phi = self.raw(tm, rng);
        let zeta = self.raw(tm, rng);
        if rng.random::<bool>() {
            let phi = self.fit_to_ball(phi, rng);
            let zeta = self.fit_to_ball(zeta, rng);
            return (phi, zeta);
        }
        let eta = 10f64.powf(-1.0 - 5.0 * rng.random::<f64>());
        let (np, nz) = (phi.fading_norm(), zeta.fading_norm());
        let psi = HistorySegment::linear_combination(1.0, &phi, eta * np / nz.max(1e-300), &zeta)
            .expect("segments share θ_min and r");
        let target = self.radius * (1.0 - rng.random::<f64>());
        let scale = target / phi.fading_norm().max(psi.fading_norm()).max(1e-300);
        (phi.scaled(scale), psi.scaled(scale))
    }
}
