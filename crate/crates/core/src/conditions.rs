//! Checks of the standing hypotheses: moment conditions on the delay
//! measures, the one-sided dissipativity inequality, local Lipschitz
//! constants, and the explicit irreducibility lower bound.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::dynamics::{evaluate_drift, DriftSpec};
use crate::levy::{norm, LevyMeasureModel};
use crate::maps::{ExampleH, PairFunction, PointMap};
use crate::memory::{delay_integral, DelayKind, DelayMeasure, HistorySegment, Stacked};
use crate::rng::{derive_seed, module, stream_rng, AUX_STREAM};
use crate::sampler::SegmentSampler;
use crate::Result;
#[allow(unused_imports)]
use num_traits::Float;

/// Violations are counted when `lhs - rhs > DISSIPATIVITY_TOLERANCE·max(1, scale)`.
pub const DISSIPATIVITY_TOLERANCE: f64 = 1e-9;

/// Pairs closer than this in `‖·‖_r` are skipped by the Lipschitz search.
pub const LIPSCHITZ_MIN_DISTANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct DissipativityConstants {
    pub lambda1_bar: f64,
    pub lambda2_bar: f64,
    pub k1_bar: f64,
    pub k2_bar: f64,
    pub q1: f64,
    pub q2: f64,
    /// Growth constant `K` in `H(x, y) ≤ K(|x|^{q1} + |y|^{q2})`.
    pub k_growth: f64,
    pub h: Arc<dyn PairFunction>,
    pub mu1: DelayMeasure,
    pub mu2: DelayMeasure,
    pub r: f64,
}

impl DissipativityConstants {
    /// Constants for the cubic example: `λ̄₁ = 0`, `λ̄₂ = 3`, `K̄₁ = 1`,
    /// `K̄₂ = 2`, `H(x, y) = (x-y)²(2x²+2xy+2y²) ≤ 12(x⁴+y⁴)`.
    pub fn cubic_example(r: f64, mu1: DelayMeasure) -> Self {
        Self {
            lambda1_bar: 0.0,
            lambda2_bar: 3.0,
            k1_bar: 1.0,
            k2_bar: 2.0,
            q1: 4.0,
            q2: 4.0,
            k_growth: 12.0,
            h: Arc::new(ExampleH),
            mu2: mu1.clone(),
            mu1,
            r,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ConditionReport {
    /// `λ̄₂ - 2r - λ̄₁μ₂^(2r)`.
    pub slack1: f64,
    /// `K̄₂ - K̄₁μ₁^(2r)`.
    pub slack2: f64,
    pub mu1_moment_2r: f64,
    pub mu2_moment_2r: f64,
    /// `(2 ∨ q₁)·r`.
    pub mu1_class_exponent: f64,
    pub mu1_in_class: bool,
    pub mu2_in_class: bool,
    pub failures: Vec<String>,
    pub pass: bool,
}

/// `c·m`, with `0·∞ = 0` so that a switched-off term cannot fail.
fn weighted(c: f64, moment: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * moment
    }
}

fn divergence_note(name: &str, m: &DelayMeasure, kappa: f64) -> Option<String> {
    m.divergent_component(kappa).map(|i| {
        let rate = match m.components()[i].kind {
            DelayKind::Exponential { rate } => rate,
            DelayKind::Atom { .. } => f64::NAN,
        };
        format!("{name} component {i} (exponential, λ = {rate}) has no finite moment of order κ = {kappa}")
    })
}

pub fn check_proposition_conditions(c: &DissipativityConstants) -> ConditionReport {
    let two_r = 2.0 * c.r;
    let m1 = c.mu1.exp_moment(two_r);
    let m2 = c.mu2.exp_moment(two_r);
    let slack1 = c.lambda2_bar - two_r - weighted(c.lambda1_bar, m2);
    let slack2 = c.k2_bar - weighted(c.k1_bar, m1);
    let kappa1 = c.q1.max(2.0) * c.r;
    let mu1_in_class = c.mu1.in_m_kappa(kappa1);
    let mu2_in_class = c.mu2.in_m_kappa(two_r);
    let mut failures = Vec::new();
    if !(slack1 >= 0.0) {
        failures.push(format!("slack1 = λ̄₂ - 2r - λ̄₁μ₂^(2r) = {slack1} < 0"));
    }
    if !(slack2 >= 0.0) {
        failures.push(format!("slack2 = K̄₂ - K̄₁μ₁^(2r) = {slack2} < 0"));
    }
    if let Some(note) = divergence_note("mu1", &c.mu1, kappa1) {
        failures.push(note);
    }
    if let Some(note) = divergence_note("mu2", &c.mu2, two_r) {
        failures.push(note);
    }
    ConditionReport {
        slack1,
        slack2,
        mu1_moment_2r: m1,
        mu2_moment_2r: m2,
        mu1_class_exponent: kappa1,
        mu1_in_class,
        mu2_in_class,
        pass: failures.is_empty(),
        failures,
    }
}

/// `H(x, y)` viewed as a map `ℝ^{2n} → ℝ` on stacked arguments.
#[derive(Debug)]
struct StackedPair<'a> {
    n: usize,
    h: &'a dyn PairFunction,
}

impl PointMap for StackedPair<'_> {
    fn input_dim(&self) -> usize {
        2 * self.n
    }
    fn output_dim(&self) -> usize {
        1
    }
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        out[0] = self.h.eval(&x[..self.n], &x[self.n..]);
    }
    fn growth_degree(&self) -> Option<f64> {
        self.h.growth_degree()
    }
}

/// `|x - y|²` on stacked arguments.
#[derive(Debug)]
struct SquaredDistance(usize);

impl PointMap for SquaredDistance {
    fn input_dim(&self) -> usize {
        2 * self.0
    }
    fn output_dim(&self) -> usize {
        1
    }
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        out[0] = (0..self.0).map(|i| (x[i] - x[self.0 + i]).powi(2)).sum();
    }
    fn growth_degree(&self) -> Option<f64> {
        Some(2.0)
    }
}

/// Both sides of the dissipativity inequality for one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Margin {
    /// `2⟨φ(0)-ψ(0), f(φ)-f(ψ)⟩`.
    pub lhs: f64,
    /// `K̄₁∫H dμ₁ - K̄₂H(φ(0),ψ(0)) + λ̄₁∫|φ-ψ|² dμ₂ - λ̄₂|φ(0)-ψ(0)|²`.
    pub rhs: f64,
    /// Largest magnitude among the individual terms.
    pub scale: f64,
}

impl Margin {
    pub fn excess(&self) -> f64 {
        self.lhs - self.rhs
    }

    pub fn violated(&self) -> bool {
        self.excess() > DISSIPATIVITY_TOLERANCE * self.scale.max(1.0)
    }
}

pub fn dissipativity_margin(
    spec: &DriftSpec,
    c: &DissipativityConstants,
    phi: &HistorySegment,
    psi: &HistorySegment,
) -> Result<Margin> {
    let n = spec.dim();
    let fp = evaluate_drift(spec, phi)?;
    let fq = evaluate_drift(spec, psi)?;
    let (p0, q0) = (phi.head(), psi.head());
    let lhs = 2.0 * (0..n).map(|i| (p0[i] - q0[i]) * (fp[i] - fq[i])).sum::<f64>();
    let pair = Stacked(phi, psi);
    let mut terms = vec![lhs];
    if c.k1_bar != 0.0 {
        let ih = delay_integral(&pair, &c.mu1, &StackedPair { n, h: c.h.as_ref() })?[0];
        terms.push(c.k1_bar * ih);
    }
    if c.k2_bar != 0.0 {
        terms.push(-c.k2_bar * c.h.eval(p0, q0));
    }
    if c.lambda1_bar != 0.0 {
        let id = delay_integral(&pair, &c.mu2, &SquaredDistance(n))?[0];
        terms.push(c.lambda1_bar * id);
    }
    if c.lambda2_bar != 0.0 {
        let d2: f64 = (0..n).map(|i| (p0[i] - q0[i]).powi(2)).sum();
        terms.push(-c.lambda2_bar * d2);
    }
    let rhs = terms[1..].iter().sum();
    let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    Ok(Margin { lhs, rhs, scale })
}

#[derive(Debug, Clone)]
pub struct ViolationReport {
    pub trials: usize,
    pub violations: usize,
    /// Largest `lhs - rhs` seen, violating or not.
    pub worst_excess: f64,
    pub worst_margin: Option<Margin>,
    /// The pair attaining `worst_excess` when it is a violation.
    pub witness: Option<(HistorySegment, HistorySegment)>,
    pub tolerance: f64,
}

pub fn sample_dissipativity(
    spec: &DriftSpec,
    c: &DissipativityConstants,
    sampler: &SegmentSampler,
    n: usize,
    seed: u64,
) -> Result<ViolationReport> {
    let mut rng = stream_rng(derive_seed(seed, module::DISSIPATIVITY, 0), AUX_STREAM);
    let mut report = ViolationReport {
        trials: n,
        violations: 0,
        worst_excess: f64::NEG_INFINITY,
        worst_margin: None,
        witness: None,
        tolerance: DISSIPATIVITY_TOLERANCE,
    };
    for _ in 0..n {
        let (phi, psi) = sampler.sample_pair(&mut rng);
        let m = dissipativity_margin(spec, c, &phi, &psi)?;
        if m.violated() {
            report.violations += 1;
        }
        if m.excess() > report.worst_excess {
            report.worst_excess = m.excess();
            report.worst_margin = Some(m);
            report.witness = if m.violated() { Some((phi, psi)) } else { None };
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LipschitzEstimate {
    /// Lower estimate of `c_k`.
    pub estimate: f64,
    pub pairs_used: usize,
    pub skipped: usize,
}

/// `max |f(φ) - f(ψ)|² / ‖φ - ψ‖_r²` over `n` pairs in the ball of radius `k`.
pub fn sample_local_lipschitz(spec: &DriftSpec, r: f64, k: f64, n: usize, seed: u64) -> Result<LipschitzEstimate> {
    let sampler = SegmentSampler::new(r, spec.dim(), k);
    let mut rng = stream_rng(derive_seed(seed, module::LIPSCHITZ, 0), AUX_STREAM);
    let mut est = LipschitzEstimate { estimate: 0.0, pairs_used: 0, skipped: 0 };
    for _ in 0..n {
        let (phi, psi) = sampler.sample_pair(&mut rng);
        let diff = HistorySegment::linear_combination(1.0, &phi, -1.0, &psi)?;
        let d = diff.fading_norm();
        if d < LIPSCHITZ_MIN_DISTANCE {
            est.skipped += 1;
            continue;
        }
        let fp = evaluate_drift(spec, &phi)?;
        let fq = evaluate_drift(spec, &psi)?;
        let num: f64 = fp.iter().zip(&fq).map(|(a, b)| (a - b) * (a - b)).sum();
        est.estimate = est.estimate.max(num / (d * d));
        est.pairs_used += 1;
    }
    Ok(est)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GrowthCheck {
    pub samples: usize,
    pub max_diagonal: f64,
    pub asymmetric: usize,
    pub bound_violations: usize,
}

/// Samples `H` on random points in `[-radius, radius]ⁿ` and checks
/// `H(x,x) = 0`, symmetry, and `H(x,y) ≤ K(|x|^{q₁} + |y|^{q₂})`.
pub fn check_h_growth(c: &DissipativityConstants, dim: usize, radius: f64, n: usize, seed: u64) -> GrowthCheck {
    use rand::Rng;
    let mut rng = stream_rng(derive_seed(seed, module::DISSIPATIVITY, 1), AUX_STREAM);
    let mut out = GrowthCheck { samples: n, max_diagonal: 0.0, asymmetric: 0, bound_violations: 0 };
    let (mut x, mut y) = (vec![0.0; dim], vec![0.0; dim]);
    for _ in 0..n {
        x.iter_mut().for_each(|v| *v = radius * (2.0 * rng.random::<f64>() - 1.0));
        y.iter_mut().for_each(|v| *v = radius * (2.0 * rng.random::<f64>() - 1.0));
        out.max_diagonal = out.max_diagonal.max(c.h.eval(&x, &x).abs());
        let hxy = c.h.eval(&x, &y);
        if hxy != c.h.eval(&y, &x) {
            out.asymmetric += 1;
        }
        let bound = c.k_growth * (norm(&x).powf(c.q1) + norm(&y).powf(c.q2));
        if hxy > bound * (1.0 + 1e-12) {
            out.bound_violations += 1;
        }
    }
    out
}

/// `p·e^{-ν(|z|>ε)T}` for a user-supplied success probability `p`.
pub fn irreducibility_lower_bound_with(p: f64, levy: &LevyMeasureModel, eps: f64, t: f64) -> f64 {
    p * (-levy.mass_above(eps) * t).exp()
}

/// `½·e^{-ν(|z|>ε)T}`.
pub fn irreducibility_lower_bound(levy: &LevyMeasureModel, eps: f64, t: f64) -> f64 {
    irreducibility_lower_bound_with(0.5, levy, eps, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::Atom;
    use crate::memory::DelayComponent;

    fn example(r: f64) -> DissipativityConstants {
        DissipativityConstants::cubic_example(r, DelayMeasure::atom(-0.3).unwrap())
    }

    #[test]
    fn half_bound_value() {
        // tail mass 2·0.7 = 1.4
        let levy = LevyMeasureModel::from_positive_half(1, alloc::vec![Atom::scalar(1.0, 0.7)]).unwrap();
        let b = irreducibility_lower_bound(&levy, 0.5, 1.0);
        assert!((b - 0.123_298_481_970_803_24).abs() < 1e-15, "{b}");
    }

    #[test]
    fn example_slacks() {
        let rep = check_proposition_conditions(&example(1.0));
        assert_eq!(rep.slack1, 1.0);
        assert!((rep.slack2 - (2.0 - 0.6f64.exp())).abs() < 1e-15);
        assert!(rep.pass);
        let rep = check_proposition_conditions(&example(2.0));
        assert!(rep.slack1 < 0.0 && !rep.pass);
    }

    #[test]
    fn divergent_mu1_fails_with_component_named() {
        let c = DissipativityConstants::cubic_example(1.0, DelayMeasure::exponential(3.0).unwrap());
        let rep = check_proposition_conditions(&c);
        assert!(!rep.mu1_in_class);
        assert!(!rep.pass);
        assert!(rep.failures.iter().any(|f| f.contains("mu1 component 0")));
    }

    #[test]
    fn slacks_move_in_the_right_direction() {
        let mut c = example(1.0);
        c.lambda1_bar = 0.5;
        let base = check_proposition_conditions(&c);
        c.lambda2_bar += 0.1;
        let up = check_proposition_conditions(&c);
        assert!(up.slack1 > base.slack1);
        c.k1_bar += 0.1;
        assert!(check_proposition_conditions(&c).slack2 < base.slack2);
        c.k2_bar += 1.0;
        assert!(check_proposition_conditions(&c).slack2 > base.slack2);
    }

    #[test]
    fn identical_pair_has_zero_margin() {
        let spec = DriftSpec::cubic_example(DelayMeasure::atom(-0.3).unwrap());
        let s = HistorySegment::with_matched_tail(1.0, vec![-1.0, -0.2, 0.0], vec![0.4, -2.0, 1.1]).unwrap();
        let m = dissipativity_margin(&spec, &example(1.0), &s, &s).unwrap();
        assert_eq!(m.lhs, 0.0);
        assert_eq!(m.rhs, 0.0);
    }

    #[test]
    fn atom_margin_matches_closed_form() {
        // lhs - rhs = -(a - D)² - (u - w)²(u² + w²) with a = φ(0)-ψ(0),
        // u = φ(θ₀), w = ψ(θ₀), D = u² - w²
        let spec = DriftSpec::cubic_example(DelayMeasure::atom(-0.3).unwrap());
        let phi = HistorySegment::with_matched_tail(1.0, vec![-1.0, -0.3, 0.0], vec![0.4, -2.0, 1.1]).unwrap();
        let psi = HistorySegment::with_matched_tail(1.0, vec![-1.0, -0.3, 0.0], vec![1.0, 0.5, -0.7]).unwrap();
        let m = dissipativity_margin(&spec, &example(1.0), &phi, &psi).unwrap();
        let (a, u, w) = (1.8f64, -2.0f64, 0.5f64);
        let d = u * u - w * w;
        let expect = -(a - d).powi(2) - (u - w).powi(2) * (u * u + w * w);
        assert!((m.excess() - expect).abs() < 1e-12, "{} {}", m.excess(), expect);
    }

    #[test]
    fn exponential_mu1_has_no_violations() {
        let mu1 = DelayMeasure::new(vec![
            DelayComponent { weight: 0.5, kind: DelayKind::Atom { theta0: -0.1 } },
            DelayComponent { weight: 0.5, kind: DelayKind::Exponential { rate: 9.0 } },
        ])
        .unwrap();
        let spec = DriftSpec::cubic_example(mu1.clone());
        let c = DissipativityConstants::cubic_example(1.0, mu1);
        let rep = sample_dissipativity(&spec, &c, &SegmentSampler::new(1.0, 1, 3.0), 300, 5).unwrap();
        assert_eq!(rep.violations, 0, "{:?}", rep.worst_margin);
    }

    #[test]
    fn constant_drift_has_zero_lipschitz_estimate() {
        let spec = DriftSpec::polynomial(1, vec![3.0], Vec::new());
        let e = sample_local_lipschitz(&spec, 1.0, 2.0, 200, 1).unwrap();
        assert_eq!(e.estimate, 0.0);
    }

    #[test]
    fn lower_bound_values() {
        let none = LevyMeasureModel::from_positive_half(1, vec![Atom::scalar(0.2, 1.0)]).unwrap();
        assert_eq!(irreducibility_lower_bound(&none, 0.5, 3.0), 0.5);
        let two = LevyMeasureModel::from_positive_half(1, vec![Atom::scalar(1.0, 0.7)]).unwrap();
        assert!((irreducibility_lower_bound(&two, 0.5, 1.0) - 0.123_298_481_970_803_25).abs() < 1e-16);
    }
}
