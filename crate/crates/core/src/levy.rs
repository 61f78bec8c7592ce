//! Symmetric Lévy measures.
//!
//! A [`LevyMeasureModel`] describes a σ-finite jump intensity `ν` on `ℝⁿ`
//! that is symmetric (`ν(C) = ν(-C)`), has no mass at the origin and
//! integrates `|z|² ∧ 1`. Symmetry is enforced when the model is built, so
//! the compensating drift of any symmetric band `{a < |z| ≤ b}` is the zero
//! vector and is never computed.
//!
//! Every quantity the integrators need reduces to the radial profile of the
//! measure: the tail mass `ν(|z| > x)`, the truncated second moment
//! `∫_{|z|≤x} |z|² ν(dz)`, and exact sampling of marks whose norm lies in a
//! band `(a, b]`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};

use crate::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Atom {
    pub location: Vec<f64>,
    pub mass: f64,
}

impl Atom {
    pub fn new(location: Vec<f64>, mass: f64) -> Self {
        Self { location, mass }
    }

    pub fn scalar(location: f64, mass: f64) -> Self {
        Self { location: vec![location], mass }
    }
}

/// Law of the mark norm `|Z|` for a compound Poisson model; the direction is
/// uniform on the sphere (a fair sign in one dimension).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "law", rename_all = "snake_case"))]
pub enum RadialLaw {
    Uniform { low: f64, high: f64 },
    Exponential { scale: f64 },
}

impl RadialLaw {
    fn tail_probability(&self, x: f64) -> f64 {
        match *self {
            RadialLaw::Uniform { low, high } => ((high - x) / (high - low)).clamp(0.0, 1.0),
            RadialLaw::Exponential { scale } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-x / scale).exp()
                }
            }
        }
    }

    /// `E[R²; R ≤ x]`.
    fn truncated_second_moment(&self, x: f64) -> f64 {
        match *self {
            RadialLaw::Uniform { low, high } => {
                let y = x.clamp(low, high);
                (y * y * y - low * low * low) / (3.0 * (high - low))
            }
            RadialLaw::Exponential { scale } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let y = x / scale;
                let core = if y < 1e-3 {
                    y * y * y / 3.0 - y.powi(4) / 4.0 + y.powi(5) / 10.0
                } else {
                    2.0 - (-y).exp() * (y * y + 2.0 * y + 2.0)
                };
                scale * scale * core
            }
        }
    }

    /// Draws `R` conditioned on `a < R ≤ b`, given `u ∈ (0, 1]`.
    fn conditional_quantile(&self, a: f64, b: f64, u: f64) -> f64 {
        match *self {
            RadialLaw::Uniform { low, high } => {
                let lo = a.max(low);
                let hi = b.min(high);
                lo + u * (hi - lo)
            }
            RadialLaw::Exponential { scale } => {
                let span = if b.is_finite() { -(-(b - a) / scale).exp_m1() } else { 1.0 };
                a - scale * (-u * span).ln_1p()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            RadialLaw::Uniform { low, high } if low >= 0.0 && high > low && high.is_finite() => Ok(()),
            RadialLaw::Exponential { scale } if scale > 0.0 && scale.is_finite() => Ok(()),
            other => Err(Error::InvalidArgument(format!("invalid radial law {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum LevyKind {
    /// Finitely many atoms, closed under `z ↦ -z` with matching masses.
    SymmetricAtoms { atoms: Vec<Atom> },
    /// One-dimensional density `c·|z|^{-1-α}` on `0 < |z| < cutoff`.
    RadialDensity { c: f64, alpha: f64, cutoff: f64 },
    /// Finite total mass `rate` with symmetric marks `R·U`.
    CompoundPoisson { rate: f64, radial: RadialLaw },
}

/// Atoms sorted by norm, with prefix masses for band queries.
#[derive(Debug, Clone, PartialEq)]
struct AtomIndex {
    radii: Vec<f64>,
    order: Vec<usize>,
    prefix: Vec<f64>,
}

impl AtomIndex {
    fn new(atoms: &[Atom]) -> Self {
        let mut order: Vec<usize> = (0..atoms.len()).collect();
        let radius = |a: &Atom| norm(&a.location);
        order.sort_by(|&i, &j| radius(&atoms[i]).total_cmp(&radius(&atoms[j])).then(i.cmp(&j)));
        let radii = order.iter().map(|&i| radius(&atoms[i])).collect();
        let mut prefix = Vec::with_capacity(atoms.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &i in &order {
            acc += atoms[i].mass;
            prefix.push(acc);
        }
        Self { radii, order, prefix }
    }

    /// Index range of atoms with norm in `(a, b]`.
    fn band(&self, a: f64, b: f64) -> (usize, usize) {
        let lo = self.radii.partition_point(|&r| r <= a);
        let hi = self.radii.partition_point(|&r| r <= b);
        (lo, hi.max(lo))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevyMeasureModel {
    dimension: usize,
    kind: LevyKind,
    atoms: Option<AtomIndex>,
}

/// One jump of a sampled Poisson stream.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JumpEvent {
    pub time: f64,
    pub mark: Vec<f64>,
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn unit_draw<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // (0, 1], so band draws never land on the open end of the band.
    1.0 - rng.random::<f64>()
}

impl LevyMeasureModel {
    /// The null measure (no noise).
    pub fn zero(dimension: usize) -> Self {
        Self { dimension, kind: LevyKind::SymmetricAtoms { atoms: Vec::new() }, atoms: Some(AtomIndex::new(&[])) }
    }

    /// Atoms given for one half-space only; each `(z, λ)` is mirrored to `(-z, λ)`.
    pub fn from_positive_half(dimension: usize, half: Vec<Atom>) -> Result<Self> {
        let mut atoms = Vec::with_capacity(2 * half.len());
        for a in half {
            let mirrored = Atom { location: a.location.iter().map(|x| -x).collect(), mass: a.mass };
            atoms.push(a);
            atoms.push(mirrored);
        }
        Self::symmetric_atoms(dimension, atoms)
    }

    /// A full list of atoms, which must already be closed under negation.
    pub fn symmetric_atoms(dimension: usize, atoms: Vec<Atom>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        for a in &atoms {
            if a.location.len() != dimension {
                return Err(Error::DimensionMismatch { expected: dimension, got: a.location.len() });
            }
            if !(a.mass > 0.0 && a.mass.is_finite()) {
                return Err(Error::InvalidArgument(format!("atom mass {} must be positive and finite", a.mass)));
            }
            if !a.location.iter().all(|x| x.is_finite()) || norm(&a.location) == 0.0 {
                return Err(Error::InvalidArgument("atoms must sit at finite nonzero locations".into()));
            }
        }
        check_atom_symmetry(&atoms)?;
        let index = AtomIndex::new(&atoms);
        Ok(Self { dimension, kind: LevyKind::SymmetricAtoms { atoms }, atoms: Some(index) })
    }

    /// One-dimensional density `c·|z|^{-1-α}` with `0 < α < 2`, supported on
    /// `|z| < cutoff` (`cutoff` may be `+∞`).
    pub fn radial_density(c: f64, alpha: f64, cutoff: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("density scale c = {c} must be positive")));
        }
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::InvalidArgument(format!("stability index α = {alpha} must lie in (0, 2)")));
        }
        if !(cutoff > 0.0) {
            return Err(Error::InvalidArgument(format!("cutoff {cutoff} must be positive")));
        }
        Ok(Self { dimension: 1, kind: LevyKind::RadialDensity { c, alpha, cutoff }, atoms: None })
    }

    pub fn compound_poisson(dimension: usize, rate: f64, radial: RadialLaw) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("total mass {rate} must be finite and nonnegative")));
        }
        radial.validate()?;
        Ok(Self { dimension, kind: LevyKind::CompoundPoisson { rate, radial }, atoms: None })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn kind(&self) -> &LevyKind {
        &self.kind
    }

    /// `ν(|z| > x)` for `x ≥ 0`; infinite at `x = 0` for infinite-activity models.
    fn tail(&self, x: f64) -> f64 {
        match &self.kind {
            LevyKind::SymmetricAtoms { .. } => {
                let idx = self.atoms.as_ref().expect("atom index");
                let lo = idx.radii.partition_point(|&r| r <= x);
                idx.prefix[idx.prefix.len() - 1] - idx.prefix[lo]
            }
            LevyKind::RadialDensity { c, alpha, cutoff } => {
                if x >= *cutoff {
                    0.0
                } else if x <= 0.0 {
                    f64::INFINITY
                } else {
                    2.0 * c / alpha * (x.powf(-alpha) - cutoff.powf(-alpha))
                }
            }
            LevyKind::CompoundPoisson { rate, radial } => rate * radial.tail_probability(x),
        }
    }

    /// `ν({z : |z| > eps})`.
    pub fn mass_above(&self, eps: f64) -> f64 {
        assert!(eps > 0.0, "mass_above requires eps > 0");
        self.tail(eps)
    }

    /// `ν({z : a < |z| ≤ b})` for `0 ≤ a < b ≤ ∞`.
    pub fn band_mass(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match &self.kind {
            LevyKind::SymmetricAtoms { .. } => {
                let idx = self.atoms.as_ref().expect("atom index");
                let (lo, hi) = idx.band(a, b);
                idx.prefix[hi] - idx.prefix[lo]
            }
            LevyKind::RadialDensity { c, alpha, cutoff } => {
                let hi = b.min(*cutoff);
                if a >= hi {
                    0.0
                } else if a <= 0.0 {
                    f64::INFINITY
                } else {
                    2.0 * c / alpha * (a.powf(-alpha) - hi.powf(-alpha))
                }
            }
            LevyKind::CompoundPoisson { rate, radial } => {
                rate * (radial.tail_probability(a) - radial.tail_probability(b)).max(0.0)
            }
        }
    }

    /// `∫_{0<|z|≤eps} |z|² ν(dz)`.
    pub fn small_jump_second_moment(&self, eps: f64) -> f64 {
        assert!(eps > 0.0, "small_jump_second_moment requires eps > 0");
        self.band_second_moment(0.0, eps)
    }

    /// `∫_{a<|z|≤b} |z|² ν(dz)`.
    pub fn band_second_moment(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match &self.kind {
            LevyKind::SymmetricAtoms { atoms } => {
                let idx = self.atoms.as_ref().expect("atom index");
                let (lo, hi) = idx.band(a, b);
                (lo..hi).map(|k| atoms[idx.order[k]].mass * idx.radii[k] * idx.radii[k]).sum()
            }
            LevyKind::RadialDensity { c, alpha, cutoff } => {
                let hi = b.min(*cutoff);
                if a >= hi {
                    return 0.0;
                }
                let e = 2.0 - alpha;
                2.0 * c / e * (hi.powf(e) - a.max(0.0).powf(e))
            }
            LevyKind::CompoundPoisson { rate, radial } => {
                let hi = if b.is_finite() { radial.truncated_second_moment(b) } else { radial.truncated_second_moment(f64::MAX) };
                rate * (hi - radial.truncated_second_moment(a)).max(0.0)
            }
        }
    }

    /// `ν` of the open interval `(lo, hi)`; one-dimensional models only.
    /// Used to test symmetry on explicit sets.
    pub fn interval_mass(&self, lo: f64, hi: f64) -> f64 {
        assert_eq!(self.dimension, 1, "interval_mass is defined for one-dimensional models");
        if hi <= lo {
            return 0.0;
        }
        // mass of {z : z ∈ (lo, hi), z > 0} expressed through radii
        let positive = |lo: f64, hi: f64| -> f64 {
            let (a, b) = (lo.max(0.0), hi.max(0.0));
            if b <= a {
                return 0.0;
            }
            match &self.kind {
                LevyKind::SymmetricAtoms { atoms } => {
                    atoms.iter().filter(|t| t.location[0] > a && t.location[0] < b).map(|t| t.mass).sum()
                }
                LevyKind::RadialDensity { c, alpha, cutoff } => {
                    let hi = b.min(*cutoff);
                    if a >= hi {
                        0.0
                    } else if a == 0.0 {
                        f64::INFINITY
                    } else {
                        c / alpha * (a.powf(-alpha) - hi.powf(-alpha))
                    }
                }
                LevyKind::CompoundPoisson { rate, radial } => {
                    0.5 * rate * (radial.tail_probability(a) - radial.tail_probability(b)).max(0.0)
                }
            }
        };
        let negative = match &self.kind {
            LevyKind::SymmetricAtoms { atoms } => {
                atoms.iter().filter(|t| t.location[0] > lo && t.location[0] < hi.min(0.0)).map(|t| t.mass).sum()
            }
            _ => positive(-hi, -lo),
        };
        positive(lo, hi) + negative
    }

    /// Draws one mark with `a < |z| ≤ b` from `ν` restricted to that band
    /// and normalised. The band must carry positive mass.
    pub fn sample_band_mark<R: Rng + ?Sized>(&self, a: f64, b: f64, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dimension);
        match &self.kind {
            LevyKind::SymmetricAtoms { atoms } => {
                let idx = self.atoms.as_ref().expect("atom index");
                let (lo, hi) = idx.band(a, b);
                debug_assert!(hi > lo, "empty band");
                let target = idx.prefix[lo] + unit_draw(rng) * (idx.prefix[hi] - idx.prefix[lo]);
                // first k in [lo, hi) with prefix[k + 1] >= target
                let k = (lo + idx.prefix[lo + 1..=hi].partition_point(|&p| p < target)).min(hi - 1);
                out.copy_from_slice(&atoms[idx.order[k]].location);
            }
            LevyKind::RadialDensity { alpha, cutoff, .. } => {
                let hi = b.min(*cutoff);
                let u = unit_draw(rng);
                let a_pow = a.powf(-alpha);
                let radius = (a_pow - u * (a_pow - hi.powf(-alpha))).powf(-1.0 / alpha);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                out[0] = sign * radius;
            }
            LevyKind::CompoundPoisson { radial, .. } => {
                let u = unit_draw(rng);
                let radius = radial.conditional_quantile(a, b, u);
                sample_direction(rng, out);
                for v in out.iter_mut() {
                    *v *= radius;
                }
            }
        }
    }

    /// Time of the first jump with `|z| > eps`, or `None` when `ν(|z| > eps) = 0`.
    pub fn first_large_jump_time<R: Rng + ?Sized>(&self, eps: f64, rng: &mut R) -> Option<f64> {
        let rate = self.mass_above(eps);
        if rate == 0.0 {
            return None;
        }
        let e: f64 = Exp1.sample(rng);
        Some(e / rate)
    }

    /// Compound Poisson stream of jumps with `|z| > eps` on `[0, horizon]`.
    pub fn sample_large_jumps<R: Rng + ?Sized>(&self, eps: f64, horizon: f64, rng: &mut R) -> Vec<JumpEvent> {
        assert!(horizon > 0.0, "horizon must be positive");
        let rate = self.mass_above(eps);
        let mut events = Vec::new();
        if rate == 0.0 {
            return events;
        }
        let mut t = 0.0;
        loop {
            let e: f64 = Exp1.sample(rng);
            t += e / rate;
            if t > horizon {
                break;
            }
            let mut mark = vec![0.0; self.dimension];
            self.sample_band_mark(eps, f64::INFINITY, rng, &mut mark);
            events.push(JumpEvent { time: t, mark });
        }
        events
    }

    /// Sum of the jumps with `delta < |z| ≤ eps` arriving during `dt`.
    /// Jumps below `delta` are discarded; the band compensator is zero by symmetry.
    pub fn sample_small_jump_increment<R: Rng + ?Sized>(
        &self,
        delta: f64,
        eps: f64,
        dt: f64,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        if !(delta > 0.0 && delta < eps) {
            return Err(Error::InvalidArgument(format!("need 0 < delta < eps, got delta = {delta}, eps = {eps}")));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt = {dt} must be positive")));
        }
        let mut sum = vec![0.0; self.dimension];
        let mean = self.band_mass(delta, eps) * dt;
        if mean == 0.0 {
            return Ok(sum);
        }
        let count: f64 = Poisson::new(mean)
            .map_err(|e| Error::InvalidArgument(format!("Poisson mean {mean}: {e}")))?
            .sample(rng);
        let mut mark = vec![0.0; self.dimension];
        for _ in 0..count as u64 {
            self.sample_band_mark(delta, eps, rng, &mut mark);
            for (s, m) in sum.iter_mut().zip(&mark) {
                *s += m;
            }
        }
        Ok(sum)
    }
}

fn sample_direction<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    if out.len() == 1 {
        out[0] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        return;
    }
    loop {
        for v in out.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        let n = norm(out);
        if n > 1e-300 {
            for v in out.iter_mut() {
                *v /= n;
            }
            return;
        }
    }
}

fn check_atom_symmetry(atoms: &[Atom]) -> Result<()> {
    let mut used = vec![false; atoms.len()];
    for i in 0..atoms.len() {
        if used[i] {
            continue;
        }
        let a = &atoms[i];
        let partner = (0..atoms.len()).find(|&j| {
            j != i
                && !used[j]
                && atoms[j].location.iter().zip(&a.location).all(|(x, y)| (x + y).abs() <= 1e-12 * (1.0 + y.abs()))
                && (atoms[j].mass - a.mass).abs() <= 1e-12 * a.mass
        });
        match partner {
            Some(j) => {
                used[i] = true;
                used[j] = true;
            }
            None => {
                return Err(Error::Asymmetric(format!(
                    "atom at {:?} with mass {} has no mirror image",
                    a.location, a.mass
                )))
            }
        }
    }
    Ok(())
}

/// Continuous-time stream of band jumps used by the integrators.
///
/// Arrivals form a Poisson process of rate `ν(delta < |z| ≤ outer)`. Marks
/// with `|z| > keep` are drawn but discarded, so streams built with the same
/// generator and `outer` but different `keep` are coupled: the smaller band
/// sees a thinning of the larger one.
#[derive(Debug)]
pub struct BandStream<'a, R> {
    model: &'a LevyMeasureModel,
    delta: f64,
    outer: f64,
    keep: f64,
    rate: f64,
    next: f64,
    rng: R,
    mark: Vec<f64>,
    largest_kept: f64,
}

impl<'a, R: Rng> BandStream<'a, R> {
    pub fn new(model: &'a LevyMeasureModel, delta: f64, outer: f64, keep: f64, mut rng: R) -> Result<Self> {
        if !(delta > 0.0 && delta < keep && keep <= outer) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < delta < eps ≤ outer band, got delta = {delta}, eps = {keep}, outer = {outer}"
            )));
        }
        let rate = model.band_mass(delta, outer);
        if !rate.is_finite() {
            return Err(Error::InvalidArgument("band carries infinite mass".into()));
        }
        let next = if rate > 0.0 {
            let e: f64 = Exp1.sample(&mut rng);
            e / rate
        } else {
            f64::INFINITY
        };
        Ok(Self { model, delta, outer, keep, rate, next, rng, mark: vec![0.0; model.dimension()], largest_kept: 0.0 })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Largest `|z|` among the kept jumps so far.
    pub fn largest_kept(&self) -> f64 {
        self.largest_kept
    }

    /// Adds to `out` the marks of all kept jumps arriving in `(previous, t_end]`.
    /// Returns the number of kept jumps.
    pub fn advance_to(&mut self, t_end: f64, out: &mut [f64]) -> usize {
        let mut kept = 0;
        while self.next <= t_end {
            self.model.sample_band_mark(self.delta, self.outer, &mut self.rng, &mut self.mark);
            let size = norm(&self.mark);
            if size <= self.keep {
                self.largest_kept = self.largest_kept.max(size);
                for (o, m) in out.iter_mut().zip(&self.mark) {
                    *o += m;
                }
                kept += 1;
            }
            let e: f64 = Exp1.sample(&mut self.rng);
            self.next += e / self.rate;
        }
        kept
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, integrate_to_infinity, Tolerance};
    use crate::rng::stream_rng;

    fn two_atoms() -> LevyMeasureModel {
        LevyMeasureModel::from_positive_half(1, vec![Atom::scalar(1.0, 0.7)]).unwrap()
    }

    #[test]
    fn atom_tail_masses() {
        let m = two_atoms();
        assert_eq!(m.mass_above(0.5), 1.4);
        assert_eq!(m.mass_above(2.0), 0.0);
        assert_eq!(m.small_jump_second_moment(0.5), 0.0);
        let s = LevyMeasureModel::from_positive_half(1, vec![Atom::scalar(0.2, 3.0)]).unwrap();
        assert!((s.small_jump_second_moment(0.5) - 0.24).abs() < 1e-15);
    }

    #[test]
    fn radial_tail_matches_quadrature() {
        let m = LevyMeasureModel::radial_density(1.0, 1.5, f64::INFINITY).unwrap();
        let closed = m.mass_above(0.1);
        assert!((closed - 2.0 * 0.1f64.powf(-1.5) / 1.5).abs() < 1e-12 * closed);
        let quad = 2.0 * integrate_to_infinity(|z| z.powf(-2.5), 0.1, Tolerance::DEFAULT).unwrap();
        assert!((closed - quad).abs() < 1e-8 * closed);

        let m2 = m.small_jump_second_moment(0.1);
        let quad2 = 2.0 * integrate(|z| z * z * z.powf(-2.5), 0.0, 0.1, Tolerance::DEFAULT).unwrap();
        assert!((m2 - 2.0 * 0.1f64.powf(0.5) / 0.5).abs() < 1e-12);
        assert!((m2 - quad2).abs() < 1e-7 * m2);
    }

    #[test]
    fn cutoff_truncates_the_tail() {
        let m = LevyMeasureModel::radial_density(0.5, 0.8, 3.0).unwrap();
        assert_eq!(m.mass_above(3.0), 0.0);
        let q = 2.0 * integrate(|z| 0.5 * z.powf(-1.8), 1.0, 3.0, Tolerance::DEFAULT).unwrap();
        assert!((m.mass_above(1.0) - q).abs() < 1e-9);
    }

    #[test]
    fn compound_poisson_moments_match_quadrature() {
        let law = RadialLaw::Exponential { scale: 0.4 };
        let m = LevyMeasureModel::compound_poisson(1, 2.0, law).unwrap();
        let dens = |x: f64| (-x / 0.4).exp() / 0.4;
        let q = 2.0 * integrate(|x| x * x * dens(x), 0.0, 0.3, Tolerance::DEFAULT).unwrap();
        assert!((m.small_jump_second_moment(0.3) - q).abs() < 1e-10);
        assert!((m.mass_above(0.3) - 2.0 * (-0.75f64).exp()).abs() < 1e-14);
        let tiny = m.small_jump_second_moment(1e-5);
        let qt = 2.0 * integrate(|x| x * x * dens(x), 0.0, 1e-5, Tolerance::DEFAULT).unwrap();
        assert!((tiny - qt).abs() < 1e-12 * qt.max(1e-30) + 1e-25);

        let u = LevyMeasureModel::compound_poisson(1, 1.0, RadialLaw::Uniform { low: 0.1, high: 0.5 }).unwrap();
        assert!((u.band_second_moment(0.0, 0.3) - (0.027 - 0.001) / 1.2).abs() < 1e-14);
        assert!((u.mass_above(0.3) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn asymmetric_atoms_rejected() {
        let r = LevyMeasureModel::symmetric_atoms(1, vec![Atom::scalar(1.0, 1.0), Atom::scalar(-1.0, 0.5)]);
        assert!(matches!(r, Err(Error::Asymmetric(_))));
        let ok = LevyMeasureModel::symmetric_atoms(1, vec![Atom::scalar(1.0, 1.0), Atom::scalar(-1.0, 1.0)]);
        assert!(ok.is_ok());
        assert!(LevyMeasureModel::symmetric_atoms(1, vec![Atom::scalar(0.0, 1.0), Atom::scalar(0.0, 1.0)]).is_err());
    }

    #[test]
    fn interval_masses_are_symmetric() {
        let models = [
            LevyMeasureModel::from_positive_half(1, vec![Atom::scalar(0.3, 2.0), Atom::scalar(1.7, 0.1)]).unwrap(),
            LevyMeasureModel::radial_density(1.0, 1.2, 5.0).unwrap(),
            LevyMeasureModel::compound_poisson(1, 3.0, RadialLaw::Uniform { low: 0.0, high: 2.0 }).unwrap(),
        ];
        for m in &models {
            for &(lo, hi) in &[(0.1, 0.5), (0.25, 2.0), (1.0, 10.0), (0.05, 0.31)] {
                let p = m.interval_mass(lo, hi);
                let n = m.interval_mass(-hi, -lo);
                assert!((p - n).abs() <= 1e-12 * p.max(1.0), "{m:?} ({lo},{hi}): {p} vs {n}");
            }
        }
    }

    #[test]
    fn empty_band_gives_zero_increment_and_no_jumps() {
        let m = two_atoms();
        let mut rng = stream_rng(1, 1);
        assert_eq!(m.sample_small_jump_increment(0.01, 0.5, 1.0, &mut rng).unwrap(), vec![0.0]);
        assert!(m.sample_large_jumps(2.0, 100.0, &mut rng).is_empty());
        assert!(m.sample_small_jump_increment(0.5, 0.5, 1.0, &mut rng).is_err());
    }

    #[test]
    fn band_marks_stay_in_band() {
        let models = [
            LevyMeasureModel::radial_density(1.0, 1.5, f64::INFINITY).unwrap(),
            LevyMeasureModel::compound_poisson(3, 1.0, RadialLaw::Exponential { scale: 1.0 }).unwrap(),
            LevyMeasureModel::from_positive_half(2, vec![Atom::new(vec![0.3, 0.4], 1.0), Atom::new(vec![1.0, 1.0], 2.0)])
                .unwrap(),
        ];
        let mut rng = stream_rng(9, 3);
        for m in &models {
            let mut out = vec![0.0; m.dimension()];
            for _ in 0..2000 {
                m.sample_band_mark(0.2, 1.0, &mut rng, &mut out);
                let r = norm(&out);
                assert!(r > 0.2 && r <= 1.0 + 1e-12, "{r}");
            }
            for e in m.sample_large_jumps(1.0, 50.0, &mut rng) {
                assert!(norm(&e.mark) > 1.0);
            }
        }
    }

    #[test]
    fn large_jump_times_are_strictly_increasing() {
        let m = LevyMeasureModel::radial_density(1.0, 0.7, f64::INFINITY).unwrap();
        let mut rng = stream_rng(3, 2);
        let ev = m.sample_large_jumps(0.05, 20.0, &mut rng);
        assert!(ev.len() > 10);
        assert!(ev.windows(2).all(|w| w[0].time < w[1].time));
        assert!(ev.iter().all(|e| e.time > 0.0 && e.time <= 20.0));
    }

    #[test]
    fn band_stream_thinning_keeps_the_inner_band() {
        let m = LevyMeasureModel::from_positive_half(1, vec![Atom::scalar(0.2, 3.0), Atom::scalar(0.8, 2.0)]).unwrap();
        let mut wide = BandStream::new(&m, 0.01, 1.0, 1.0, stream_rng(4, 1)).unwrap();
        let mut thin = BandStream::new(&m, 0.01, 1.0, 0.5, stream_rng(4, 1)).unwrap();
        let (mut a, mut b) = ([0.0], [0.0]);
        for k in 1..=200 {
            wide.advance_to(k as f64 * 0.05, &mut a);
            thin.advance_to(k as f64 * 0.05, &mut b);
        }
        // the difference consists of whole ±0.8 jumps
        let d = (a[0] - b[0]) / 0.8;
        assert!((d - d.round()).abs() < 1e-9);
        // b is a sum of ±0.2 jumps only
        let k = b[0] / 0.2;
        assert!((k - k.round()).abs() < 1e-9);
    }
}
