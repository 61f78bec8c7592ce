//! The fading-memory phase space.
//!
//! A history `φ: (-∞, 0] → ℝⁿ` is stored as a piecewise-linear grid on
//! `[θ_min, 0]` plus an exponential tail `φ(θ) = e^{-rθ}·v` for `θ < θ_min`.
//! Its size is measured by the weighted sup-norm `‖φ‖_r = sup e^{rθ}|φ(θ)|`;
//! on the tail the weighted value is the constant `|v|`.
//!
//! Jumps are stored as double nodes: two consecutive nodes at the same time,
//! the first holding the left limit and the second the (right-continuous)
//! value.
//!
//! Node times are kept in absolute time together with the time `now` that
//! corresponds to `θ = 0`, so advancing a segment never rewrites old nodes.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::levy::norm;
use crate::maps::PointMap;
use crate::quadrature::{integrate_vec, integrate_vec_to_neg_infinity, Tolerance};
use crate::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// Continuity tolerance between the grid and the tail at `θ_min`.
pub const JUNCTION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct HistorySegment {
    r: f64,
    dim: usize,
    now: f64,
    times: Vec<f64>,
    values: Vec<f64>,
    start: usize,
    /// `w` with `x(s) = e^{-rs}·w` for absolute times `s` before the grid.
    tail_anchor: Vec<f64>,
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0f64).max(x.abs()).max(y.abs()))
}

impl HistorySegment {
    /// Builds a segment from grid nodes (`thetas` nondecreasing, ending at 0,
    /// at most two nodes per time), flattened `values` and tail coefficient `v`.
    pub fn new(r: f64, thetas: Vec<f64>, values: Vec<f64>, tail: Vec<f64>) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("fading rate r = {r} must be positive")));
        }
        let dim = tail.len();
        if dim == 0 {
            return Err(Error::InvalidArgument("state dimension must be positive".into()));
        }
        if thetas.is_empty() || values.len() != thetas.len() * dim {
            return Err(Error::DimensionMismatch { expected: thetas.len() * dim, got: values.len() });
        }
        if *thetas.last().unwrap() != 0.0 {
            return Err(Error::InvalidArgument("grid must end at θ = 0".into()));
        }
        for w in thetas.windows(2) {
            if !(w[0] <= w[1]) || !w[0].is_finite() {
                return Err(Error::InvalidArgument("grid times must be finite and nondecreasing".into()));
            }
        }
        for w in thetas.windows(3) {
            if w[0] == w[2] {
                return Err(Error::InvalidArgument("at most two nodes may share a time".into()));
            }
        }
        if !values.iter().chain(&tail).all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("segment values must be finite".into()));
        }
        let theta_min = thetas[0];
        let expected: Vec<f64> = tail.iter().map(|v| (-r * theta_min).exp() * v).collect();
        if !close(&values[..dim], &expected, JUNCTION_TOLERANCE) {
            return Err(Error::Consistency(format!(
                "grid value {:?} at θ_min = {theta_min} does not meet the tail value {:?}",
                &values[..dim],
                expected
            )));
        }
        Ok(Self { r, dim, now: 0.0, times: thetas, values, start: 0, tail_anchor: tail })
    }

    /// Like [`HistorySegment::new`] with the tail chosen to meet the first node.
    pub fn with_matched_tail(r: f64, thetas: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let dim = if thetas.is_empty() { 0 } else { values.len() / thetas.len() };
        if dim == 0 {
            return Err(Error::InvalidArgument("empty grid".into()));
        }
        let theta_min = thetas[0];
        let tail = values[..dim].iter().map(|x| (r * theta_min).exp() * x).collect();
        Self::new(r, thetas, values, tail)
    }

    /// `φ ≡ c` on `[θ_min, 0]` with the tail matched continuously at `θ_min`.
    pub fn constant(r: f64, value: &[f64], theta_min: f64) -> Result<Self> {
        if !(theta_min <= 0.0) {
            return Err(Error::InvalidArgument(format!("θ_min = {theta_min} must be nonpositive")));
        }
        if theta_min == 0.0 {
            return Self::with_matched_tail(r, vec![0.0], value.to_vec());
        }
        let mut values = value.to_vec();
        values.extend_from_slice(value);
        Self::with_matched_tail(r, vec![theta_min, 0.0], values)
    }

    /// `φ(θ) = e^{-rθ}·v` on the whole half-line.
    pub fn pure_tail(r: f64, v: &[f64]) -> Result<Self> {
        Self::new(r, vec![0.0], v.to_vec(), v.to_vec())
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Absolute time corresponding to `θ = 0`.
    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn len(&self) -> usize {
        self.times.len() - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn theta_min(&self) -> f64 {
        self.times[self.start] - self.now
    }

    /// Current tail coefficient `v`.
    pub fn tail_coefficient(&self) -> Vec<f64> {
        let s = (-self.r * self.now).exp();
        self.tail_anchor.iter().map(|w| s * w).collect()
    }

    /// `φ(0)`.
    pub fn head(&self) -> &[f64] {
        let n = self.times.len();
        &self.values[(n - 1) * self.dim..n * self.dim]
    }

    /// Iterates over `(θ, value)` grid nodes, double nodes included.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, &[f64])> + '_ {
        (self.start..self.times.len()).map(move |i| (self.times[i] - self.now, self.node(i)))
    }

    #[inline]
    fn node(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// `φ(θ)`, right-continuous at double nodes.
    pub fn value_at(&self, theta: f64, out: &mut [f64]) {
        self.value_at_time(self.now + theta, out)
    }

    pub(crate) fn value_at_time(&self, s: f64, out: &mut [f64]) {
        let live = &self.times[self.start..];
        if s < live[0] {
            let scale = (-self.r * s).exp();
            for (o, w) in out.iter_mut().zip(&self.tail_anchor) {
                *o = scale * w;
            }
            return;
        }
        let i = self.start + live.partition_point(|&t| t <= s) - 1;
        if i + 1 == self.times.len() {
            out.copy_from_slice(self.node(i));
            return;
        }
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let lambda = (s - t0) / (t1 - t0);
        let (a, b) = (self.node(i), self.node(i + 1));
        for k in 0..self.dim {
            out[k] = a[k] + lambda * (b[k] - a[k]);
        }
    }

    /// Left limit `φ(θ-)`; equals `φ(θ)` away from double nodes.
    pub fn left_limit(&self, theta: f64, out: &mut [f64]) {
        let s = self.now + theta;
        let live = &self.times[self.start..];
        let j = self.start + live.partition_point(|&t| t < s);
        if j < self.times.len() && self.times[j] == s {
            out.copy_from_slice(self.node(j));
        } else {
            self.value_at_time(s, out);
        }
    }

    /// `‖φ‖_r = sup_{θ≤0} e^{rθ}|φ(θ)|`, exact on every linear piece.
    pub fn fading_norm(&self) -> f64 {
        let mut best = norm(&self.tail_coefficient());
        for i in self.start..self.times.len() {
            let th = self.times[i] - self.now;
            best = best.max((self.r * th).exp() * norm(self.node(i)));
            if i + 1 < self.times.len() && self.times[i + 1] > self.times[i] {
                let th1 = self.times[i + 1] - self.now;
                best = best.max(piece_weighted_sup(self.r, th, self.node(i), th1, self.node(i + 1)));
            }
        }
        best
    }

    /// The history at time `t + dt`, where `dt` is the last entry of `taus`.
    ///
    /// `taus` are offsets from the current time, starting at 0 and
    /// nondecreasing; `values` holds one state per offset. The first value
    /// must equal `φ(0)`; a repeated offset declares a jump.
    pub fn shift_append(&self, taus: &[f64], values: &[f64]) -> Result<Self> {
        let mut next = self.clone();
        next.append(taus, values)?;
        Ok(next)
    }

    /// In-place form of [`HistorySegment::shift_append`].
    pub fn append(&mut self, taus: &[f64], values: &[f64]) -> Result<()> {
        if taus.is_empty() {
            return Ok(());
        }
        if values.len() != taus.len() * self.dim {
            return Err(Error::DimensionMismatch { expected: taus.len() * self.dim, got: values.len() });
        }
        if taus[0] != 0.0 {
            return Err(Error::Consistency("path must start at offset 0".into()));
        }
        if !close(&values[..self.dim], self.head(), JUNCTION_TOLERANCE) {
            return Err(Error::Consistency(format!(
                "path starts at {:?} but the segment ends at {:?}; declare a jump with a repeated offset",
                &values[..self.dim],
                self.head()
            )));
        }
        for w in taus.windows(2) {
            if !(w[1] >= w[0]) {
                return Err(Error::Consistency("path offsets must be nondecreasing".into()));
            }
        }
        let base = self.now;
        let mut last_tau = 0.0;
        for (k, &tau) in taus.iter().enumerate().skip(1) {
            let v = &values[k * self.dim..(k + 1) * self.dim];
            if tau == last_tau {
                self.push_jump(v);
            } else {
                self.advance_to(base + tau, v);
            }
            last_tau = tau;
        }
        self.now = base + last_tau;
        Ok(())
    }

    /// Moves `θ = 0` to absolute time `t` and records `x(t) = value`,
    /// linearly interpolated from the previous head.
    pub fn advance_to(&mut self, t: f64, value: &[f64]) {
        debug_assert!(t > self.now);
        self.now = t;
        self.times.push(t);
        self.values.extend_from_slice(value);
    }

    /// Records an instantaneous jump at the current time: the current head
    /// becomes the left limit and `value` the new `φ(0)`.
    pub fn push_jump(&mut self, value: &[f64]) {
        self.times.push(self.now);
        self.values.extend_from_slice(value);
    }

    /// Drops the most recent node and resets `θ = 0` to `previous_now`.
    pub(crate) fn pop_to(&mut self, previous_now: f64) {
        self.times.pop();
        self.values.truncate(self.times.len() * self.dim);
        self.now = previous_now;
    }

    /// Folds the oldest nodes into the exponential tail while the folded
    /// region carries weighted values below `tol`. Nodes with
    /// `θ ≥ keep_after` are never folded.
    pub fn fold_tail(&mut self, tol: f64, keep_after: f64) {
        let limit = self.now + keep_after;
        let mut folded = false;
        while self.times.len() - self.start >= 3 {
            let k = self.start;
            let t1 = self.times[k + 1];
            if t1 >= limit || self.times[k + 2] == t1 {
                break;
            }
            let weight = (self.r * (t1 - self.now)).exp();
            let v = norm(&self.tail_coefficient());
            let worst = norm(self.node(k)).max(norm(self.node(k + 1))) * weight;
            if v >= tol || worst >= tol {
                break;
            }
            self.start += 1;
            folded = true;
        }
        if folded {
            let t0 = self.times[self.start];
            let scale = (self.r * t0).exp();
            let first: Vec<f64> = self.node(self.start).to_vec();
            for (w, x) in self.tail_anchor.iter_mut().zip(first) {
                *w = scale * x;
            }
            if self.start > 1024 && self.start * 2 > self.times.len() {
                self.times.drain(..self.start);
                self.values.drain(..self.start * self.dim);
                self.start = 0;
            }
        }
    }

    /// `a·φ + b·ψ` for segments sharing `r`, `θ_min` and the current time.
    pub fn linear_combination(a: f64, phi: &Self, b: f64, psi: &Self) -> Result<Self> {
        if phi.dim != psi.dim {
            return Err(Error::DimensionMismatch { expected: phi.dim, got: psi.dim });
        }
        if phi.r != psi.r || phi.theta_min() != psi.theta_min() {
            return Err(Error::InvalidArgument("segments must share r and θ_min".into()));
        }
        let dim = phi.dim;
        let mut bps: Vec<f64> = phi.nodes().map(|n| n.0).chain(psi.nodes().map(|n| n.0)).collect();
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (th, v) in Self::combined_nodes(a, phi, b, psi, &bps) {
            times.push(th);
            values.extend_from_slice(&v);
        }
        // the combined tail meets the first node by linearity
        let tail_anchor =
            phi.tail_coefficient().iter().zip(psi.tail_coefficient()).map(|(x, y)| a * x + b * y).collect();
        Ok(Self { r: phi.r, dim, now: 0.0, times, values, start: 0, tail_anchor })
    }

    fn combined_nodes(a: f64, phi: &Self, b: f64, psi: &Self, bps: &[f64]) -> Vec<(f64, Vec<f64>)> {
        let dim = phi.dim;
        let (mut l1, mut l2, mut r1, mut r2) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
        let mut out = Vec::new();
        for (idx, &th) in bps.iter().enumerate() {
            phi.left_limit(th, &mut l1);
            psi.left_limit(th, &mut l2);
            phi.value_at(th, &mut r1);
            psi.value_at(th, &mut r2);
            let left: Vec<f64> = (0..dim).map(|k| a * l1[k] + b * l2[k]).collect();
            let right: Vec<f64> = (0..dim).map(|k| a * r1[k] + b * r2[k]).collect();
            if idx > 0 && left != right {
                out.push((th, left));
            }
            out.push((th, right));
        }
        out
    }

    /// Multiplies every value (grid and tail) by `a`.
    pub fn scaled(&self, a: f64) -> Self {
        let mut s = self.clone();
        s.values.iter_mut().for_each(|v| *v *= a);
        s.tail_anchor.iter_mut().for_each(|v| *v *= a);
        s
    }
}

/// `sup_{θ∈[θ0,θ1]} e^{rθ}|x(θ)|` for `x` linear between `x0` and `x1`.
///
/// The derivative of `e^{2rθ}|α + βu|²` vanishes where
/// `2r|β|²u² + (4r α·β + 2|β|²)u + (2r|α|² + 2α·β) = 0`, so the supremum is
/// attained at an endpoint or at a root of that quadratic.
pub fn piece_weighted_sup(r: f64, theta0: f64, x0: &[f64], theta1: f64, x1: &[f64]) -> f64 {
    let len = theta1 - theta0;
    let mut best = ((r * theta0).exp() * norm(x0)).max((r * theta1).exp() * norm(x1));
    if !(len > 0.0) {
        return best;
    }
    let (mut a2, mut ab, mut b2) = (0.0, 0.0, 0.0);
    for (p, q) in x0.iter().zip(x1) {
        let beta = (q - p) / len;
        a2 += p * p;
        ab += p * beta;
        b2 += beta * beta;
    }
    let qa = 2.0 * r * b2;
    let qb = 4.0 * r * ab + 2.0 * b2;
    let qc = 2.0 * r * a2 + 2.0 * ab;
    let mut check = |u: f64| {
        if u > 0.0 && u < len {
            let w = (r * (theta0 + u)).exp();
            let mut s = 0.0;
            for (p, q) in x0.iter().zip(x1) {
                let v = p + (q - p) * (u / len);
                s += v * v;
            }
            best = best.max(w * s.sqrt());
        }
    };
    if qa == 0.0 {
        if qb != 0.0 {
            check(-qc / qb);
        }
        return best;
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return best;
    }
    let sq = disc.sqrt();
    let q = -0.5 * (qb + qb.signum() * sq);
    if q != 0.0 {
        check(q / qa);
        check(qc / q);
    } else {
        check(0.0);
    }
    best
}

/// A path over `(-∞, 0]` that can be integrated against a delay measure.
pub trait History {
    fn dim(&self) -> usize;
    fn rate(&self) -> f64;
    /// Below this `θ` the path has its closed exponential tail form.
    fn grid_start(&self) -> f64;
    /// Sorted, deduplicated kink and jump locations in `[grid_start, 0]`.
    fn breakpoints(&self) -> Vec<f64>;
    fn eval(&self, theta: f64, out: &mut [f64]);
    fn tail_is_zero(&self) -> bool;
}

impl History for HistorySegment {
    fn dim(&self) -> usize {
        self.dim
    }

    fn rate(&self) -> f64 {
        self.r
    }

    fn grid_start(&self) -> f64 {
        self.theta_min()
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.nodes().map(|n| n.0).collect();
        b.dedup();
        b
    }

    fn eval(&self, theta: f64, out: &mut [f64]) {
        self.value_at(theta, out)
    }

    fn tail_is_zero(&self) -> bool {
        self.tail_anchor.iter().all(|w| *w == 0.0)
    }
}

/// Two segments viewed as one path in `ℝ^{2n}`: `θ ↦ (φ(θ), ψ(θ))`.
#[derive(Debug, Clone, Copy)]
pub struct Stacked<'a>(pub &'a HistorySegment, pub &'a HistorySegment);

impl History for Stacked<'_> {
    fn dim(&self) -> usize {
        self.0.dim + self.1.dim
    }

    fn rate(&self) -> f64 {
        self.0.r.max(self.1.r)
    }

    fn grid_start(&self) -> f64 {
        self.0.theta_min().min(self.1.theta_min())
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.0.breakpoints();
        b.extend(self.1.breakpoints());
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    fn eval(&self, theta: f64, out: &mut [f64]) {
        let (a, b) = out.split_at_mut(self.0.dim);
        self.0.value_at(theta, a);
        self.1.value_at(theta, b);
    }

    fn tail_is_zero(&self) -> bool {
        self.0.tail_is_zero() && self.1.tail_is_zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum DelayKind {
    /// Point mass at `θ₀ ≤ 0`.
    Atom { theta0: f64 },
    /// Density `λe^{λθ}` on `(-∞, 0]`.
    Exponential { rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DelayComponent {
    pub weight: f64,
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub kind: DelayKind,
}

/// A probability measure on `(-∞, 0]`: a finite mixture of atoms and
/// exponential densities.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DelayMeasure {
    components: Vec<DelayComponent>,
}

pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

impl DelayMeasure {
    pub fn new(components: Vec<DelayComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("delay measure needs at least one component".into()));
        }
        for (i, c) in components.iter().enumerate() {
            if !(c.weight > 0.0 && c.weight.is_finite()) {
                return Err(Error::InvalidArgument(format!("component {i}: weight {} must be positive", c.weight)));
            }
            match c.kind {
                DelayKind::Atom { theta0 } if !(theta0 <= 0.0 && theta0.is_finite()) => {
                    return Err(Error::InvalidArgument(format!("component {i}: atom at θ₀ = {theta0} must be ≤ 0")))
                }
                DelayKind::Exponential { rate } if !(rate > 0.0 && rate.is_finite()) => {
                    return Err(Error::InvalidArgument(format!("component {i}: rate λ = {rate} must be positive")))
                }
                _ => {}
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::NotNormalized { total });
        }
        Ok(Self { components })
    }

    pub fn atom(theta0: f64) -> Result<Self> {
        Self::new(vec![DelayComponent { weight: 1.0, kind: DelayKind::Atom { theta0 } }])
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(vec![DelayComponent { weight: 1.0, kind: DelayKind::Exponential { rate } }])
    }

    pub fn components(&self) -> &[DelayComponent] {
        &self.components
    }

    /// `μ^(κ) = ∫ e^{-κθ} μ(dθ)`; `+∞` when an exponential component has `λ ≤ κ`.
    pub fn exp_moment(&self, kappa: f64) -> f64 {
        assert!(kappa > 0.0, "exp_moment requires κ > 0");
        self.components
            .iter()
            .map(|c| {
                c.weight
                    * match c.kind {
                        DelayKind::Atom { theta0 } => (-kappa * theta0).exp(),
                        DelayKind::Exponential { rate } if rate > kappa => rate / (rate - kappa),
                        DelayKind::Exponential { .. } => f64::INFINITY,
                    }
            })
            .sum()
    }

    /// Whether `μ ∈ M_κ`, i.e. `μ^(κ) < ∞`.
    pub fn in_m_kappa(&self, kappa: f64) -> bool {
        self.exp_moment(kappa).is_finite()
    }

    /// Index of the first component whose `κ`-moment diverges.
    pub fn divergent_component(&self, kappa: f64) -> Option<usize> {
        self.components.iter().position(|c| matches!(c.kind, DelayKind::Exponential { rate } if rate <= kappa))
    }

    /// Most negative atom location (0 when there are none).
    pub fn deepest_atom(&self) -> f64 {
        self.components
            .iter()
            .filter_map(|c| match c.kind {
                DelayKind::Atom { theta0 } => Some(theta0),
                DelayKind::Exponential { .. } => None,
            })
            .fold(0.0, f64::min)
    }
}

/// Quadrature settings for distributed-delay integrals.
pub const DELAY_TOLERANCE: Tolerance = Tolerance::DEFAULT;

/// `∫ g(φ(θ)) μ(dθ)`: atoms exactly, exponential components by adaptive
/// quadrature split at every grid node plus a half-line integral over the
/// closed-form tail.
pub fn delay_integral<H: History + ?Sized>(history: &H, measure: &DelayMeasure, g: &dyn PointMap) -> Result<Vec<f64>> {
    if g.input_dim() != history.dim() {
        return Err(Error::DimensionMismatch { expected: history.dim(), got: g.input_dim() });
    }
    let m = g.output_dim();
    let mut total = vec![0.0; m];
    let mut x = vec![0.0; history.dim()];
    let mut gx = vec![0.0; m];
    let mut breakpoints: Option<Vec<f64>> = None;
    for (i, c) in measure.components().iter().enumerate() {
        match c.kind {
            DelayKind::Atom { theta0 } => {
                history.eval(theta0, &mut x);
                g.eval(&x, &mut gx);
                for (t, v) in total.iter_mut().zip(&gx) {
                    *t += c.weight * v;
                }
            }
            DelayKind::Exponential { rate } => {
                let part = exponential_part(history, rate, g, i, breakpoints.get_or_insert_with(|| history.breakpoints()))?;
                for (t, v) in total.iter_mut().zip(&part) {
                    *t += c.weight * v;
                }
            }
        }
    }
    Ok(total)
}

fn exponential_part<H: History + ?Sized>(
    history: &H,
    rate: f64,
    g: &dyn PointMap,
    component: usize,
    breakpoints: &[f64],
) -> Result<Vec<f64>> {
    let r = history.rate();
    if !history.tail_is_zero() {
        if let Some(q) = g.growth_degree() {
            if q > 0.0 && rate <= q * r {
                return Err(Error::DivergentIntegral {
                    component,
                    reason: format!("integrand grows like e^{{-{q}·{r}·θ}} but the density decays only like e^{{{rate}θ}}"),
                });
            }
        }
    }
    let m = g.output_dim();
    let dim = history.dim();
    let mut x = vec![0.0; dim];
    let grid_start = history.grid_start();
    let mut integrand = |theta: f64, out: &mut [f64]| {
        let w = rate * (rate * theta).exp();
        if w == 0.0 {
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        history.eval(theta, &mut x);
        g.eval(&x, out);
        for v in out.iter_mut() {
            *v *= w;
            // far in a convergent tail the factors over- and underflow
            if !v.is_finite() && theta < grid_start {
                *v = 0.0;
            }
        }
    };
    let mut total = vec![0.0; m];
    for w in breakpoints.windows(2) {
        if w[1] > w[0] {
            let est = integrate_vec(&mut integrand, w[0], w[1], m, DELAY_TOLERANCE)?;
            for (t, v) in total.iter_mut().zip(&est.value) {
                *t += v;
            }
        }
    }
    let tail = integrate_vec_to_neg_infinity(&mut integrand, history.grid_start(), m, DELAY_TOLERANCE).map_err(|e| match e {
        Error::Quadrature { residual, .. } if !residual.is_finite() => Error::DivergentIntegral {
            component,
            reason: "tail integrand is not integrable".into(),
        },
        other => other,
    })?;
    for (t, v) in total.iter_mut().zip(&tail.value) {
        *t += v;
    }
    Ok(total)
}
