//! Drift functionals and time integrators.
//!
//! Three systems share one stepping engine:
//!
//! * the deterministic limit `dX = f(X_t) dt`;
//! * the truncated system driven only by jumps with `δ < |z| ≤ ε`;
//! * the full system, built by interlacing: jumps with `|z| > 1` are drawn
//!   upfront, their times are inserted into the grid and applied as
//!   instantaneous state increments, and the band `δ < |z| ≤ 1` drives the
//!   motion in between.
//!
//! Small jumps come from a [`BandStream`] over `(δ, 1]` on
//! [`SMALL_JUMP_STREAM`]; marks above the truncation level are drawn and
//! discarded. Large jumps use [`LARGE_JUMP_STREAM`]. Consequently a truncated
//! run and a full run with the same seed coincide bitwise whenever no jump
//! above the truncation level occurs.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::levy::{norm, BandStream, JumpEvent, LevyMeasureModel};
use crate::maps::{Polynomial, SharedMap};
use crate::memory::{delay_integral, piece_weighted_sup, DelayKind, DelayMeasure, HistorySegment};
use crate::quadrature::gk15;
use crate::rng::{stream_rng, TrialRng, LARGE_JUMP_STREAM, SMALL_JUMP_STREAM};
use crate::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// Jumps larger than this are handled by interlacing in the full system.
pub const LARGE_JUMP_THRESHOLD: f64 = 1.0;

pub const DEFAULT_BLOW_UP_BOUND: f64 = 1e8;

/// Weighted magnitude below which old grid nodes are folded into the tail.
pub const FOLD_TOLERANCE: f64 = 1e-12;

pub const SHIFT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct DelayPart {
    pub map: SharedMap,
    pub measure: DelayMeasure,
}

/// `f(φ) = local(φ(0)) + Σ_i ∫ h_i(φ(θ)) μ_i(dθ)`.
#[derive(Debug, Clone)]
pub struct DriftSpec {
    dim: usize,
    local: SharedMap,
    delay_parts: Vec<DelayPart>,
}

impl DriftSpec {
    pub fn new(dim: usize, local: SharedMap, delay_parts: Vec<DelayPart>) -> Result<Self> {
        let check = |m: &SharedMap| {
            if m.input_dim() != dim || m.output_dim() != dim {
                Err(Error::DimensionMismatch { expected: dim, got: m.input_dim() })
            } else {
                Ok(())
            }
        };
        check(&local)?;
        for p in &delay_parts {
            check(&p.map)?;
        }
        Ok(Self { dim, local, delay_parts })
    }

    /// `f(φ) = 1 - 2φ(0) - 2φ(0)³ + ∫ φ(θ)² μ₁(dθ)` in one dimension.
    pub fn cubic_example(mu1: DelayMeasure) -> Self {
        Self {
            dim: 1,
            local: Arc::new(Polynomial::new(1, vec![1.0, -2.0, 0.0, -2.0])),
            delay_parts: vec![DelayPart { map: Arc::new(Polynomial::new(1, vec![0.0, 0.0, 1.0])), measure: mu1 }],
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, local: Arc::new(Polynomial::new(dim, Vec::new())), delay_parts: Vec::new() }
    }

    /// `f(φ) = a·φ(0)`.
    pub fn linear(dim: usize, a: f64) -> Self {
        Self { dim, local: Arc::new(Polynomial::new(dim, vec![0.0, a])), delay_parts: Vec::new() }
    }

    /// Component-wise polynomials for the local part and each delay part.
    pub fn polynomial(dim: usize, local: Vec<f64>, parts: Vec<(Vec<f64>, DelayMeasure)>) -> Self {
        Self {
            dim,
            local: Arc::new(Polynomial::new(dim, local)),
            delay_parts: parts
                .into_iter()
                .map(|(c, measure)| DelayPart { map: Arc::new(Polynomial::new(dim, c)), measure })
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn local(&self) -> &SharedMap {
        &self.local
    }

    pub fn delay_parts(&self) -> &[DelayPart] {
        &self.delay_parts
    }

    /// Checks that every delay integral converges on all of `D_r`: an
    /// exponential component of rate `λ` paired with a map of growth degree
    /// `q` needs `λ > q·r`.
    pub fn validate(&self, r: f64) -> Result<()> {
        for (i, p) in self.delay_parts.iter().enumerate() {
            let q = p.map.growth_degree().unwrap_or(0.0);
            if q > 0.0 {
                if let Some(c) = p.measure.divergent_component(q * r) {
                    return Err(Error::DivergentIntegral {
                        component: c,
                        reason: format!("delay part {i}: the measure is not in M_κ for κ = {q}·{r}"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Most negative atom across all delay parts.
    fn deepest_atom(&self) -> f64 {
        self.delay_parts.iter().map(|p| p.measure.deepest_atom()).fold(0.0, f64::min)
    }
}

/// `f(φ)` evaluated directly on a segment.
pub fn evaluate_drift(spec: &DriftSpec, segment: &HistorySegment) -> Result<Vec<f64>> {
    if segment.dim() != spec.dim {
        return Err(Error::DimensionMismatch { expected: spec.dim, got: segment.dim() });
    }
    let mut out = vec![0.0; spec.dim];
    spec.local.eval(segment.head(), &mut out);
    for p in &spec.delay_parts {
        let part = delay_integral(segment, &p.measure, p.map.as_ref())?;
        for (o, v) in out.iter_mut().zip(part) {
            *o += v;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Scheme {
    #[default]
    Euler,
    Heun,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub blow_up_bound: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { dt: 1e-3, scheme: Scheme::Euler, blow_up_bound: DEFAULT_BLOW_UP_BOUND }
    }
}

impl IntegratorConfig {
    pub fn with_dt(dt: f64) -> Self {
        Self { dt, ..Self::default() }
    }
}

/// Noise driving one run.
#[derive(Debug, Clone, Copy)]
pub enum Noise<'a> {
    None,
    /// Band `δ < |z| ≤ ε` only.
    Truncated { levy: &'a LevyMeasureModel, eps: f64, delta: f64, seed: u64 },
    /// Band `δ < |z| ≤ 1` plus sampled jumps with `|z| > 1`.
    Full { levy: &'a LevyMeasureModel, delta: f64, seed: u64 },
    /// Band `δ < |z| ≤ 1` plus an explicit list of large jumps.
    Interlaced { levy: &'a LevyMeasureModel, delta: f64, seed: u64, jumps: &'a [JumpEvent] },
}

/// One recorded point of a trajectory.
#[derive(Debug, Clone, Copy)]
pub struct StepInfo<'a> {
    pub time: f64,
    pub state: &'a [f64],
    pub norm: f64,
    /// Set on the post-jump row of a large jump.
    pub jump: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub final_segment: HistorySegment,
    pub final_norm: f64,
    pub sup_abs: f64,
    pub jump_log: Vec<JumpEvent>,
    /// Largest `|z|` among band jumps that were applied.
    pub largest_small_jump: f64,
    pub small_jump_count: usize,
    /// Rows where `‖x_t‖_r > max(sup_{s≤t}|x(s)|, e^{-rt}‖ξ‖_r) + SHIFT_TOLERANCE`.
    pub shift_violations: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TrajectoryMeta {
    pub seed: Option<u64>,
    pub dt: f64,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub scheme: Scheme,
    pub r: f64,
    pub system: String,
}

/// Full time series of one run. At a large jump the time appears twice:
/// first with the pre-jump state, then with the post-jump state.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub dim: usize,
    pub times: Vec<f64>,
    /// Flattened states, `dim` entries per row.
    pub states: Vec<f64>,
    pub norms: Vec<f64>,
    pub jump_flags: Vec<bool>,
    pub jump_log: Vec<JumpEvent>,
    pub meta: TrajectoryMeta,
    pub final_segment: HistorySegment,
    pub shift_violations: usize,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    /// `sup_{s ≤ t_i} |X(s)|` for every row.
    pub fn running_sup(&self) -> Vec<f64> {
        let mut m = 0.0f64;
        (0..self.len())
            .map(|i| {
                m = m.max(norm(self.state(i)));
                m
            })
            .collect()
    }
}

struct ExpCache {
    part: usize,
    weight: f64,
    rate: f64,
    value: Vec<f64>,
}

struct Engine<'a> {
    spec: &'a DriftSpec,
    dim: usize,
    caches: Vec<ExpCache>,
    x: Vec<f64>,
    g: Vec<f64>,
    piece: Vec<f64>,
    tentative: Vec<Vec<f64>>,
}

impl<'a> Engine<'a> {
    fn new(spec: &'a DriftSpec, xi: &HistorySegment) -> Result<Self> {
        let mut caches = Vec::new();
        for (pi, p) in spec.delay_parts.iter().enumerate() {
            for c in p.measure.components() {
                if let DelayKind::Exponential { rate } = c.kind {
                    let single = DelayMeasure::exponential(rate)?;
                    let value = delay_integral(xi, &single, p.map.as_ref())?;
                    caches.push(ExpCache { part: pi, weight: c.weight, rate, value });
                }
            }
        }
        let dim = spec.dim;
        let tentative = caches.iter().map(|c| vec![0.0; c.value.len()]).collect();
        Ok(Self { spec, dim, caches, x: vec![0.0; dim], g: vec![0.0; dim], piece: vec![0.0; dim], tentative })
    }

    /// `∫_0^h g(x0 + (x1 - x0)u/h) λ e^{λ(u-h)} du` into `self.piece`.
    fn new_piece(&mut self, part: usize, rate: f64, h: f64, x0: &[f64], x1: &[f64]) {
        let map = self.spec.delay_parts[part].map.as_ref();
        let dim = self.dim;
        let x = &mut self.x;
        let mut f = |u: f64, out: &mut [f64]| {
            let lam = u / h;
            for k in 0..dim {
                x[k] = x0[k] + (x1[k] - x0[k]) * lam;
            }
            map.eval(x, out);
            let w = rate * (rate * (u - h)).exp();
            for v in out.iter_mut() {
                *v *= w;
            }
        };
        gk15(&mut f, 0.0, h, dim, &mut self.piece);
    }

    /// Updates the exponential caches across a step of length `h`; with
    /// `commit = false` the result goes to the tentative buffers.
    fn advance_caches(&mut self, h: f64, x0: &[f64], x1: &[f64], commit: bool) {
        for i in 0..self.caches.len() {
            let (part, rate) = (self.caches[i].part, self.caches[i].rate);
            self.new_piece(part, rate, h, x0, x1);
            let decay = (-rate * h).exp();
            let committed = &mut self.caches[i].value;
            if commit {
                for (v, p) in committed.iter_mut().zip(&self.piece) {
                    *v = decay * *v + p;
                }
            } else {
                for ((t, v), p) in self.tentative[i].iter_mut().zip(committed.iter()).zip(&self.piece) {
                    *t = decay * v + p;
                }
            }
        }
    }

    fn drift(&mut self, seg: &HistorySegment, use_tentative: bool, out: &mut [f64]) {
        self.spec.local.eval(seg.head(), out);
        for p in &self.spec.delay_parts {
            for c in p.measure.components() {
                if let DelayKind::Atom { theta0 } = c.kind {
                    seg.value_at(theta0, &mut self.x);
                    p.map.eval(&self.x, &mut self.g);
                    for (o, v) in out.iter_mut().zip(&self.g) {
                        *o += c.weight * v;
                    }
                }
            }
        }
        for (i, c) in self.caches.iter().enumerate() {
            let v = if use_tentative { &self.tentative[i] } else { &c.value };
            for (o, x) in out.iter_mut().zip(v) {
                *o += c.weight * x;
            }
        }
    }
}

fn step_count(t_end: f64, dt: f64) -> usize {
    let ratio = t_end / dt;
    let k = ratio.round();
    if (ratio - k).abs() <= 1e-9 * ratio.max(1.0) {
        (k as usize).max(1)
    } else {
        ratio.ceil() as usize
    }
}

/// Lévy model, band `(δ, outer, seed)` and large jumps of one run.
type NoisePlan<'a> = (Option<&'a LevyMeasureModel>, Option<(f64, f64, u64)>, Vec<JumpEvent>);

/// Runs one trajectory, reporting every grid point (and both sides of every
/// large jump) to `observer`.
pub fn simulate(
    spec: &DriftSpec,
    xi: &HistorySegment,
    t_end: f64,
    cfg: &IntegratorConfig,
    noise: Noise<'_>,
    observer: &mut dyn FnMut(StepInfo<'_>),
) -> Result<RunOutcome> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon T = {t_end} must be positive")));
    }
    if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt = {} must be positive", cfg.dt)));
    }
    if xi.dim() != spec.dim {
        return Err(Error::DimensionMismatch { expected: spec.dim, got: xi.dim() });
    }
    if xi.now() != 0.0 {
        return Err(Error::InvalidArgument("initial segment must be anchored at t = 0".into()));
    }
    spec.validate(xi.r())?;

    let (levy, band_setup, large): NoisePlan<'_> = match noise {
        Noise::None => (None, None, Vec::new()),
        Noise::Truncated { levy, eps, delta, seed } => {
            if !(eps > 0.0 && eps <= LARGE_JUMP_THRESHOLD) {
                return Err(Error::InvalidArgument(format!("truncation level eps = {eps} must lie in (0, 1]")));
            }
            (Some(levy), Some((delta, eps, seed)), Vec::new())
        }
        Noise::Full { levy, delta, seed } => {
            let mut rng = stream_rng(seed, LARGE_JUMP_STREAM);
            let jumps = levy.sample_large_jumps(LARGE_JUMP_THRESHOLD, t_end, &mut rng);
            (Some(levy), Some((delta, LARGE_JUMP_THRESHOLD, seed)), jumps)
        }
        Noise::Interlaced { levy, delta, seed, jumps } => {
            let mut sorted = jumps.to_vec();
            sorted.retain(|j| j.time > 0.0 && j.time <= t_end);
            sorted.sort_by(|a, b| a.time.total_cmp(&b.time));
            (Some(levy), Some((delta, LARGE_JUMP_THRESHOLD, seed)), sorted)
        }
    };
    if let Some(l) = levy {
        if l.dimension() != spec.dim {
            return Err(Error::DimensionMismatch { expected: spec.dim, got: l.dimension() });
        }
    }
    let mut band: Option<BandStream<'_, TrialRng>> = match (levy, band_setup) {
        (Some(l), Some((delta, keep, seed))) => {
            Some(BandStream::new(l, delta, LARGE_JUMP_THRESHOLD, keep, stream_rng(seed, SMALL_JUMP_STREAM))?)
        }
        _ => None,
    };

    let dim = spec.dim;
    let r = xi.r();
    let mut engine = Engine::new(spec, xi)?;
    let mut seg = xi.clone();
    let keep_after = spec.deepest_atom() - 2.0 * cfg.dt;
    let mut x: Vec<f64> = seg.head().to_vec();
    let mut norm_now = seg.fading_norm();
    let mut sup_abs = norm(&x);
    let xi_norm = norm_now;
    let mut shift_violations = 0usize;
    let shift_ok = |t: f64, n: f64, sup: f64| n <= sup.max((-r * t).exp() * xi_norm) + SHIFT_TOLERANCE;
    observer(StepInfo { time: 0.0, state: &x, norm: norm_now, jump: false });

    let steps = step_count(t_end, cfg.dt);
    let grid_time = |k: usize| if k >= steps { t_end } else { k as f64 * cfg.dt };
    let mut f0 = vec![0.0; dim];
    let mut f1 = vec![0.0; dim];
    let mut inc = vec![0.0; dim];
    let mut pred = vec![0.0; dim];
    let mut x_new = vec![0.0; dim];
    let mut jump_log = Vec::with_capacity(large.len());
    let mut largest_small_jump = 0.0f64;
    let mut small_jump_count = 0usize;
    let mut t = 0.0;
    let mut k = 1;
    let mut j = 0;
    let mut since_fold = 0usize;

    let blow_up = |time: f64, v: &[f64]| -> Result<()> {
        let m = norm(v);
        if !m.is_finite() || m > cfg.blow_up_bound {
            Err(Error::BlowUp { time, magnitude: m })
        } else {
            Ok(())
        }
    };

    while k <= steps || j < large.len() {
        let tg = if k <= steps { grid_time(k) } else { f64::INFINITY };
        let tj = if j < large.len() { large[j].time } else { f64::INFINITY };
        let t_next = tg.min(tj);
        if t_next > t {
            let h = t_next - t;
            inc.iter_mut().for_each(|v| *v = 0.0);
            let mut kept = 0;
            if let Some(b) = band.as_mut() {
                kept = b.advance_to(t_next, &mut inc);
                small_jump_count += kept;
                largest_small_jump = b.largest_kept();
            }
            engine.drift(&seg, false, &mut f0);
            match cfg.scheme {
                Scheme::Euler => {
                    for i in 0..dim {
                        x_new[i] = x[i] + h * f0[i];
                    }
                }
                Scheme::Heun => {
                    for i in 0..dim {
                        pred[i] = x[i] + h * f0[i] + inc[i];
                    }
                    seg.advance_to(t_next, &pred);
                    engine.advance_caches(h, &x, &pred, false);
                    engine.drift(&seg, true, &mut f1);
                    seg.pop_to(t);
                    for i in 0..dim {
                        x_new[i] = x[i] + 0.5 * h * (f0[i] + f1[i]);
                    }
                }
            }
            if kept > 0 {
                for i in 0..dim {
                    x_new[i] += inc[i];
                }
            }
            blow_up(t_next, &x_new)?;
            seg.advance_to(t_next, &x_new);
            engine.advance_caches(h, &x, &x_new, true);
            norm_now = ((-r * h).exp() * norm_now).max(piece_weighted_sup(r, -h, &x, 0.0, &x_new));
            core::mem::swap(&mut x, &mut x_new);
            sup_abs = sup_abs.max(norm(&x));
            t = t_next;
            observer(StepInfo { time: t, state: &x, norm: norm_now, jump: false });
            shift_violations += usize::from(!shift_ok(t, norm_now, sup_abs));
            since_fold += 1;
            if since_fold >= 256 {
                seg.fold_tail(FOLD_TOLERANCE, keep_after);
                since_fold = 0;
            }
        }
        if tg == t_next {
            k += 1;
        }
        if tj == t_next {
            let ev = &large[j];
            for (xi, m) in x.iter_mut().zip(&ev.mark) {
                *xi += m;
            }
            blow_up(t, &x)?;
            seg.push_jump(&x);
            norm_now = norm_now.max(norm(&x));
            sup_abs = sup_abs.max(norm(&x));
            observer(StepInfo { time: t, state: &x, norm: norm_now, jump: true });
            shift_violations += usize::from(!shift_ok(t, norm_now, sup_abs));
            jump_log.push(ev.clone());
            j += 1;
        }
    }

    Ok(RunOutcome {
        final_segment: seg,
        final_norm: norm_now,
        sup_abs,
        jump_log,
        largest_small_jump,
        small_jump_count,
        shift_violations,
    })
}

fn record(
    spec: &DriftSpec,
    xi: &HistorySegment,
    t_end: f64,
    cfg: &IntegratorConfig,
    noise: Noise<'_>,
    meta: TrajectoryMeta,
) -> Result<TrajectoryRecord> {
    let dim = spec.dim;
    let cap = step_count(t_end, cfg.dt) + 1;
    let mut times = Vec::with_capacity(cap);
    let mut states = Vec::with_capacity(cap * dim);
    let mut norms = Vec::with_capacity(cap);
    let mut jump_flags = Vec::with_capacity(cap);
    let out = simulate(spec, xi, t_end, cfg, noise, &mut |s| {
        times.push(s.time);
        states.extend_from_slice(s.state);
        norms.push(s.norm);
        jump_flags.push(s.jump);
    })?;
    Ok(TrajectoryRecord { dim, times, states, norms, jump_flags, jump_log: out.jump_log,
        meta,
        final_segment: out.final_segment,
        shift_violations: out.shift_violations,
    })
}

fn meta(system: &str, seed: Option<u64>, cfg: &IntegratorConfig, eps: Option<f64>, delta: Option<f64>, r: f64) -> TrajectoryMeta {
    TrajectoryMeta { seed, dt: cfg.dt, eps, delta, scheme: cfg.scheme, r, system: system.into() }
}

/// `dX = f(X_t) dt`.
pub fn integrate_deterministic(
    spec: &DriftSpec,
    xi: &HistorySegment,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<TrajectoryRecord> {
    record(spec, xi, t_end, cfg, Noise::None, meta("deterministic", None, cfg, None, None, xi.r()))
}

/// `dX^ε = f(X^ε_t) dt + dL^ε` with jumps in `δ < |z| ≤ ε`.
#[allow(clippy::too_many_arguments)]
pub fn integrate_truncated(
    spec: &DriftSpec,
    xi: &HistorySegment,
    levy: &LevyMeasureModel,
    eps: f64,
    delta: f64,
    t_end: f64,
    cfg: &IntegratorConfig,
    seed: u64,
) -> Result<TrajectoryRecord> {
    let noise = Noise::Truncated { levy, eps, delta, seed };
    record(spec, xi, t_end, cfg, noise, meta("truncated", Some(seed), cfg, Some(eps), Some(delta), xi.r()))
}

/// `dx = f(x_t) dt + dL` by interlacing jumps with `|z| > 1`.
pub fn integrate_full(
    spec: &DriftSpec,
    xi: &HistorySegment,
    levy: &LevyMeasureModel,
    delta: f64,
    t_end: f64,
    cfg: &IntegratorConfig,
    seed: u64,
) -> Result<TrajectoryRecord> {
    let noise = Noise::Full { levy, delta, seed };
    record(spec, xi, t_end, cfg, noise, meta("full", Some(seed), cfg, Some(LARGE_JUMP_THRESHOLD), Some(delta), xi.r()))
}

/// Like [`integrate_full`] with the large jumps supplied by the caller.
#[allow(clippy::too_many_arguments)]
pub fn integrate_interlaced(
    spec: &DriftSpec,
    xi: &HistorySegment,
    levy: &LevyMeasureModel,
    delta: f64,
    t_end: f64,
    cfg: &IntegratorConfig,
    seed: u64,
    jumps: &[JumpEvent],
) -> Result<TrajectoryRecord> {
    let noise = Noise::Interlaced { levy, delta, seed, jumps };
    record(spec, xi, t_end, cfg, noise, meta("interlaced", Some(seed), cfg, Some(LARGE_JUMP_THRESHOLD), Some(delta), xi.r()))
}
