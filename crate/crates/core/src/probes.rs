//! Monte Carlo experiments producing structured reports.
//!
//! Trials are mapped through a [`TrialExecutor`] and reduced serially in
//! trial order, so serial and parallel executors give bitwise-identical
//! reports. Every trial derives its own seed from `(seed, module, trial)`;
//! ladders over `ε` or `κ` reuse the same trial seed (common random numbers).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::conditions::{
    check_h_growth, check_proposition_conditions, irreducibility_lower_bound, irreducibility_lower_bound_with,
    sample_dissipativity, sample_local_lipschitz, DissipativityConstants,
};
use crate::dynamics::{simulate, DriftSpec, IntegratorConfig, Noise, StepInfo};
use crate::levy::LevyMeasureModel;
use crate::memory::{piece_weighted_sup, HistorySegment};
use crate::rng::{derive_seed, module, stream_rng, LARGE_JUMP_STREAM};
use crate::sampler::SegmentSampler;
use crate::stats::{ks_p_value, ks_statistic, wilson_interval, MeanEstimate, Z95};
use crate::{Error, Result};

/// Whether a failing verdict makes the run fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum VerdictKind {
    Required,
    /// Reported for interpretation only.
    Observed,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub kind: VerdictKind,
    /// The comparison that was made, with the numbers involved.
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EstimateEntry {
    pub name: String,
    pub value: f64,
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TheoreticalEntry {
    pub name: String,
    pub value: f64,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(untagged))]
pub enum ParamValue {
    Integer(u64),
    Number(f64),
    Text(String),
    List(Vec<f64>),
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        Self::Number(v)
    }
}

impl From<usize> for ParamValue {
    fn from(v: usize) -> Self {
        Self::Integer(v as u64)
    }
}

impl From<u64> for ParamValue {
    fn from(v: u64) -> Self {
        Self::Integer(v)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        Self::Text(v.into())
    }
}

impl From<Vec<f64>> for ParamValue {
    fn from(v: Vec<f64>) -> Self {
        Self::List(v)
    }
}

/// Long-format per-trial observables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrialTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl TrialTable {
    fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ProbeReport {
    pub probe: String,
    pub parameters: BTreeMap<String, ParamValue>,
    pub estimates: Vec<EstimateEntry>,
    pub theoretical: Vec<TheoreticalEntry>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
    pub trial_count: usize,
    pub seed: Option<u64>,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub trials: TrialTable,
}

impl ProbeReport {
    pub fn new(probe: &str, seed: Option<u64>, trial_count: usize) -> Self {
        Self {
            probe: probe.into(),
            parameters: BTreeMap::new(),
            estimates: Vec::new(),
            theoretical: Vec::new(),
            verdicts: Vec::new(),
            notes: Vec::new(),
            trial_count,
            seed,
            trials: TrialTable::default(),
        }
    }

    pub fn param(&mut self, name: &str, value: impl Into<ParamValue>) {
        self.parameters.insert(name.into(), value.into());
    }

    pub fn estimate(&mut self, name: impl Into<String>, value: f64, std_error: Option<f64>) {
        self.estimates.push(EstimateEntry { name: name.into(), value, std_error });
    }

    pub fn theory(&mut self, name: impl Into<String>, value: f64, provenance: &str) {
        self.theoretical.push(TheoreticalEntry { name: name.into(), value, provenance: provenance.into() });
    }

    pub fn verdict(&mut self, name: impl Into<String>, pass: bool, kind: VerdictKind, detail: String) {
        self.verdicts.push(Verdict { name: name.into(), pass, kind, detail });
    }

    /// All required verdicts hold.
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass || v.kind == VerdictKind::Observed)
    }

    pub fn estimate_value(&self, name: &str) -> Option<f64> {
        self.estimates.iter().find(|e| e.name == name).map(|e| e.value)
    }

    pub fn theory_value(&self, name: &str) -> Option<f64> {
        self.theoretical.iter().find(|e| e.name == name).map(|e| e.value)
    }

    pub fn verdict_named(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }
}

/// Runs independent trials and returns their results in trial order.
pub trait TrialExecutor {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl TrialExecutor for Serial {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

fn collect<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

/// Tracks `‖X_t - Y_t‖_r` against a stored baseline sharing the time grid
/// and the initial segment, so the difference vanishes before time 0.
struct DifferenceTracker<'a> {
    baseline: &'a [f64],
    dim: usize,
    r: f64,
    row: usize,
    prev_t: f64,
    prev: Vec<f64>,
    cur: Vec<f64>,
    norm: f64,
}

impl<'a> DifferenceTracker<'a> {
    fn new(baseline: &'a [f64], dim: usize, r: f64) -> Self {
        Self { baseline, dim, r, row: 0, prev_t: 0.0, prev: vec![0.0; dim], cur: vec![0.0; dim], norm: 0.0 }
    }

    fn observe(&mut self, s: StepInfo<'_>) {
        let b = &self.baseline[self.row * self.dim..(self.row + 1) * self.dim];
        for ((c, x), b) in self.cur.iter_mut().zip(s.state).zip(b) {
            *c = x - b;
        }
        if self.row == 0 {
            self.norm = crate::levy::norm(&self.cur);
        } else {
            let h = s.time - self.prev_t;
            self.norm = ((-self.r * h).exp() * self.norm).max(piece_weighted_sup(self.r, -h, &self.prev, 0.0, &self.cur));
        }
        core::mem::swap(&mut self.prev, &mut self.cur);
        self.prev_t = s.time;
        self.row += 1;
    }
}

fn deterministic_states(spec: &DriftSpec, xi: &HistorySegment, t_end: f64, cfg: &IntegratorConfig) -> Result<(Vec<f64>, f64)> {
    let mut states = Vec::new();
    let out = simulate(spec, xi, t_end, cfg, Noise::None, &mut |s| states.extend_from_slice(s.state))?;
    Ok((states, out.final_norm))
}

/// `e^{-2qrT}·(p/(p-q))·(m₂(ε)(e^{2rT}-1)/(2r))^q`.
pub fn gronwall_bound(levy: &LevyMeasureModel, eps: f64, r: f64, t: f64, q: f64, p: f64) -> f64 {
    let m2 = levy.small_jump_second_moment(eps);
    (-2.0 * q * r * t).exp() * (p / (p - q)) * (m2 * ((2.0 * r * t).exp() - 1.0) / (2.0 * r)).powf(q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayParams {
    pub horizons: Vec<f64>,
    /// Norm below which the decay verdict holds at the largest horizon.
    pub decay_tolerance: f64,
    /// Allowed change of the running sup between the two largest horizons.
    pub sup_tolerance: f64,
}

impl Default for DecayParams {
    fn default() -> Self {
        Self { horizons: vec![10.0, 50.0, 100.0], decay_tolerance: 1e-3, sup_tolerance: 1e-6 }
    }
}

/// Deterministic runs to each horizon: decay of `‖X_T‖_r` and stability of
/// `sup_t |X(t)|`.
pub fn decay_probe(spec: &DriftSpec, xi: &HistorySegment, params: &DecayParams, cfg: &IntegratorConfig) -> Result<ProbeReport> {
    let mut horizons = params.horizons.clone();
    if horizons.is_empty() || horizons.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidArgument("decay probe needs positive horizons".into()));
    }
    horizons.sort_by(f64::total_cmp);
    let mut rep = ProbeReport::new("decay", None, horizons.len());
    rep.param("horizons", horizons.clone());
    rep.param("dt", cfg.dt);
    rep.param("decay_tolerance", params.decay_tolerance);
    rep.param("sup_tolerance", params.sup_tolerance);
    rep.trials = TrialTable::new(&["horizon", "final_norm", "sup_abs", "final_state_norm"]);
    let mut sups = Vec::new();
    let mut norms = Vec::new();
    let mut shift_violations = 0;
    for &t in &horizons {
        let mut last = Vec::new();
        let out = simulate(spec, xi, t, cfg, Noise::None, &mut |s| {
            last.clear();
            last.extend_from_slice(s.state);
        })?;
        shift_violations += out.shift_violations;
        rep.estimate(format!("norm_T{t}"), out.final_norm, None);
        rep.estimate(format!("sup_abs_T{t}"), out.sup_abs, None);
        rep.trials.rows.push(vec![t, out.final_norm, out.sup_abs, crate::levy::norm(&last)]);
        sups.push(out.sup_abs);
        norms.push(out.final_norm);
    }
    let last_norm = *norms.last().unwrap();
    rep.verdict(
        "decay_to_zero",
        last_norm < params.decay_tolerance,
        VerdictKind::Observed,
        format!("‖X_T‖_r = {last_norm:e} at T = {} vs tolerance {:e}", horizons.last().unwrap(), params.decay_tolerance),
    );
    let change = if sups.len() >= 2 { (sups[sups.len() - 1] - sups[sups.len() - 2]).abs() } else { 0.0 };
    rep.estimate("sup_change_last_two_horizons", change, None);
    rep.verdict(
        "bounded",
        change < params.sup_tolerance,
        VerdictKind::Required,
        format!("|Δ sup_t |X(t)|| = {change:e} between the two largest horizons vs {:e}", params.sup_tolerance),
    );
    rep.verdict(
        "shift_inequality",
        shift_violations == 0,
        VerdictKind::Required,
        format!("{shift_violations} rows with ‖X_t‖_r > max(sup_(s≤t) |X(s)|, e^(-rt)‖ξ‖_r) + 1e-9"),
    );
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceParams {
    pub eps_ladder: Vec<f64>,
    pub delta: f64,
    pub horizon: f64,
    pub q: f64,
    pub p: f64,
    pub trials: usize,
}

/// `E‖X^ε_T - X_T‖_r^{2q}` along an `ε` ladder against the stochastic
/// Gronwall bound.
pub fn convergence_probe<E: TrialExecutor>(
    spec: &DriftSpec,
    xi: &HistorySegment,
    levy: &LevyMeasureModel,
    params: &ConvergenceParams,
    cfg: &IntegratorConfig,
    seed: u64,
    exec: &E,
) -> Result<ProbeReport> {
    let ConvergenceParams { eps_ladder, delta, horizon, q, p, trials } = params;
    let (q, p, t_end, delta, n) = (*q, *p, *horizon, *delta, *trials);
    if !(0.0 < q && q < p && p < 1.0) {
        return Err(Error::InvalidArgument(format!("need 0 < q < p < 1, got q = {q}, p = {p}")));
    }
    if eps_ladder.is_empty() || eps_ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("eps ladder must be nonempty and strictly decreasing".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("convergence probe needs at least one trial".into()));
    }
    let r = xi.r();
    let dim = spec.dim();
    let (baseline, _) = deterministic_states(spec, xi, t_end, cfg)?;
    let results = collect(exec.map(n, |i| {
        let s = derive_seed(seed, module::CONVERGENCE, i as u64);
        let mut out = Vec::with_capacity(eps_ladder.len());
        for &eps in eps_ladder {
            let mut tracker = DifferenceTracker::new(&baseline, dim, r);
            simulate(spec, xi, t_end, cfg, Noise::Truncated { levy, eps, delta, seed: s }, &mut |st| tracker.observe(st))?;
            out.push(tracker.norm);
        }
        Ok(out)
    }))?;

    let mut rep = ProbeReport::new("convergence", Some(seed), n);
    rep.param("eps_ladder", eps_ladder.clone());
    rep.param("delta", delta);
    rep.param("horizon", t_end);
    rep.param("q", q);
    rep.param("p", p);
    rep.param("r", r);
    rep.param("dt", cfg.dt);
    if n < 100 {
        rep.notes.push(format!("only {n} trials; standard errors are unreliable below 100"));
    }
    rep.trials = TrialTable::new(&["trial", "eps", "diff_norm"]);
    for (i, row) in results.iter().enumerate() {
        for (e, d) in eps_ladder.iter().zip(row) {
            rep.trials.rows.push(vec![i as f64, *e, *d]);
        }
    }
    let mut means = Vec::new();
    let mut bounds = Vec::new();
    for (k, &eps) in eps_ladder.iter().enumerate() {
        let samples: Vec<f64> = results.iter().map(|row| row[k].powf(2.0 * q)).collect();
        let est = MeanEstimate::from_samples(&samples);
        let bound = gronwall_bound(levy, eps, r, t_end, q, p);
        let se = if est.std_error.is_finite() { est.std_error } else { 0.0 };
        let rel = if est.mean > 0.0 { se / est.mean } else { 0.0 };
        rep.estimate(format!("moment_eps{eps}"), est.mean, Some(se));
        rep.theory(format!("bound_eps{eps}"), bound, "stochastic Gronwall bound with the full small-jump second moment");
        rep.verdict(
            format!("below_bound_eps{eps}"),
            est.mean <= bound * (1.0 + 3.0 * rel),
            VerdictKind::Required,
            format!("estimate {:e} ≤ bound {bound:e}·(1 + 3·{rel:.3e})", est.mean),
        );
        means.push(est.mean);
        bounds.push(bound);
    }
    let monotone = means.windows(2).all(|w| w[1] <= w[0]);
    rep.verdict(
        "estimates_nonincreasing_along_ladder",
        monotone,
        VerdictKind::Required,
        format!("estimates {means:?} along decreasing ε"),
    );
    let bound_monotone = bounds.windows(2).all(|w| w[1] <= w[0]);
    rep.verdict(
        "bound_monotone_in_eps",
        bound_monotone,
        VerdictKind::Required,
        format!("bounds {bounds:?} along decreasing ε"),
    );
    Ok(rep)
}

/// Kolmogorov–Smirnov test of first large-jump times against
/// `Exp(ν(|z| > ε))`.
pub fn first_jump_probe(levy: &LevyMeasureModel, eps: f64, n: usize, seed: u64) -> Result<ProbeReport> {
    let rate = levy.mass_above(eps);
    if !(rate > 0.0) {
        return Err(Error::InvalidArgument(format!("ν(|z| > {eps}) = 0: the first large jump never happens")));
    }
    if n < 1000 {
        return Err(Error::InvalidArgument(format!("first-jump probe needs at least 1000 samples, got {n}")));
    }
    let mut rng = stream_rng(derive_seed(seed, module::FIRST_JUMP, 0), LARGE_JUMP_STREAM);
    let samples: Vec<f64> =
        (0..n).map(|_| levy.first_large_jump_time(eps, &mut rng).expect("positive rate")).collect();
    let positive = samples.iter().all(|t| *t > 0.0 && t.is_finite());
    let d = ks_statistic(&samples, |t| if t <= 0.0 { 0.0 } else { 1.0 - (-rate * t).exp() });
    let pv = ks_p_value(d, n);
    let scaled = MeanEstimate::from_samples(&samples.iter().map(|t| t * rate).collect::<Vec<_>>());

    let mut rep = ProbeReport::new("first_jump", Some(seed), n);
    rep.param("eps", eps);
    rep.param("samples", n);
    rep.theory("rate", rate, "tail mass ν(|z| > ε)");
    rep.theory("mean", 1.0 / rate, "exponential law with rate ν(|z| > ε)");
    rep.estimate("ks_statistic", d, None);
    rep.estimate("ks_p_value", pv, None);
    rep.estimate("scaled_mean", scaled.mean, Some(scaled.std_error));
    rep.verdict("ks_p_value_above_0.01", pv > 0.01, VerdictKind::Required, format!("p = {pv:.4} vs 0.01 (D = {d:.5})"));
    rep.verdict("samples_positive_finite", positive, VerdictKind::Required, "all samples in (0, ∞)".into());
    let tol = 3.0 / (n as f64).sqrt();
    rep.verdict(
        "scaled_mean_near_one",
        (scaled.mean - 1.0).abs() <= tol,
        VerdictKind::Observed,
        format!("|{:.5} - 1| ≤ 3/√n = {tol:.5}", scaled.mean),
    );
    rep.trials = TrialTable::new(&["sample", "tau"]);
    rep.trials.rows = samples.iter().enumerate().map(|(i, t)| vec![i as f64, *t]).collect();
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrreducibilityParams {
    pub kappas: Vec<f64>,
    pub horizon: f64,
    pub delta: f64,
    pub trials: usize,
    /// Truncation levels searched for the proof-side bound.
    pub eps_grid: Vec<f64>,
}

impl IrreducibilityParams {
    pub const DEFAULT_EPS_GRID: [f64; 4] = [1.0, 0.5, 0.25, 0.1];
}

struct IrreducibilityTrial {
    final_norm: f64,
    diffs: Vec<f64>,
}

/// `P(‖x_T‖_r ≤ κ)` under the full dynamics for each initial segment and
/// `κ`, with Wilson intervals and the explicit lower bound from the
/// truncated comparison.
pub fn irreducibility_probe<E: TrialExecutor>(
    spec: &DriftSpec,
    xis: &[HistorySegment],
    levy: &LevyMeasureModel,
    params: &IrreducibilityParams,
    cfg: &IntegratorConfig,
    seed: u64,
    exec: &E,
) -> Result<ProbeReport> {
    let IrreducibilityParams { kappas, horizon, delta, trials, eps_grid } = params;
    let (t_end, delta, n) = (*horizon, *delta, *trials);
    if n < 1000 {
        return Err(Error::InvalidArgument(format!("irreducibility probe needs at least 1000 trials, got {n}")));
    }
    if xis.is_empty() || kappas.is_empty() {
        return Err(Error::InvalidArgument("need at least one initial segment and one κ".into()));
    }
    let mut rep = ProbeReport::new("irreducibility", Some(seed), n);
    rep.param("kappas", kappas.clone());
    rep.param("horizon", t_end);
    rep.param("delta", delta);
    rep.param("eps_grid", eps_grid.clone());
    rep.param("dt", cfg.dt);
    rep.param("initial_segments", xis.len());
    let mut cols = vec!["xi", "trial", "final_norm"];
    let eps_names: Vec<String> = eps_grid.iter().map(|e| format!("diff_norm_eps{e}")).collect();
    cols.extend(eps_names.iter().map(|s| s.as_str()));
    rep.trials = TrialTable::new(&cols);

    let mut sorted_kappas = kappas.clone();
    sorted_kappas.sort_by(f64::total_cmp);

    for (a, xi) in xis.iter().enumerate() {
        let r = xi.r();
        let (baseline, det_norm) = deterministic_states(spec, xi, t_end, cfg)?;
        let results = collect(exec.map(n, |i| {
            let s = derive_seed(seed, module::IRREDUCIBILITY, i as u64);
            let full = simulate(spec, xi, t_end, cfg, Noise::Full { levy, delta, seed: s }, &mut |_| {})?;
            let mut diffs = Vec::with_capacity(eps_grid.len());
            for &eps in eps_grid {
                let mut tracker = DifferenceTracker::new(&baseline, spec.dim(), r);
                simulate(spec, xi, t_end, cfg, Noise::Truncated { levy, eps, delta, seed: s }, &mut |st| tracker.observe(st))?;
                diffs.push(tracker.norm);
            }
            Ok(IrreducibilityTrial { final_norm: full.final_norm, diffs })
        }))?;
        for (i, tr) in results.iter().enumerate() {
            let mut row = vec![a as f64, i as f64, tr.final_norm];
            row.extend_from_slice(&tr.diffs);
            rep.trials.rows.push(row);
        }
        rep.theory(format!("xi{a}_deterministic_norm_T"), det_norm, "deterministic limit ‖X_T‖_r on the same grid");

        let mut previous: Option<(f64, usize)> = None;
        let mut monotone = true;
        for &kappa in &sorted_kappas {
            let hits = results.iter().filter(|t| t.final_norm <= kappa).count();
            if let Some((_, prev_hits)) = previous {
                monotone &= prev_hits <= hits;
            }
            previous = Some((kappa, hits));
            let p_hat = hits as f64 / n as f64;
            let (lo, hi) = wilson_interval(hits, n);
            let tag = format!("xi{a}_kappa{kappa}");
            rep.estimate(format!("{tag}_p_hat"), p_hat, Some((p_hat * (1.0 - p_hat) / n as f64).sqrt()));
            rep.estimate(format!("{tag}_wilson_low"), lo, None);
            rep.estimate(format!("{tag}_wilson_high"), hi, None);

            let mut best = (f64::NEG_INFINITY, f64::NAN, f64::NAN);
            for (k, &eps) in eps_grid.iter().enumerate() {
                let close = results.iter().filter(|t| t.diffs[k] <= kappa / 4.0).count() as f64 / n as f64;
                let bound = irreducibility_lower_bound_with(close, levy, eps, t_end);
                if bound > best.0 {
                    best = (bound, eps, close);
                }
            }
            rep.theory(format!("{tag}_measured_bound"), best.0, "P(‖X^ε_T - X_T‖_r ≤ κ/4)·e^(-ν(|z|>ε)T), best ε on the grid");
            rep.theory(format!("{tag}_measured_bound_eps"), best.1, "ε attaining the measured bound");
            rep.theory(
                format!("{tag}_half_bound"),
                irreducibility_lower_bound(levy, best.1, t_end),
                "½·e^(-ν(|z|>ε)T) at the same ε",
            );
            let below_equilibrium = kappa < det_norm;
            if below_equilibrium {
                rep.notes.push(format!(
                    "ξ{a}: κ = {kappa} lies below the deterministic norm {det_norm:.6}; the positivity verdict is reported, not required"
                ));
            }
            rep.verdict(
                format!("{tag}_positive"),
                lo > 0.0,
                if below_equilibrium { VerdictKind::Observed } else { VerdictKind::Required },
                format!("Wilson lower limit {lo:e} > 0 ({hits}/{n} hits)"),
            );
        }
        rep.verdict(
            format!("xi{a}_monotone_in_kappa"),
            monotone,
            VerdictKind::Required,
            "hit counts nondecreasing in κ on shared trajectories".into(),
        );
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventParams {
    pub kappa: f64,
    pub lambda: f64,
    /// Increasing observation times starting at 0.
    pub times: Vec<f64>,
    pub delta: f64,
    pub trials: usize,
}

/// Trapezoid estimate of `λ∫₀^∞ e^{-λt} P(‖x_t‖_r ≤ κ) dt` on shared
/// trajectories, truncated at the last observation time.
pub fn resolvent_estimate<E: TrialExecutor>(
    spec: &DriftSpec,
    xi: &HistorySegment,
    levy: &LevyMeasureModel,
    params: &ResolventParams,
    cfg: &IntegratorConfig,
    seed: u64,
    exec: &E,
) -> Result<ProbeReport> {
    let ResolventParams { kappa, lambda, times, delta, trials } = params;
    let (kappa, lambda, delta, n) = (*kappa, *lambda, *delta, *trials);
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("λ = {lambda} must be positive")));
    }
    if times.len() < 2 || times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("observation times must start at 0 and increase".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("resolvent estimate needs at least one trial".into()));
    }
    let t_max = *times.last().unwrap();
    let weights: Vec<f64> = {
        let mut w = vec![0.0; times.len()];
        for k in 0..times.len() - 1 {
            let h = times[k + 1] - times[k];
            w[k] += 0.5 * h * lambda * (-lambda * times[k]).exp();
            w[k + 1] += 0.5 * h * lambda * (-lambda * times[k + 1]).exp();
        }
        w
    };
    let per_trial = collect(exec.map(n, |i| {
        let s = derive_seed(seed, module::RESOLVENT, i as u64);
        let mut norms = vec![f64::NAN; times.len()];
        let mut next = 0;
        let mut pending: Option<f64> = None;
        let slack = |t: f64| 1e-9 * t.max(1.0);
        simulate(spec, xi, t_max, cfg, Noise::Full { levy, delta, seed: s }, &mut |st| {
            // the norm at an observation time is the last row at or before it
            while next < times.len() && times[next] + slack(times[next]) < st.time {
                norms[next] = pending.expect("first row is at t = 0");
                next += 1;
            }
            pending = Some(st.norm);
        })?;
        while next < times.len() {
            norms[next] = pending.unwrap();
            next += 1;
        }
        let hits: Vec<bool> = norms.iter().map(|v| *v <= kappa).collect();
        let y: f64 = hits.iter().zip(&weights).map(|(h, w)| if *h { *w } else { 0.0 }).sum();
        Ok((hits, y))
    }))?;

    let ys: Vec<f64> = per_trial.iter().map(|(_, y)| *y).collect();
    let est = MeanEstimate::from_samples(&ys);
    let se = if est.std_error.is_finite() { est.std_error } else { 0.0 };
    let mut rep = ProbeReport::new("resolvent", Some(seed), n);
    rep.param("kappa", kappa);
    rep.param("lambda", lambda);
    rep.param("times", times.clone());
    rep.param("delta", delta);
    rep.param("dt", cfg.dt);
    rep.estimate("resolvent", est.mean, Some(se));
    let lower = est.mean - Z95 * se;
    rep.estimate("resolvent_ci_low", lower, None);
    rep.estimate("resolvent_ci_high", est.mean + Z95 * se, None);
    rep.theory("truncation_error_bound", (-lambda * t_max).exp(), "mass of λe^(-λt) beyond the last observation time");
    for (k, t) in times.iter().enumerate() {
        let p = per_trial.iter().filter(|(h, _)| h[k]).count() as f64 / n as f64;
        rep.estimate(format!("p_hat_t{t}"), p, None);
    }
    rep.verdict("positive", lower > 0.0, VerdictKind::Required, format!("95% lower limit {lower:e} > 0"));
    rep.trials = TrialTable::new(&["trial", "weighted_hits"]);
    rep.trials.rows = ys.iter().enumerate().map(|(i, y)| vec![i as f64, *y]).collect();
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DissipativityParams {
    pub pairs: usize,
    pub radius: f64,
    pub lipschitz_radii: Vec<f64>,
    pub lipschitz_pairs: usize,
    pub growth_samples: usize,
}

/// Randomized checks of the dissipativity inequality, the growth bound on
/// `H`, and local Lipschitz estimates, together with the moment conditions.
pub fn dissipativity_probe(
    spec: &DriftSpec,
    c: &DissipativityConstants,
    params: &DissipativityParams,
    seed: u64,
) -> Result<ProbeReport> {
    let mut rep = ProbeReport::new("dissipativity", Some(seed), params.pairs);
    rep.param("pairs", params.pairs);
    rep.param("radius", params.radius);
    rep.param("lipschitz_radii", params.lipschitz_radii.clone());
    rep.param("lipschitz_pairs", params.lipschitz_pairs);

    let cond = check_proposition_conditions(c);
    rep.estimate("slack1", cond.slack1, None);
    rep.estimate("slack2", cond.slack2, None);
    rep.verdict("moment_conditions", cond.pass, VerdictKind::Required, cond.failures.join("; "));

    let sampler = SegmentSampler::new(c.r, spec.dim(), params.radius);
    let v = sample_dissipativity(spec, c, &sampler, params.pairs, seed)?;
    rep.estimate("violations", v.violations as f64, None);
    rep.estimate("worst_excess", v.worst_excess, None);
    rep.verdict(
        "no_violations",
        v.violations == 0,
        VerdictKind::Required,
        format!("{} of {} pairs exceed the tolerance {:e}·max(1, scale)", v.violations, v.trials, v.tolerance),
    );
    if let Some((phi, psi)) = &v.witness {
        rep.notes.push(format!("worst violating pair: φ(0) = {:?}, ψ(0) = {:?}", phi.head(), psi.head()));
    }

    let g = check_h_growth(c, spec.dim(), params.radius, params.growth_samples, seed);
    rep.verdict(
        "h_vanishes_on_diagonal",
        g.max_diagonal <= 1e-12,
        VerdictKind::Required,
        format!("max |H(x,x)| = {:e}", g.max_diagonal),
    );
    rep.verdict(
        "h_growth_bound",
        g.bound_violations == 0 && g.asymmetric == 0,
        VerdictKind::Required,
        format!("{} bound violations, {} asymmetric pairs in {} samples", g.bound_violations, g.asymmetric, g.samples),
    );

    let mut prev = 0.0;
    let mut monotone = true;
    let mut radii = params.lipschitz_radii.clone();
    radii.sort_by(f64::total_cmp);
    rep.trials = TrialTable::new(&["radius", "lipschitz_estimate", "pairs_used", "pairs_skipped"]);
    for k in radii {
        let e = sample_local_lipschitz(spec, c.r, k, params.lipschitz_pairs, seed)?;
        rep.estimate(format!("lipschitz_k{k}"), e.estimate, None);
        rep.trials.rows.push(vec![k, e.estimate, e.pairs_used as f64, e.skipped as f64]);
        monotone &= e.estimate >= prev;
        prev = e.estimate;
    }
    rep.verdict("lipschitz_nondecreasing_in_k", monotone, VerdictKind::Observed, "estimates over nested balls".into());
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::Atom;
    use crate::memory::DelayMeasure;

    #[test]
    fn decay_for_linear_and_zero_drift() {
        let xi = HistorySegment::constant(0.5, &[1.0], -1.0).unwrap();
        let params = DecayParams { horizons: vec![10.0, 20.0], ..DecayParams::default() };
        let rep = decay_probe(&DriftSpec::linear(1, -1.0), &xi, &params, &IntegratorConfig::with_dt(1e-3)).unwrap();
        assert!(rep.verdict_named("decay_to_zero").unwrap().pass);
        assert!(rep.passed());
        let rep = decay_probe(&DriftSpec::zero(1), &xi, &params, &IntegratorConfig::with_dt(1e-2)).unwrap();
        assert!(!rep.verdict_named("decay_to_zero").unwrap().pass);
        assert!(rep.verdict_named("bounded").unwrap().pass);
        assert_eq!(rep.estimate_value("norm_T20"), Some(1.0));
        assert!(rep.passed());
    }

    #[test]
    fn convergence_with_empty_band_is_exactly_zero() {
        let levy = LevyMeasureModel::from_positive_half(1, vec![Atom::scalar(0.8, 1.0)]).unwrap();
        let spec = DriftSpec::cubic_example(DelayMeasure::atom(-0.3).unwrap());
        let xi = HistorySegment::constant(1.0, &[0.5], -1.0).unwrap();
        let params = ConvergenceParams { eps_ladder: vec![0.5], delta: 0.005, horizon: 1.0, q: 0.25, p: 0.5, trials: 20 };
        let rep = convergence_probe(&spec, &xi, &levy, &params, &IntegratorConfig::with_dt(0.01), 1, &Serial).unwrap();
        assert_eq!(rep.estimate_value("moment_eps0.5"), Some(0.0));
        assert!(rep.passed());
        assert!(!rep.notes.is_empty());
    }

    #[test]
    fn first_jump_rejects_zero_rate() {
        let levy = LevyMeasureModel::from_positive_half(1, vec![Atom::scalar(0.2, 1.0)]).unwrap();
        assert!(first_jump_probe(&levy, 0.5, 5000, 1).is_err());
    }

    #[test]
    fn resolvent_extremes() {
        let levy = LevyMeasureModel::zero(1);
        let xi = HistorySegment::constant(1.0, &[0.5], -1.0).unwrap();
        let times: Vec<f64> = (0..=200).map(|k| k as f64 * 0.1).collect();
        let spec = DriftSpec::zero(1);
        let cfg = IntegratorConfig::with_dt(0.1);
        let all = ResolventParams { kappa: 10.0, lambda: 1.0, times: times.clone(), delta: 0.01, trials: 4 };
        let rep = resolvent_estimate(&spec, &xi, &levy, &all, &cfg, 3, &Serial).unwrap();
        let v = rep.estimate_value("resolvent").unwrap();
        let exact = 1.0 - (-20.0f64).exp();
        assert!((v - exact).abs() < 1e-3, "{v}");
        let none = ResolventParams { kappa: 1e-9, ..all };
        let rep = resolvent_estimate(&spec, &xi, &levy, &none, &cfg, 3, &Serial).unwrap();
        assert_eq!(rep.estimate_value("resolvent"), Some(0.0));
        assert!(!rep.passed());
    }
}
