//! Scenario files: a TOML document describing one system and the probes to
//! run on it. See the README for the full grammar.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use sdde_core::conditions::DissipativityConstants;
use sdde_core::dynamics::{DriftSpec, IntegratorConfig, Scheme, DEFAULT_BLOW_UP_BOUND, LARGE_JUMP_THRESHOLD};
use sdde_core::levy::{Atom, LevyMeasureModel, RadialLaw};
use sdde_core::maps::{ExampleH, PairFunction, ZeroH};
use sdde_core::memory::{DelayComponent, DelayKind, DelayMeasure, HistorySegment};
use sdde_core::probes::IrreducibilityParams;

use crate::error::ConfigError;

/// Weights of a delay measure must sum to one within this tolerance.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Default inner truncation as a fraction of the outer band edge.
pub const DELTA_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ProbeName {
    Dissipativity,
    Decay,
    FirstJump,
    Convergence,
    Irreducibility,
    Resolvent,
}

impl ProbeName {
    pub const ALL: [ProbeName; 6] = [
        ProbeName::Dissipativity,
        ProbeName::Decay,
        ProbeName::FirstJump,
        ProbeName::Convergence,
        ProbeName::Irreducibility,
        ProbeName::Resolvent,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ProbeName::Dissipativity => "dissipativity",
            ProbeName::Decay => "decay",
            ProbeName::FirstJump => "first_jump",
            ProbeName::Convergence => "convergence",
            ProbeName::Irreducibility => "irreducibility",
            ProbeName::Resolvent => "resolvent",
        }
    }
}

impl fmt::Display for ProbeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A point of `ℝⁿ`; a bare number is shorthand for a one-dimensional point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Point {
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            Point::Scalar(x) => vec![*x],
            Point::Vector(v) => v.clone(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Point::Scalar(_) => 1,
            Point::Vector(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ComponentConfig {
    Atom { weight: f64, theta0: f64 },
    Exponential { weight: f64, rate: f64 },
}

impl ComponentConfig {
    fn to_core(&self) -> DelayComponent {
        match *self {
            ComponentConfig::Atom { weight, theta0 } => DelayComponent { weight, kind: DelayKind::Atom { theta0 } },
            ComponentConfig::Exponential { weight, rate } => {
                DelayComponent { weight, kind: DelayKind::Exponential { rate } }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureRef {
    Mu1,
    Mu2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialDelay {
    /// `coefficients[k]` multiplies `x^k`, applied coordinate-wise.
    pub coefficients: Vec<f64>,
    pub measure: MeasureRef,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftConfig {
    /// `f(φ) = 1 - 2φ(0) - 2φ(0)³ + ∫φ(θ)² dμ₁(θ)`.
    CubicExample,
    Zero {
        #[serde(default = "one")]
        dimension: usize,
    },
    /// `f(φ) = a·φ(0)`.
    Linear {
        #[serde(default = "one")]
        dimension: usize,
        a: f64,
    },
    /// Coordinate-wise polynomial of `φ(0)` plus polynomial delay integrals.
    Polynomial {
        #[serde(default = "one")]
        dimension: usize,
        local: Vec<f64>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        delay: Vec<PolynomialDelay>,
    },
}

impl DriftConfig {
    pub fn dimension(&self) -> usize {
        match self {
            DriftConfig::CubicExample => 1,
            DriftConfig::Zero { dimension } | DriftConfig::Linear { dimension, .. } | DriftConfig::Polynomial { dimension, .. } => {
                *dimension
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub location: Point,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialLawConfig {
    Uniform { low: f64, high: f64 },
    Exponential { scale: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LevyConfig {
    /// No noise at all.
    Zero {
        #[serde(default = "one")]
        dimension: usize,
    },
    /// Finitely many atoms. With `mirror = true` only one half is listed and
    /// every `(z, m)` is completed by `(-z, m)`.
    SymmetricAtoms {
        #[serde(default = "one")]
        dimension: usize,
        #[serde(default)]
        mirror: bool,
        atoms: Vec<AtomConfig>,
    },
    /// One-dimensional density `c|z|^{-1-α}` on `0 < |z| < cutoff`.
    RadialDensity {
        c: f64,
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cutoff: Option<f64>,
    },
    CompoundPoisson {
        #[serde(default = "one")]
        dimension: usize,
        rate: f64,
        radial: RadialLawConfig,
    },
}

impl LevyConfig {
    pub fn dimension(&self) -> usize {
        match self {
            LevyConfig::RadialDensity { .. } => 1,
            LevyConfig::Zero { dimension }
            | LevyConfig::SymmetricAtoms { dimension, .. }
            | LevyConfig::CompoundPoisson { dimension, .. } => *dimension,
        }
    }

    pub fn build(&self) -> sdde_core::Result<LevyMeasureModel> {
        match self {
            LevyConfig::Zero { dimension } => Ok(LevyMeasureModel::zero(*dimension)),
            LevyConfig::SymmetricAtoms { dimension, mirror, atoms } => {
                let atoms = atoms.iter().map(|a| Atom::new(a.location.to_vec(), a.mass)).collect();
                if *mirror {
                    LevyMeasureModel::from_positive_half(*dimension, atoms)
                } else {
                    LevyMeasureModel::symmetric_atoms(*dimension, atoms)
                }
            }
            LevyConfig::RadialDensity { c, alpha, cutoff } => {
                LevyMeasureModel::radial_density(*c, *alpha, cutoff.unwrap_or(f64::INFINITY))
            }
            LevyConfig::CompoundPoisson { dimension, rate, radial } => {
                let radial = match *radial {
                    RadialLawConfig::Uniform { low, high } => RadialLaw::Uniform { low, high },
                    RadialLawConfig::Exponential { scale } => RadialLaw::Exponential { scale },
                };
                LevyMeasureModel::compound_poisson(*dimension, *rate, radial)
            }
        }
    }
}

fn default_theta_min() -> f64 {
    -1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SegmentConfig {
    /// `φ ≡ value` on `[theta_min, 0]`, continued by the matching tail.
    Constant {
        value: Point,
        #[serde(default = "default_theta_min")]
        theta_min: f64,
    },
    /// Linear interpolation through `(thetas[i], values[i])`; `thetas` must
    /// increase to 0. Without `tail` the tail continues the first node.
    Piecewise {
        thetas: Vec<f64>,
        values: Vec<Point>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail: Option<Point>,
    },
    /// `φ(θ) = e^{-rθ}v` everywhere.
    PureTail { v: Point },
}

impl SegmentConfig {
    fn dim(&self) -> usize {
        match self {
            SegmentConfig::Constant { value, .. } => value.dim(),
            SegmentConfig::Piecewise { values, .. } => values.first().map_or(0, Point::dim),
            SegmentConfig::PureTail { v } => v.dim(),
        }
    }

    pub fn build(&self, r: f64) -> sdde_core::Result<HistorySegment> {
        match self {
            SegmentConfig::Constant { value, theta_min } => HistorySegment::constant(r, &value.to_vec(), *theta_min),
            SegmentConfig::Piecewise { thetas, values, tail } => {
                let dim = values.first().map_or(0, Point::dim);
                if values.iter().any(|v| v.dim() != dim) {
                    return Err(sdde_core::Error::InvalidArgument("piecewise values differ in dimension".into()));
                }
                let flat: Vec<f64> = values.iter().flat_map(Point::to_vec).collect();
                match tail {
                    Some(t) => HistorySegment::new(r, thetas.clone(), flat, t.to_vec()),
                    None => HistorySegment::with_matched_tail(r, thetas.clone(), flat),
                }
            }
            SegmentConfig::PureTail { v } => HistorySegment::pure_tail(r, &v.to_vec()),
        }
    }
}

fn default_dt() -> f64 {
    1e-3
}

fn default_blow_up() -> f64 {
    DEFAULT_BLOW_UP_BOUND
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub scheme: Scheme,
    /// Inner truncation; when absent each probe uses 1% of its outer band edge.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default = "default_blow_up")]
    pub blow_up_bound: f64,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self { dt: default_dt(), scheme: Scheme::Euler, delta: None, blow_up_bound: DEFAULT_BLOW_UP_BOUND }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HPreset {
    /// `H(x, y) = (x-y)²(2x²+2xy+2y²)`.
    Example,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    pub lambda1_bar: f64,
    pub lambda2_bar: f64,
    pub k1_bar: f64,
    pub k2_bar: f64,
    pub q1: f64,
    pub q2: f64,
    /// `K` in `H(x, y) ≤ K(|x|^{q1} + |y|^{q2})`.
    pub k_growth: f64,
    pub h: HPreset,
}

impl ConstantsConfig {
    /// The constants that go with the cubic example.
    pub fn cubic_example() -> Self {
        Self { lambda1_bar: 0.0, lambda2_bar: 3.0, k1_bar: 1.0, k2_bar: 2.0, q1: 4.0, q2: 4.0, k_growth: 12.0, h: HPreset::Example }
    }
}

fn default_decay_tol() -> f64 {
    1e-3
}

fn default_sup_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    pub horizons: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_decay_tol")]
    pub decay_tolerance: f64,
    #[serde(default = "default_sup_tol")]
    pub sup_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub eps_ladder: Vec<f64>,
    pub horizon: f64,
    pub q: f64,
    pub p: f64,
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirstJumpConfig {
    pub eps: f64,
    pub samples: usize,
}

fn default_eps_grid() -> Vec<f64> {
    IrreducibilityParams::DEFAULT_EPS_GRID.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrreducibilityConfig {
    pub kappas: Vec<f64>,
    pub horizon: f64,
    pub trials: usize,
    #[serde(default = "default_eps_grid")]
    pub eps_grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Initial segments to probe; the scenario's `[initial]` when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub initial: Vec<SegmentConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventConfig {
    pub kappa: f64,
    pub lambda: f64,
    pub t_max: f64,
    /// Spacing of the observation grid `0, step, 2·step, …, t_max`.
    pub step: f64,
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

impl ResolventConfig {
    pub fn times(&self) -> Vec<f64> {
        let n = (self.t_max / self.step - 1e-9).ceil().max(1.0) as usize;
        let mut times: Vec<f64> = (0..n).map(|k| k as f64 * self.step).collect();
        times.push(self.t_max);
        times
    }
}

fn default_lipschitz_radii() -> Vec<f64> {
    vec![2.0, 4.0]
}

fn default_lipschitz_pairs() -> usize {
    1000
}

fn default_growth_samples() -> usize {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipativityConfig {
    pub pairs: usize,
    pub radius: f64,
    #[serde(default = "default_lipschitz_radii")]
    pub lipschitz_radii: Vec<f64>,
    #[serde(default = "default_lipschitz_pairs")]
    pub lipschitz_pairs: usize,
    #[serde(default = "default_growth_samples")]
    pub growth_samples: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbesConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dissipativity: Option<DissipativityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<DecayConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_jump: Option<FirstJumpConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub irreducibility: Option<IrreducibilityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolvent: Option<ResolventConfig>,
}

impl ProbesConfig {
    pub fn has(&self, p: ProbeName) -> bool {
        match p {
            ProbeName::Dissipativity => self.dissipativity.is_some(),
            ProbeName::Decay => self.decay.is_some(),
            ProbeName::FirstJump => self.first_jump.is_some(),
            ProbeName::Convergence => self.convergence.is_some(),
            ProbeName::Irreducibility => self.irreducibility.is_some(),
            ProbeName::Resolvent => self.resolvent.is_some(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Probes run by default, in this order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub run: Vec<ProbeName>,
    pub drift: DriftConfig,
    pub levy: LevyConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mu1: Vec<ComponentConfig>,
    /// Defaults to `mu1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu2: Option<Vec<ComponentConfig>>,
    pub initial: SegmentConfig,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<ConstantsConfig>,
    #[serde(default)]
    pub probes: ProbesConfig,
}

fn measure_from(components: &[ComponentConfig]) -> sdde_core::Result<DelayMeasure> {
    DelayMeasure::new(components.iter().map(ComponentConfig::to_core).collect())
}

fn require(errs: &mut Vec<String>, ok: bool, msg: String) {
    if !ok {
        errs.push(msg);
    }
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.chars().count(), |i| before[i + 1..].chars().count()) + 1;
    (line, col)
}

impl ScenarioConfig {
    /// Parses and validates a scenario.
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
            ConfigError::Parse { path: origin.to_path_buf(), line, column, message: e.message().trim().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario is representable in TOML")
    }

    pub fn mu1(&self) -> sdde_core::Result<DelayMeasure> {
        measure_from(&self.mu1)
    }

    pub fn mu2(&self) -> sdde_core::Result<DelayMeasure> {
        measure_from(self.mu2.as_deref().unwrap_or(&self.mu1))
    }

    pub fn drift(&self) -> sdde_core::Result<DriftSpec> {
        let measure = |m: MeasureRef| match m {
            MeasureRef::Mu1 => self.mu1(),
            MeasureRef::Mu2 => self.mu2(),
        };
        Ok(match &self.drift {
            DriftConfig::CubicExample => DriftSpec::cubic_example(self.mu1()?),
            DriftConfig::Zero { dimension } => DriftSpec::zero(*dimension),
            DriftConfig::Linear { dimension, a } => DriftSpec::linear(*dimension, *a),
            DriftConfig::Polynomial { dimension, local, delay } => {
                let parts = delay
                    .iter()
                    .map(|d| Ok((d.coefficients.clone(), measure(d.measure)?)))
                    .collect::<sdde_core::Result<Vec<_>>>()?;
                DriftSpec::polynomial(*dimension, local.clone(), parts)
            }
        })
    }

    pub fn levy(&self) -> sdde_core::Result<LevyMeasureModel> {
        self.levy.build()
    }

    pub fn initial(&self) -> sdde_core::Result<HistorySegment> {
        self.initial.build(self.r)
    }

    pub fn integrator(&self, dt: Option<f64>) -> IntegratorConfig {
        IntegratorConfig {
            dt: dt.unwrap_or(self.integrator.dt),
            scheme: self.integrator.scheme,
            blow_up_bound: self.integrator.blow_up_bound,
        }
    }

    /// Inner truncation for a probe whose band ends at `outer`.
    pub fn delta(&self, probe_delta: Option<f64>, outer: f64) -> f64 {
        probe_delta.or(self.integrator.delta).unwrap_or(DELTA_FRACTION * outer)
    }

    /// Explicit constants, or the example's constants for the cubic preset.
    pub fn constants(&self) -> Option<sdde_core::Result<DissipativityConstants>> {
        let c = match (&self.constants, &self.drift) {
            (Some(c), _) => c.clone(),
            (None, DriftConfig::CubicExample) => ConstantsConfig::cubic_example(),
            (None, _) => return None,
        };
        let build = || {
            let h: Arc<dyn PairFunction> = match c.h {
                HPreset::Example => Arc::new(ExampleH),
                HPreset::Zero => Arc::new(ZeroH),
            };
            Ok(DissipativityConstants {
                lambda1_bar: c.lambda1_bar,
                lambda2_bar: c.lambda2_bar,
                k1_bar: c.k1_bar,
                k2_bar: c.k2_bar,
                q1: c.q1,
                q2: c.q2,
                k_growth: c.k_growth,
                h,
                mu1: self.mu1()?,
                mu2: self.mu2()?,
                r: self.r,
            })
        };
        Some(build())
    }

    /// Probes to run: the explicit selection, else `run`, else every configured block.
    pub fn selected_probes(&self, explicit: &[ProbeName]) -> Vec<ProbeName> {
        if !explicit.is_empty() {
            explicit.to_vec()
        } else if !self.run.is_empty() {
            self.run.clone()
        } else {
            ProbeName::ALL.into_iter().filter(|p| self.probes.has(*p)).collect()
        }
    }

    /// Overrides every Monte Carlo sample count.
    pub fn set_trials(&mut self, n: usize) {
        let p = &mut self.probes;
        if let Some(c) = &mut p.convergence {
            c.trials = n;
        }
        if let Some(c) = &mut p.first_jump {
            c.samples = n;
        }
        if let Some(c) = &mut p.irreducibility {
            c.trials = n;
        }
        if let Some(c) = &mut p.resolvent {
            c.trials = n;
        }
        if let Some(c) = &mut p.dissipativity {
            c.pairs = n;
        }
    }

    /// Every cross-field violation, not just the first.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let positive = |x: f64| x > 0.0 && x.is_finite();

        require(&mut errs, positive(self.r), format!("r = {} must be positive", self.r));
        let ig = &self.integrator;
        require(&mut errs, positive(ig.dt), format!("integrator.dt = {} must be positive", ig.dt));
        require(&mut errs, ig.blow_up_bound > 0.0, format!("integrator.blow_up_bound = {} must be positive", ig.blow_up_bound));
        if let Some(d) = ig.delta {
            require(&mut errs, d > 0.0 && d < LARGE_JUMP_THRESHOLD, format!("integrator.delta = {d} must lie in (0, 1)"));
        }

        for (name, comps) in [("mu1", Some(&self.mu1)), ("mu2", self.mu2.as_ref())] {
            let Some(comps) = comps else { continue };
            if comps.is_empty() {
                if name == "mu2" || self.needs_mu1() {
                    errs.push(format!("{name}: measure has no components"));
                }
                continue;
            }
            let total: f64 = comps.iter().map(|c| match c {
                ComponentConfig::Atom { weight, .. } | ComponentConfig::Exponential { weight, .. } => *weight,
            }).sum();
            if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
                errs.push(format!("{name}: measure not normalized (total weight {total})"));
            }
            for (i, c) in comps.iter().enumerate() {
                match *c {
                    ComponentConfig::Atom { weight, theta0 } => {
                        if !(weight > 0.0) {
                            errs.push(format!("{name} component {i}: weight {weight} must be positive"));
                        }
                        if !(theta0 <= 0.0 && theta0.is_finite()) {
                            errs.push(format!("{name} component {i}: atom position {theta0} must be finite and ≤ 0"));
                        }
                    }
                    ComponentConfig::Exponential { weight, rate } => {
                        if !(weight > 0.0) {
                            errs.push(format!("{name} component {i}: weight {weight} must be positive"));
                        }
                        if !positive(rate) {
                            errs.push(format!("{name} component {i}: rate {rate} must be positive"));
                        }
                    }
                }
            }
        }
        if let DriftConfig::Polynomial { delay, .. } = &self.drift {
            if delay.iter().any(|d| d.measure == MeasureRef::Mu1) && self.mu1.is_empty() {
                errs.push("drift refers to mu1, which is not defined".into());
            }
        }

        let dim = self.drift.dimension();
        if dim == 0 {
            errs.push("drift dimension must be positive".into());
        }
        let levy = self.levy();
        match &levy {
            Ok(m) if m.dimension() != dim => {
                errs.push(format!("levy dimension {} differs from drift dimension {dim}", m.dimension()))
            }
            Err(e) => errs.push(format!("levy: {e}")),
            _ => {}
        }
        let mut segment_checks = vec![("initial".to_string(), &self.initial)];
        if let Some(ir) = &self.probes.irreducibility {
            segment_checks.extend(ir.initial.iter().enumerate().map(|(i, s)| (format!("probes.irreducibility.initial[{i}]"), s)));
        }
        for (name, seg) in segment_checks {
            if seg.dim() != dim {
                errs.push(format!("{name}: dimension {} differs from drift dimension {dim}", seg.dim()));
            }
            if positive(self.r) {
                if let Err(e) = seg.build(self.r) {
                    errs.push(format!("{name}: {e}"));
                }
            }
        }
        let measures_ok = errs.iter().all(|e| !e.starts_with("mu"));
        if measures_ok && positive(self.r) {
            match self.drift() {
                Ok(spec) => {
                    if let Err(e) = spec.validate(self.r) {
                        errs.push(format!("drift: {e}"));
                    }
                }
                Err(e) => errs.push(format!("drift: {e}")),
            }
        }
        if let Some(c) = &self.constants {
            for (n, v) in [("lambda1_bar", c.lambda1_bar), ("lambda2_bar", c.lambda2_bar), ("k1_bar", c.k1_bar), ("k2_bar", c.k2_bar)] {
                require(&mut errs, v >= 0.0 && v.is_finite(), format!("constants.{n} = {v} must be nonnegative"));
            }
            for (n, v) in [("q1", c.q1), ("q2", c.q2), ("k_growth", c.k_growth)] {
                require(&mut errs, positive(v), format!("constants.{n} = {v} must be positive"));
            }
        }

        self.validate_probes(levy.ok().as_ref(), &mut errs);
        for p in &self.run {
            if !self.probes.has(*p) {
                errs.push(format!("run lists {p}, which has no [probes.{p}] block"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    fn needs_mu1(&self) -> bool {
        matches!(self.drift, DriftConfig::CubicExample) || self.constants.is_some()
    }

    fn validate_probes(&self, levy: Option<&LevyMeasureModel>, errs: &mut Vec<String>) {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        let p = &self.probes;
        let dt_ok = |dt: Option<f64>| dt.is_none_or(positive);
        if let Some(d) = &p.decay {
            require(errs, !d.horizons.is_empty() && d.horizons.iter().all(|t| positive(*t)), "probes.decay.horizons must be nonempty and positive".into());
            require(errs, dt_ok(d.dt), "probes.decay.dt must be positive".into());
            require(errs, positive(d.decay_tolerance) && positive(d.sup_tolerance), "probes.decay tolerances must be positive".into());
        }
        if let Some(c) = &p.convergence {
            require(errs, !c.eps_ladder.is_empty(), "probes.convergence.eps_ladder is empty".into());
            require(errs, c.eps_ladder.windows(2).all(|w| w[1] < w[0]), "probes.convergence.eps_ladder must be strictly decreasing".into());
            let eps_min = c.eps_ladder.iter().copied().fold(f64::INFINITY, f64::min);
            let eps_max = c.eps_ladder.iter().copied().fold(0.0, f64::max);
            require(errs, eps_max <= 1.0, format!("probes.convergence: ε = {eps_max} exceeds 1"));
            let delta = self.delta(c.delta, eps_min);
            require(errs, delta > 0.0 && delta < eps_min, format!("probes.convergence: need 0 < delta < ε, got delta = {delta}, ε = {eps_min}"));
            require(errs, 0.0 < c.q && c.q < c.p && c.p < 1.0, format!("probes.convergence: need 0 < q < p < 1, got q = {}, p = {}", c.q, c.p));
            require(errs, positive(c.horizon), "probes.convergence.horizon must be positive".into());
            require(errs, c.trials > 0, "probes.convergence.trials must be positive".into());
            require(errs, dt_ok(c.dt), "probes.convergence.dt must be positive".into());
        }
        if let Some(f) = &p.first_jump {
            require(errs, positive(f.eps), "probes.first_jump.eps must be positive".into());
            require(errs, f.samples >= 1000, format!("probes.first_jump.samples = {} is below 1000", f.samples));
            if let Some(m) = levy {
                require(errs, m.mass_above(f.eps) > 0.0, format!("probes.first_jump: no jumps above ε = {}", f.eps));
            }
        }
        if let Some(ir) = &p.irreducibility {
            require(errs, !ir.kappas.is_empty() && ir.kappas.iter().all(|k| positive(*k)), "probes.irreducibility.kappas must be nonempty and positive".into());
            require(errs, positive(ir.horizon), "probes.irreducibility.horizon must be positive".into());
            require(errs, ir.trials >= 1000, format!("probes.irreducibility.trials = {} is below 1000", ir.trials));
            require(errs, dt_ok(ir.dt), "probes.irreducibility.dt must be positive".into());
            let delta = self.delta(ir.delta, LARGE_JUMP_THRESHOLD);
            for &e in &ir.eps_grid {
                require(errs, delta < e && e <= 1.0, format!("probes.irreducibility: need delta < ε ≤ 1, got delta = {delta}, ε = {e}"));
            }
        }
        if let Some(rs) = &p.resolvent {
            require(errs, positive(rs.kappa), "probes.resolvent.kappa must be positive".into());
            require(errs, positive(rs.lambda), "probes.resolvent.lambda must be positive".into());
            require(errs, positive(rs.t_max) && positive(rs.step), "probes.resolvent t_max and step must be positive".into());
            require(errs, rs.trials > 0, "probes.resolvent.trials must be positive".into());
            require(errs, dt_ok(rs.dt), "probes.resolvent.dt must be positive".into());
            let delta = self.delta(rs.delta, LARGE_JUMP_THRESHOLD);
            require(errs, delta > 0.0 && delta < LARGE_JUMP_THRESHOLD, format!("probes.resolvent: delta = {delta} must lie in (0, 1)"));
        }
        if let Some(d) = &p.dissipativity {
            require(errs, d.pairs > 0, "probes.dissipativity.pairs must be positive".into());
            require(errs, positive(d.radius), "probes.dissipativity.radius must be positive".into());
            require(errs, d.lipschitz_radii.iter().all(|k| positive(*k)), "probes.dissipativity.lipschitz_radii must be positive".into());
            require(errs, self.constants.is_some() || matches!(self.drift, DriftConfig::CubicExample), "probes.dissipativity needs a [constants] block".into());
        }
    }
}

/// Reads, parses and validates a scenario file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    ScenarioConfig::from_toml(&text, path)
}
