//! Turns a scenario into probe reports.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sdde_core::conditions::check_proposition_conditions;
use sdde_core::dynamics::LARGE_JUMP_THRESHOLD;
use sdde_core::probes::{
    convergence_probe, decay_probe, dissipativity_probe, first_jump_probe, irreducibility_probe, resolvent_estimate,
    ConvergenceParams, DecayParams, DissipativityParams, IrreducibilityParams, ProbeReport, ResolventParams, Serial,
    TrialExecutor,
};

use crate::config::{ProbeName, ScenarioConfig};
use crate::error::RunError;
use crate::output::write_report;

/// Runs trials on the rayon thread pool; results keep trial order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Parallel;

impl TrialExecutor for Parallel {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).into_par_iter().map(f).collect()
    }
}

/// Runs one probe of the scenario.
pub fn run_probe<E: TrialExecutor>(cfg: &ScenarioConfig, probe: ProbeName, exec: &E) -> Result<ProbeReport, RunError> {
    let scenario = RunError::Scenario;
    let wrap = |source| RunError::Probe { probe, source };
    let missing = || RunError::NotConfigured { probe };
    let spec = cfg.drift().map_err(scenario)?;
    let levy = cfg.levy().map_err(scenario)?;
    let xi = cfg.initial().map_err(scenario)?;
    let p = &cfg.probes;
    let seed = cfg.seed;
    match probe {
        ProbeName::Decay => {
            let d = p.decay.as_ref().ok_or_else(missing)?;
            let params = DecayParams { horizons: d.horizons.clone(), decay_tolerance: d.decay_tolerance, sup_tolerance: d.sup_tolerance };
            let mut rep = decay_probe(&spec, &xi, &params, &cfg.integrator(d.dt)).map_err(wrap)?;
            if let Some(c) = cfg.constants() {
                let cond = check_proposition_conditions(&c.map_err(scenario)?);
                if !cond.pass {
                    rep.notes.push(format!("sufficient conditions fail: {}", cond.failures.join("; ")));
                }
            }
            Ok(rep)
        }
        ProbeName::Convergence => {
            let c = p.convergence.as_ref().ok_or_else(missing)?;
            let eps_min = c.eps_ladder.iter().copied().fold(f64::INFINITY, f64::min);
            let params = ConvergenceParams {
                eps_ladder: c.eps_ladder.clone(),
                delta: cfg.delta(c.delta, eps_min),
                horizon: c.horizon,
                q: c.q,
                p: c.p,
                trials: c.trials,
            };
            convergence_probe(&spec, &xi, &levy, &params, &cfg.integrator(c.dt), seed, exec).map_err(wrap)
        }
        ProbeName::FirstJump => {
            let f = p.first_jump.as_ref().ok_or_else(missing)?;
            first_jump_probe(&levy, f.eps, f.samples, seed).map_err(wrap)
        }
        ProbeName::Irreducibility => {
            let ir = p.irreducibility.as_ref().ok_or_else(missing)?;
            let xis = if ir.initial.is_empty() {
                vec![xi]
            } else {
                ir.initial.iter().map(|s| s.build(cfg.r)).collect::<Result<_, _>>().map_err(scenario)?
            };
            let params = IrreducibilityParams {
                kappas: ir.kappas.clone(),
                horizon: ir.horizon,
                delta: cfg.delta(ir.delta, LARGE_JUMP_THRESHOLD),
                trials: ir.trials,
                eps_grid: ir.eps_grid.clone(),
            };
            irreducibility_probe(&spec, &xis, &levy, &params, &cfg.integrator(ir.dt), seed, exec).map_err(wrap)
        }
        ProbeName::Resolvent => {
            let rs = p.resolvent.as_ref().ok_or_else(missing)?;
            let params = ResolventParams {
                kappa: rs.kappa,
                lambda: rs.lambda,
                times: rs.times(),
                delta: cfg.delta(rs.delta, LARGE_JUMP_THRESHOLD),
                trials: rs.trials,
            };
            resolvent_estimate(&spec, &xi, &levy, &params, &cfg.integrator(rs.dt), seed, exec).map_err(wrap)
        }
        ProbeName::Dissipativity => {
            let d = p.dissipativity.as_ref().ok_or_else(missing)?;
            let c = cfg.constants().ok_or_else(missing)?.map_err(scenario)?;
            let params = DissipativityParams {
                pairs: d.pairs,
                radius: d.radius,
                lipschitz_radii: d.lipschitz_radii.clone(),
                lipschitz_pairs: d.lipschitz_pairs,
                growth_samples: d.growth_samples,
            };
            dissipativity_probe(&spec, &c, &params, seed).map_err(wrap)
        }
    }
}

/// Where reports go: the explicit directory, else the scenario's, else `sdde-out`.
pub fn output_dir(cfg: &ScenarioConfig, explicit: Option<&Path>) -> PathBuf {
    explicit.map(Path::to_path_buf).or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("sdde-out"))
}

/// Runs the probes in order, writing `<probe>_report.json` and
/// `<probe>_trials.csv` for each into `out`.
pub fn run_scenario(cfg: &ScenarioConfig, probes: &[ProbeName], out: &Path, parallel: bool) -> Result<Vec<ProbeReport>, RunError> {
    let mut reports = Vec::with_capacity(probes.len());
    for &probe in probes {
        let rep = if parallel { run_probe(cfg, probe, &Parallel)? } else { run_probe(cfg, probe, &Serial)? };
        write_report(out, &rep)?;
        reports.push(rep);
    }
    Ok(reports)
}
