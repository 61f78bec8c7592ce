use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use sdde_core::conditions::check_proposition_conditions;

use sdde::config::{load_config, ProbeName};
use sdde::output::summary;
use sdde::runner::{output_dir, run_scenario};

/// Simulation and verification harness for fading-memory delay equations
/// driven by symmetric pure-jump noise.
#[derive(Parser)]
#[command(name = "sdde", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the sufficient conditions of a scenario without simulating.
    Check { config: PathBuf },
    /// Run probes and write their reports.
    Run {
        config: PathBuf,
        /// Probe to run; repeat to run several in order. Defaults to the
        /// scenario's `run` list, else every configured probe.
        #[arg(long = "probe", value_enum)]
        probes: Vec<ProbeName>,
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides every Monte Carlo sample count.
        #[arg(long)]
        trials: Option<usize>,
        /// Output directory.
        #[arg(long, env = "SDDE_OUT_DIR")]
        out: Option<PathBuf>,
        /// Run trials on one thread.
        #[arg(long)]
        serial: bool,
    },
}

fn check(config: PathBuf) -> anyhow::Result<bool> {
    let cfg = load_config(&config)?;
    let Some(c) = cfg.constants() else {
        bail!("{} has no [constants] block and the drift has no built-in constants", config.display());
    };
    let rep = check_proposition_conditions(&c?);
    println!("r                      {}", cfg.r);
    println!("slack1                 {}", rep.slack1);
    println!("slack2                 {}", rep.slack2);
    println!("mu1 moment at 2r       {}", rep.mu1_moment_2r);
    println!("mu2 moment at 2r       {}", rep.mu2_moment_2r);
    println!("mu1 class exponent     {}", rep.mu1_class_exponent);
    println!("mu1 in class           {}", rep.mu1_in_class);
    println!("mu2 in class           {}", rep.mu2_in_class);
    for f in &rep.failures {
        println!("failure: {f}");
    }
    println!("conditions             {}", if rep.pass { "pass" } else { "FAIL" });
    Ok(rep.pass)
}

fn run(
    config: PathBuf,
    probes: Vec<ProbeName>,
    seed: Option<u64>,
    trials: Option<usize>,
    out: Option<PathBuf>,
    serial: bool,
) -> anyhow::Result<bool> {
    let mut cfg = load_config(&config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = trials {
        cfg.set_trials(n);
        cfg.validate().context("after applying --trials")?;
    }
    let selected = cfg.selected_probes(&probes);
    if selected.is_empty() {
        bail!("no probes selected and none configured in {}", config.display());
    }
    let dir = output_dir(&cfg, out.as_deref());
    let reports = run_scenario(&cfg, &selected, &dir, !serial)?;
    print!("{}", summary(&reports));
    println!("reports written to {}", dir.display());
    Ok(reports.iter().all(|r| r.passed()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { config } => check(config),
        Command::Run { config, probes, seed, trials, out, serial } => run(config, probes, seed, trials, out, serial),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
