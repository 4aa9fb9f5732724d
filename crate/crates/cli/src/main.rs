//! Experiment CLI for HMC on strongly convex, smooth targets.
//!
//! Every subcommand takes the same flat flag set (plus a JSON config file
//! with the flag names as keys; precedence defaults < file < flags), writes
//! CSV output under `--out`, and prints a JSON summary to stdout. Exit
//! codes: 0 success, 1 invalid configuration, 2 solver failure, 3 a tested
//! bound was violated (the report is still written).

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use commands::CommandOutcome;
use config::{ExperimentConfig, ModeArg, PotentialArg, SolverArg};
use hmc_core::Result;

#[derive(Parser)]
#[command(
    name = "hmc",
    version,
    about = "Hamiltonian Monte Carlo experiments on strongly convex targets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run HMC chains and write trajectories plus gradient counts.
    Sample(Flags),
    /// Coupled-flow contraction and crude-bound sweeps.
    Contraction(Flags),
    /// Relaxation-time lower bound on the two-mode Gaussian chain.
    Lowerbound(Flags),
    /// Wasserstein distance of replicated endpoints to the Gaussian target.
    W2(Flags),
    /// Mean gradient cost per step across a kappa/epsilon grid.
    Gradscaling(Flags),
    /// Collocation solver accuracy and gradient counts against oracles.
    Odecheck(Flags),
}

#[derive(clap::Args)]
struct Flags {
    /// JSON config file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Target family.
    #[arg(long, value_enum)]
    potential: Option<PotentialArg>,
    #[arg(long)]
    dim: Option<usize>,
    /// Strong-convexity constant.
    #[arg(long)]
    mu: Option<f64>,
    /// Gradient Lipschitz constant.
    #[arg(long = "L")]
    lipschitz: Option<f64>,
    /// Condition number; alternative to --L.
    #[arg(long, conflicts_with = "lipschitz")]
    kappa: Option<f64>,
    /// Explicit Hessian eigenvalues for a quadratic target.
    #[arg(long, value_delimiter = ',')]
    eigs: Option<Vec<f64>>,
    /// Minimizer of a quadratic target (with --eigs).
    #[arg(long, value_delimiter = ',')]
    center: Option<Vec<f64>>,
    /// Target accuracy (0 < eps < sqrt(dim)).
    #[arg(long)]
    eps: Option<f64>,
    /// Number of HMC steps (post-burn-in samples for `lowerbound`).
    #[arg(long)]
    steps: Option<u64>,
    /// Chains to run in `sample`.
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Step-size constant in T = 1/(c sqrt(L)).
    #[arg(long)]
    c: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    solver: Option<SolverArg>,
    /// ODE tolerance override for discretized chains.
    #[arg(long)]
    delta: Option<f64>,
    /// Collocation polynomial degree (0..=8).
    #[arg(long)]
    degree: Option<usize>,
    /// Output directory for CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (env HMC_THREADS is the fallback).
    #[arg(long)]
    threads: Option<usize>,
    /// Coupled pairs for `contraction`.
    #[arg(long)]
    pairs: Option<usize>,
    /// Grid times after zero for `contraction`.
    #[arg(long)]
    t_points: Option<usize>,
    /// Largest grid time for `contraction`.
    #[arg(long)]
    t_max: Option<f64>,
    /// Replicated chains for `w2`.
    #[arg(long)]
    replicas: Option<usize>,
    /// Step-count constant C_N.
    #[arg(long)]
    cn: Option<f64>,
    /// Condition numbers for `gradscaling`.
    #[arg(long, value_delimiter = ',')]
    kappas: Option<Vec<f64>>,
    /// Accuracies for `gradscaling` (default: eps and eps/2).
    #[arg(long, value_delimiter = ',')]
    epsilons: Option<Vec<f64>>,
    /// Burn-in steps for `lowerbound`.
    #[arg(long)]
    burn_in: Option<usize>,
    /// Solver tolerances for `odecheck`.
    #[arg(long, value_delimiter = ',')]
    deltas: Option<Vec<f64>>,
    /// Random starts per tolerance for `odecheck`.
    #[arg(long)]
    trials: Option<usize>,
}

impl Flags {
    fn to_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            potential: self.potential,
            dim: self.dim,
            mu: self.mu,
            lipschitz: self.lipschitz,
            kappa: self.kappa,
            eigs: self.eigs.clone(),
            center: self.center.clone(),
            eps: self.eps,
            steps: self.steps,
            chains: self.chains,
            seed: self.seed,
            c: self.c,
            mode: self.mode,
            solver: self.solver,
            delta: self.delta,
            degree: self.degree,
            out: self.out.clone(),
            threads: self.threads,
            pairs: self.pairs,
            t_points: self.t_points,
            t_max: self.t_max,
            replicas: self.replicas,
            cn: self.cn,
            kappas: self.kappas.clone(),
            epsilons: self.epsilons.clone(),
            burn_in: self.burn_in,
            deltas: self.deltas.clone(),
            trials: self.trials,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let informational = matches!(
                err.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            );
            let _ = err.print();
            return if informational {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    let started = Instant::now();
    match execute(&cli) {
        Ok((name, merged, outcome)) => {
            let summary = json!({
                "command": name,
                "config": merged,
                "git_describe": output::git_describe(),
                "duration_seconds": started.elapsed().as_secs_f64(),
                "ok": !outcome.violated,
                "results": outcome.results,
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).expect("serializable summary")
            );
            if outcome.violated {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(if err.is_solver_failure() { 2 } else { 1 })
        }
    }
}

type Runner = fn(&ExperimentConfig) -> Result<CommandOutcome>;

fn execute(cli: &Cli) -> Result<(&'static str, ExperimentConfig, CommandOutcome)> {
    let (name, flags, defaults, runner): (&str, &Flags, ExperimentConfig, Runner) =
        match &cli.command {
            Command::Sample(f) => (
                "sample",
                f,
                commands::sample::defaults(),
                commands::sample::run,
            ),
            Command::Contraction(f) => (
                "contraction",
                f,
                commands::contraction::defaults(),
                commands::contraction::run,
            ),
            Command::Lowerbound(f) => (
                "lowerbound",
                f,
                commands::lowerbound::defaults(),
                commands::lowerbound::run,
            ),
            Command::W2(f) => ("w2", f, commands::w2::defaults(), commands::w2::run),
            Command::Gradscaling(f) => (
                "gradscaling",
                f,
                commands::gradscaling::defaults(),
                commands::gradscaling::run,
            ),
            Command::Odecheck(f) => (
                "odecheck",
                f,
                commands::odecheck::defaults(),
                commands::odecheck::run,
            ),
        };
    let file_cfg = match &flags.config {
        Some(path) => ExperimentConfig::from_json_file(path)?,
        None => ExperimentConfig::default(),
    };
    let merged = defaults.merged(file_cfg).merged(flags.to_config());
    configure_threads(&merged);
    let outcome = runner(&merged)?;
    Ok((name, merged, outcome))
}

fn configure_threads(cfg: &ExperimentConfig) {
    let from_env = std::env::var("HMC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    if let Some(threads) = cfg.threads.or(from_env) {
        if threads > 0 {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
        }
    }
}
