//! `hmc odecheck`: collocation solver error against oracles over random
//! starts, plus the measured gradient-count constant.

use serde_json::json;

use hmc_core::flow::{
    adaptive_reference_flow, collocation_flow, exact_quadratic_flow, piece_count, PhaseState,
};
use hmc_core::rng::ChainRng;
use hmc_core::{Error, Result};

use crate::commands::CommandOutcome;
use crate::config::{ExperimentConfig, PotentialArg};
use crate::output::{float_cell, CsvWriter};

pub fn defaults() -> ExperimentConfig {
    ExperimentConfig {
        potential: Some(PotentialArg::Quadratic),
        dim: Some(4),
        mu: Some(0.25),
        lipschitz: Some(1.0),
        deltas: Some(vec![1e-6, 1e-8]),
        trials: Some(50),
        degree: Some(0),
        seed: Some(0),
        ..Default::default()
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    let potential = cfg.build_potential()?;
    let deltas = cfg.deltas.clone().unwrap_or_else(|| vec![1e-6, 1e-8]);
    if deltas.iter().any(|&d| !d.is_finite() || d <= 0.0) {
        return Err(Error::InvalidInput("tolerances must be positive".into()));
    }
    let trials = cfg.trials.unwrap_or(50);
    if trials == 0 {
        return Err(Error::InvalidInput("need at least one trial".into()));
    }
    let degree = cfg.degree.unwrap_or(0);
    let seed = cfg.seed.unwrap_or(0);
    let t = 1.0 / (16000.0 * potential.lipschitz().sqrt());

    let mut csv = CsvWriter::create(
        &cfg.out_dir(),
        "odecheck.csv",
        &["trial", "delta", "error", "grads"],
    )?;
    let mut worst_ratio = 0.0f64;
    let mut grad_constant = 0.0f64;
    let mut violated = false;
    for (di, &delta) in deltas.iter().enumerate() {
        for trial in 0..trials {
            let mut rng = ChainRng::new(seed, (di * trials + trial) as u64);
            let s0 = PhaseState::new(
                rng.normal_vector(potential.dim()) / potential.mu().sqrt(),
                rng.normal_vector(potential.dim()),
            )?;
            let grad0 = potential.gradient(&s0.position)?.norm();
            let pieces = piece_count(s0.velocity.norm(), grad0, potential.lipschitz(), t, delta);
            let res = collocation_flow(&potential, &s0, t, delta, pieces, degree)?;
            let oracle = if potential.is_quadratic() {
                exact_quadratic_flow(&potential, &s0, t)?
            } else {
                adaptive_reference_flow(&potential, &s0, t, delta / 100.0)?.state
            };
            let error = (&res.state.position - &oracle.position).norm();
            violated |= error > 10.0 * delta;
            worst_ratio = worst_ratio.max(error / delta);
            let c_big = s0.velocity.norm() + t * grad0;
            let budget = (pieces * (degree + 1)) as f64 * (c_big * t / delta + 2.0).ln();
            grad_constant = grad_constant.max(res.gradient_evaluations as f64 / budget);
            csv.row(&[
                trial.to_string(),
                float_cell(delta),
                float_cell(error),
                res.gradient_evaluations.to_string(),
            ]);
        }
    }
    let path = csv.finish()?;

    Ok(CommandOutcome {
        results: json!({
            "odecheck_csv": path,
            "step_time": t,
            "trials_per_delta": trials,
            "deltas": deltas,
            "worst_error_over_delta": worst_ratio,
            "error_limit_over_delta": 10.0,
            "measured_gradient_constant": grad_constant,
        }),
        violated,
    })
}
