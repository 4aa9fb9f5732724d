//! `hmc lowerbound`: run the two-mode Gaussian chain with the exact kernel
//! and compare the slow coordinate's lag-1 autocorrelation with its closed
//! form; the implied relaxation time must clear `2 c^2 kappa`.

use serde_json::json;

use hmc_core::analysis::{gaussian_chain_exact_gap, lag1_autocorrelation};
use hmc_core::chain::{run_chain, ChainConfig, Mode, SolverKind};
use hmc_core::potentials::Potential;
use hmc_core::Result;

use crate::commands::CommandOutcome;
use crate::config::ExperimentConfig;
use crate::output::{float_cell, CsvWriter};

pub fn defaults() -> ExperimentConfig {
    ExperimentConfig {
        mu: Some(1.0),
        lipschitz: Some(100.0),
        c: Some(2.0),
        steps: Some(1_000_000),
        seed: Some(0),
        ..Default::default()
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    let (mu, lipschitz) = cfg.curvature()?;
    let c = cfg.c.unwrap_or(2.0);
    let samples = cfg.steps.unwrap_or(1_000_000) as usize;
    let gaps = gaussian_chain_exact_gap(mu, lipschitz, c)?;
    let burn_in = cfg
        .burn_in
        .unwrap_or(10 * gaps.relaxation_lower.ceil() as usize);
    let potential = Potential::quadratic_diagonal(&[mu, lipschitz])?;
    let step_time = 1.0 / (c * lipschitz.sqrt());
    let config = ChainConfig {
        potential,
        step_time,
        steps: (burn_in + samples) as u64,
        ode_tolerance: 0.0,
        epsilon: 0.5,
        mode: Mode::Ideal,
        step_constant: c,
        seed: cfg.seed.unwrap_or(0),
        solver: SolverKind::Exact,
        degree: 0,
    };
    let trajectory = run_chain(&config)?;

    let frequencies = [mu.sqrt(), lipschitz.sqrt()];
    let mut csv = CsvWriter::create(
        &cfg.out_dir(),
        "autocorr.csv",
        &["coord", "lag1", "std_err", "exact"],
    )?;
    let mut estimates = Vec::new();
    for (i, omega) in frequencies.iter().enumerate() {
        let est = lag1_autocorrelation(&trajectory.coordinate(i), burn_in)?;
        let exact = (step_time * omega).cos();
        csv.row(&[
            i.to_string(),
            float_cell(est.lag1),
            float_cell(est.std_err),
            float_cell(exact),
        ]);
        estimates.push((est, exact));
    }
    let path = csv.finish()?;

    let (slow, slow_exact) = &estimates[0];
    let tau = slow.relaxation_estimate();
    let relative_se = slow.std_err / (1.0 - slow.lag1);
    let threshold = (1.0 - 3.0 * relative_se) * gaps.relaxation_lower;
    let tau_ok = tau >= threshold;
    let cos_ok = (slow.lag1 - slow_exact).abs() <= 3.0 * slow.std_err;
    Ok(CommandOutcome {
        results: json!({
            "autocorr_csv": path,
            "burn_in": burn_in,
            "samples": samples,
            "lag1_slow": slow.lag1,
            "std_err_slow": slow.std_err,
            "exact_slow": slow_exact,
            "lag1_within_3se_of_exact": cos_ok,
            "relaxation_estimate": tau,
            "relaxation_lower_bound": gaps.relaxation_lower,
            "pass_threshold": threshold,
            "gap_slow": gaps.gap_slow,
            "gap_fast": gaps.gap_fast,
        }),
        violated: !tau_ok,
    })
}
