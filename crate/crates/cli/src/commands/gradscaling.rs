//! `hmc gradscaling`: mean gradient evaluations per step of the collocation
//! chain across a kappa/epsilon grid, checking the sqrt(kappa) and 1/eps
//! trends on the pairs the grid exposes.

use rayon::prelude::*;
use serde_json::json;

use hmc_core::analysis::amortized_gradient_stats;
use hmc_core::chain::{default_config_with, run_chain_endpoint};
use hmc_core::potentials::Potential;
use hmc_core::{Error, Result};

use crate::commands::CommandOutcome;
use crate::config::{ExperimentConfig, PotentialArg};
use crate::output::{float_cell, CsvWriter};

/// Doubling the per-step work (via 4x kappa or eps/2) must land here.
const TREND_WINDOW: (f64, f64) = (1.4, 2.9);

pub fn defaults() -> ExperimentConfig {
    ExperimentConfig {
        potential: Some(PotentialArg::Quadratic),
        dim: Some(10),
        mu: Some(1.0),
        eps: Some(1e-3),
        kappas: Some(vec![16.0, 64.0]),
        steps: Some(200),
        cn: Some(2.0),
        seed: Some(0),
        ..Default::default()
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    let dim = cfg.dim.unwrap_or(10);
    let mu = cfg.mu.unwrap_or(1.0);
    let kappas = cfg
        .kappas
        .clone()
        .ok_or_else(|| Error::InvalidInput("missing `kappas`".into()))?;
    if kappas.is_empty() {
        return Err(Error::InvalidInput("`kappas` must be non-empty".into()));
    }
    let eps = cfg.eps.unwrap_or(1e-3);
    let epsilons = cfg.epsilons.clone().unwrap_or_else(|| vec![eps, eps / 2.0]);
    let steps = cfg.steps.unwrap_or(200);
    let seed = cfg.seed.unwrap_or(0);
    let n_constant = cfg.cn.unwrap_or(2.0);

    let cells: Vec<(f64, f64)> = kappas
        .iter()
        .flat_map(|&k| epsilons.iter().map(move |&e| (k, e)))
        .collect();
    let means: Vec<f64> = cells
        .par_iter()
        .map(|&(kappa, epsilon)| {
            let p = Potential::quadratic_log_spaced(dim, mu, mu * kappa)?;
            let mut config = default_config_with(&p, epsilon, seed, n_constant)?;
            config.steps = steps;
            let (_, ledger) = run_chain_endpoint(&config, 0)?;
            Ok(amortized_gradient_stats(&ledger)?.mean_per_step)
        })
        .collect::<Result<_>>()?;

    let mut csv = CsvWriter::create(
        &cfg.out_dir(),
        "gradscaling.csv",
        &["kappa", "eps", "mean_grads_per_step"],
    )?;
    for (&(kappa, epsilon), &mean) in cells.iter().zip(&means) {
        csv.row(&[float_cell(kappa), float_cell(epsilon), float_cell(mean)]);
    }
    let path = csv.finish()?;

    let lookup = |kappa: f64, epsilon: f64| -> Option<f64> {
        cells
            .iter()
            .position(|&(k, e)| k == kappa && e == epsilon)
            .map(|i| means[i])
    };
    let mut checks = Vec::new();
    let mut violated = false;
    // 4x in kappa at fixed eps should land in the sqrt-trend window.
    for &e in &epsilons {
        for w in kappas.windows(2) {
            if (w[1] / w[0] - 4.0).abs() <= 1e-9 {
                if let (Some(lo), Some(hi)) = (lookup(w[0], e), lookup(w[1], e)) {
                    let ratio = hi / lo;
                    let ok = ratio >= TREND_WINDOW.0 && ratio <= TREND_WINDOW.1;
                    violated |= !ok;
                    checks.push(json!({
                        "kind": "kappa_quadrupled", "eps": e,
                        "from_kappa": w[0], "to_kappa": w[1],
                        "ratio": ratio, "ok": ok,
                    }));
                }
            }
        }
    }
    // Halving eps at fixed kappa should do the same.
    for &k in &kappas {
        for w in epsilons.windows(2) {
            if (w[0] / w[1] - 2.0).abs() <= 1e-9 {
                if let (Some(lo), Some(hi)) = (lookup(k, w[0]), lookup(k, w[1])) {
                    let ratio = hi / lo;
                    let ok = ratio >= TREND_WINDOW.0 && ratio <= TREND_WINDOW.1;
                    violated |= !ok;
                    checks.push(json!({
                        "kind": "eps_halved", "kappa": k,
                        "from_eps": w[0], "to_eps": w[1],
                        "ratio": ratio, "ok": ok,
                    }));
                }
            }
        }
    }

    Ok(CommandOutcome {
        results: json!({
            "gradscaling_csv": path,
            "steps_per_cell": steps,
            "cells": cells
                .iter()
                .zip(&means)
                .map(|(&(k, e), &m)| json!({"kappa": k, "eps": e, "mean_grads_per_step": m}))
                .collect::<Vec<_>>(),
            "trend_window": [TREND_WINDOW.0, TREND_WINDOW.1],
            "checks": checks,
        }),
        violated,
    })
}
