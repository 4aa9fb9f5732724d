//! `hmc contraction`: coupled-flow sweeps against the `1 - (mu/4) t^2`
//! contraction bound and the two-sided crude sandwich.

use serde_json::json;

use hmc_core::analysis::{contraction_and_crude_sweep, uniform_time_grid};
use hmc_core::{Error, Result};

use crate::commands::CommandOutcome;
use crate::config::{ExperimentConfig, PotentialArg};
use crate::output::{float_cell, CsvWriter};

const RATIO_SLACK: f64 = 1e-6;

pub fn defaults() -> ExperimentConfig {
    ExperimentConfig {
        potential: Some(PotentialArg::Logcosh),
        dim: Some(2),
        mu: Some(1.0),
        kappa: Some(100.0),
        pairs: Some(1000),
        t_points: Some(64),
        seed: Some(0),
        ..Default::default()
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    let potential = cfg.build_potential()?;
    let pairs = cfg.pairs.unwrap_or(1000);
    let points = cfg.t_points.unwrap_or(64);
    if points == 0 {
        return Err(Error::InvalidInput(
            "need a positive number of grid times".into(),
        ));
    }
    let t_max = cfg.t_max.unwrap_or(0.5 / potential.lipschitz().sqrt());
    let grid = uniform_time_grid(t_max, points);
    let seed = cfg.seed.unwrap_or(0);
    let (contraction, crude) = contraction_and_crude_sweep(&potential, pairs, &grid, seed)?;

    let mut csv = CsvWriter::create(
        &cfg.out_dir(),
        "contraction.csv",
        &["t", "worst_ratio", "bound"],
    )?;
    for j in 0..grid.len() {
        csv.row(&[
            float_cell(contraction.t_grid[j]),
            float_cell(contraction.worst_ratio[j]),
            float_cell(contraction.bound[j]),
        ]);
    }
    let path = csv.finish()?;

    let contraction_ok = contraction.holds(RATIO_SLACK);
    let crude_ok = crude.holds(RATIO_SLACK);
    let crude_min = crude
        .min_ratio
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let crude_max = crude
        .max_ratio
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(CommandOutcome {
        results: json!({
            "contraction_csv": path,
            "pairs": pairs,
            "max_violation": contraction.max_violation(),
            "contraction_bound_holds": contraction_ok,
            "crude_min_ratio": crude_min,
            "crude_max_ratio": crude_max,
            "crude_bound_holds": crude_ok,
            "slack": RATIO_SLACK,
        }),
        violated: !(contraction_ok && crude_ok),
    })
}
