//! `hmc sample`: run one or more chains, write every visited point and the
//! per-step gradient counts.

use rayon::prelude::*;
use serde_json::json;

use hmc_core::analysis::amortized_gradient_stats;
use hmc_core::chain::{run_chain_with_stream, ChainTrajectory};
use hmc_core::{Error, Result};

use crate::commands::CommandOutcome;
use crate::config::{ExperimentConfig, ModeArg, PotentialArg, SolverArg};
use crate::output::{float_cell, CsvWriter};

pub fn defaults() -> ExperimentConfig {
    ExperimentConfig {
        potential: Some(PotentialArg::Quadratic),
        dim: Some(2),
        mu: Some(1.0),
        kappa: Some(10.0),
        eps: Some(0.1),
        steps: Some(1000),
        chains: Some(1),
        seed: Some(0),
        mode: Some(ModeArg::Discretized),
        solver: Some(SolverArg::Collocation),
        ..Default::default()
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    let potential = cfg.build_potential()?;
    let chain_cfg = cfg.build_chain_config(potential)?;
    let chains = cfg.chains.unwrap_or(1);
    if chains == 0 {
        return Err(Error::InvalidInput("need at least one chain".into()));
    }
    let trajectories: Vec<ChainTrajectory> = (0..chains)
        .into_par_iter()
        .map(|i| run_chain_with_stream(&chain_cfg, i as u64))
        .collect::<Result<_>>()?;

    let d = chain_cfg.potential.dim();
    let mut header: Vec<String> = vec!["chain".into(), "step".into()];
    header.extend((0..d).map(|i| format!("x{i}")));
    header.push("grads".into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = CsvWriter::create(&cfg.out_dir(), "trajectory.csv", &header_refs)?;
    for (ci, traj) in trajectories.iter().enumerate() {
        for k in 0..=traj.num_steps() {
            let mut cells = vec![ci.to_string(), k.to_string()];
            cells.extend(traj.point(k).iter().map(|&x| float_cell(x)));
            cells.push(if k == 0 {
                "0".into()
            } else {
                traj.ledger.per_step[k - 1].to_string()
            });
            csv.row(&cells);
        }
    }
    let path = csv.finish()?;

    let per_chain: Vec<_> = trajectories
        .iter()
        .enumerate()
        .map(|(ci, traj)| {
            let stats = amortized_gradient_stats(&traj.ledger).ok();
            json!({
                "chain": ci,
                "final_point": traj.last_point().as_slice().to_vec(),
                "mean_grads_per_step": stats.as_ref().map(|s| s.mean_per_step),
                "mean_grad_norm_sq": stats.as_ref().map(|s| s.mean_grad_norm_sq),
            })
        })
        .collect();
    Ok(CommandOutcome {
        results: json!({
            "trajectory_csv": path,
            "chains": chains,
            "steps": chain_cfg.steps,
            "dim": d,
            "per_chain": per_chain,
        }),
        violated: false,
    })
}
