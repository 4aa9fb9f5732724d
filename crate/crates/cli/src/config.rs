//! Flat experiment configuration shared by every subcommand.
//!
//! Precedence is `defaults < JSON config file < flags`: each layer is an
//! [`ExperimentConfig`] with only its known fields set, merged field-wise.
//! The merged struct serializes back to the flat JSON schema losslessly, and
//! the summary printed by every command echoes it.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use hmc_core::chain::{ChainConfig, Mode, SolverKind, DEFAULT_STEP_CONSTANT};
use hmc_core::potentials::Potential;
use hmc_core::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PotentialArg {
    Quadratic,
    Logcosh,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Ideal,
    Discretized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolverArg {
    Exact,
    Adaptive,
    Collocation,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Ideal => Mode::Ideal,
            ModeArg::Discretized => Mode::Discretized,
        }
    }
}

impl From<SolverArg> for SolverKind {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Exact => SolverKind::Exact,
            SolverArg::Adaptive => SolverKind::Adaptive,
            SolverArg::Collocation => SolverKind::Collocation,
        }
    }
}

/// One flat object with the flag names as keys; unset fields stay out of the
/// JSON so a round trip reproduces the struct exactly.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chains: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cn: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
}

macro_rules! merge_fields {
    ($base:ident, $over:ident; $($field:ident),* $(,)?) => {{
        ExperimentConfig {
            $($field: $over.$field.or($base.$field),)*
        }
    }};
}

impl ExperimentConfig {
    /// Field-wise merge; `overrides` wins wherever it is set. Setting either
    /// of the paired knobs `L`/`kappa` displaces both from the lower layer.
    pub fn merged(self, overrides: Self) -> Self {
        let mut base = self;
        if overrides.lipschitz.is_some() || overrides.kappa.is_some() {
            base.lipschitz = None;
            base.kappa = None;
        }
        merge_fields!(base, overrides;
            potential, dim, mu, lipschitz, kappa, eigs, center, eps, steps,
            chains, seed, c, mode, solver, delta, degree, out, threads, pairs,
            t_points, t_max, replicas, cn, kappas, epsilons, burn_in, deltas,
            trials,
        )
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidInput(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text).map_err(|e| {
            Error::InvalidInput(format!("cannot parse config {}: {e}", path.display()))
        })
    }

    fn require<T: Copy>(value: Option<T>, name: &str) -> Result<T> {
        value.ok_or_else(|| Error::InvalidInput(format!("missing required setting `{name}`")))
    }

    /// Strong-convexity and smoothness constants from `mu` plus `L` or `kappa`.
    pub fn curvature(&self) -> Result<(f64, f64)> {
        let mu = Self::require(self.mu, "mu")?;
        let lipschitz = match (self.lipschitz, self.kappa) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidInput(
                    "set either `L` or `kappa`, not both".into(),
                ))
            }
            (Some(l), None) => l,
            (None, Some(k)) => mu * k,
            (None, None) => return Err(Error::InvalidInput("missing `L` or `kappa`".into())),
        };
        Ok((mu, lipschitz))
    }

    /// Builds the target from the merged settings.
    pub fn build_potential(&self) -> Result<Potential> {
        let kind = Self::require(self.potential, "potential")?;
        match kind {
            PotentialArg::Quadratic => {
                if let Some(eigs) = &self.eigs {
                    let center;
                    let center_slice: &[f64] = match &self.center {
                        Some(c) => c,
                        None => {
                            center = vec![0.0; eigs.len()];
                            &center
                        }
                    };
                    return Potential::quadratic_diagonal_centered(eigs, center_slice);
                }
                let dim = Self::require(self.dim, "dim")?;
                let (mu, lipschitz) = self.curvature()?;
                if self.center.is_some() {
                    return Err(Error::InvalidInput(
                        "`center` needs an explicit `eigs` list".into(),
                    ));
                }
                Potential::quadratic_log_spaced(dim, mu, lipschitz)
            }
            PotentialArg::Logcosh => {
                if self.eigs.is_some() || self.center.is_some() {
                    return Err(Error::InvalidInput(
                        "`eigs`/`center` only apply to quadratic targets".into(),
                    ));
                }
                let dim = Self::require(self.dim, "dim")?;
                let (mu, lipschitz) = self.curvature()?;
                Potential::log_cosh(dim, mu, lipschitz)
            }
        }
    }

    /// Assembles and validates a chain configuration around the potential.
    pub fn build_chain_config(&self, potential: Potential) -> Result<ChainConfig> {
        let epsilon = Self::require(self.eps, "eps")?;
        let seed = Self::require(self.seed, "seed")?;
        let step_constant = self.c.unwrap_or(DEFAULT_STEP_CONSTANT);
        let step_time = 1.0 / (step_constant * potential.lipschitz().sqrt());
        let mode = self.mode.map(Mode::from).unwrap_or(Mode::Discretized);
        let solver = self
            .solver
            .map(SolverKind::from)
            .unwrap_or(SolverKind::Collocation);
        let ode_tolerance = match (mode, self.delta) {
            (Mode::Ideal, _) => 0.0,
            (Mode::Discretized, Some(d)) => d,
            (Mode::Discretized, None) => {
                potential.mu().sqrt() * step_time * step_time * epsilon / 16.0
            }
        };
        let config = ChainConfig {
            potential,
            step_time,
            steps: Self::require(self.steps, "steps")?,
            ode_tolerance,
            epsilon,
            mode,
            step_constant,
            seed,
            solver,
            degree: self.degree.unwrap_or(0),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_lossless() {
        let cfg = ExperimentConfig {
            potential: Some(PotentialArg::Logcosh),
            dim: Some(4),
            mu: Some(1.0),
            kappa: Some(100.0),
            eps: Some(0.1),
            seed: Some(7),
            solver: Some(SolverArg::Adaptive),
            kappas: Some(vec![16.0, 64.0]),
            ..Default::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
        assert!(!text.contains("\"L\""), "unset fields stay out of the JSON");
    }

    #[test]
    fn merge_prefers_overrides() {
        let base = ExperimentConfig {
            dim: Some(2),
            mu: Some(1.0),
            eps: Some(0.1),
            ..Default::default()
        };
        let over = ExperimentConfig {
            dim: Some(10),
            seed: Some(3),
            ..Default::default()
        };
        let merged = base.merged(over);
        assert_eq!(merged.dim, Some(10));
        assert_eq!(merged.mu, Some(1.0));
        assert_eq!(merged.seed, Some(3));
    }

    #[test]
    fn curvature_resolution() {
        let both = ExperimentConfig {
            mu: Some(1.0),
            lipschitz: Some(4.0),
            kappa: Some(4.0),
            ..Default::default()
        };
        assert!(both.curvature().is_err());
        let via_kappa = ExperimentConfig {
            mu: Some(2.0),
            kappa: Some(8.0),
            ..Default::default()
        };
        assert_eq!(via_kappa.curvature().unwrap(), (2.0, 16.0));
    }

    #[test]
    fn potential_from_eigs_overrides_spread() {
        let cfg = ExperimentConfig {
            potential: Some(PotentialArg::Quadratic),
            eigs: Some(vec![1.0, 9.0]),
            center: Some(vec![0.5, -0.5]),
            ..Default::default()
        };
        let p = cfg.build_potential().unwrap();
        assert_eq!(p.dim(), 2);
        assert_eq!(p.mu(), 1.0);
        assert_eq!(p.lipschitz(), 9.0);
    }
}
