//! Hamiltonian Monte Carlo for strongly convex, smooth targets.
//!
//! The library covers the full pipeline behind the `hmc` experiment CLI:
//!
//! - [`potentials`]: target energies `f` with certified strong-convexity and
//!   smoothness constants (`mu`, `L`), gradients, and curvature probes;
//! - [`flow`]: the Hamiltonian flow `x'' = -∇f(x)` solved exactly
//!   (quadratics), by certified adaptive leapfrog, or by the
//!   piecewise-polynomial collocation solver with gradient accounting;
//! - [`chain`]: ideal and discretized HMC chains, parameter schedules,
//!   per-step gradient ledgers, and synchronously coupled flows;
//! - [`analysis`]: contraction and crude-bound sweeps, lag-1 autocorrelation
//!   with batch-means errors, closed-form spectral gaps, Gaussian Wasserstein
//!   distances, and the relaxation/gradient scaling experiments;
//! - [`rng`]: counter-based random streams keyed by `(seed, stream)` for
//!   bit-reproducible parallel replicas.

pub mod analysis;
pub mod chain;
pub mod error;
pub mod flow;
pub mod potentials;
pub mod rng;

pub use error::{Error, Result};
