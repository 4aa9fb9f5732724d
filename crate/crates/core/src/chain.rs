//! HMC chains: parameter schedules, single steps, full trajectories, and
//! synchronously coupled flows for contraction measurements.
//!
//! Each step refreshes the velocity from `N(0, I)` and moves the position
//! along the Hamiltonian flow for time `T`. In ideal mode the flow is solved
//! exactly (closed form) or to a tolerance far below anything measured; in
//! discretized mode the collocation solver is held to the configured `delta`
//! and every gradient evaluation is recorded in the ledger.

use nalgebra::{DMatrix, DVector, DVectorView};

use crate::error::{Error, Result};
use crate::flow::{
    adaptive_profile, adaptive_reference_flow, collocation_flow, exact_quadratic_flow, piece_count,
    PhaseState, ADAPTIVE_STEP_CEILING, COLLOCATION_TIME_LIMIT,
};
use crate::potentials::Potential;
use crate::rng::ChainRng;

/// Step-size constant of the discretized schedule: `T = 1/(16000 sqrt(L))`.
pub const DEFAULT_STEP_CONSTANT: f64 = 16000.0;

/// Default multiplier in the step-count schedule `N = ceil(C_N log(d/eps) / (mu T^2))`.
pub const DEFAULT_N_CONSTANT: f64 = 2.0;

/// Iteration cap for the gradient-descent minimizer.
pub const MINIMIZER_ITERATION_CAP: u64 = 1_000_000;

/// Largest trajectory the chain runner will materialize, in bytes.
const TRAJECTORY_BYTE_CAP: u128 = 2 << 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Flow solved exactly (or to negligible tolerance); `delta` plays no role.
    Ideal,
    /// Flow solved to the configured `delta` per step.
    Discretized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    /// Closed-form flow; quadratic targets only.
    Exact,
    /// Step-doubling leapfrog with Richardson certification.
    Adaptive,
    /// Piecewise-polynomial Picard solver, valid for `sqrt(L) T <= 1/16000`.
    Collocation,
}

/// All knobs of one HMC chain.
#[derive(Clone, Debug)]
pub struct ChainConfig {
    pub potential: Potential,
    /// Step size `T`: the time the flow runs between velocity refreshes.
    pub step_time: f64,
    /// Number of HMC steps `N`.
    pub steps: u64,
    /// ODE error tolerance `delta`; 0 means ideal mode.
    pub ode_tolerance: f64,
    /// Target accuracy `epsilon` (dimensionless, `epsilon < sqrt(d)`).
    pub epsilon: f64,
    pub mode: Mode,
    /// Step-size constant `c` in `T = 1/(c sqrt(L))`.
    pub step_constant: f64,
    pub seed: u64,
    pub solver: SolverKind,
    /// Collocation polynomial degree (0 = piecewise constant).
    pub degree: usize,
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        let d = self.potential.dim() as f64;
        if !(self.step_time > 0.0 && self.step_time.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "step time must be positive, got {}",
                self.step_time
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < d.sqrt()) {
            return Err(Error::InvalidInput(format!(
                "epsilon must lie in (0, sqrt(d)) = (0, {}), got {}",
                d.sqrt(),
                self.epsilon
            )));
        }
        if !(self.ode_tolerance >= 0.0 && self.ode_tolerance.is_finite()) {
            return Err(Error::InvalidInput("bad ODE tolerance".into()));
        }
        if self.mode == Mode::Ideal && self.ode_tolerance != 0.0 {
            return Err(Error::InvalidInput(
                "ideal mode means delta = 0; set discretized mode for delta > 0".into(),
            ));
        }
        if !self.step_constant.is_finite() || self.step_constant <= 0.0 {
            return Err(Error::InvalidInput("step constant must be positive".into()));
        }
        if self.degree > 8 {
            return Err(Error::InvalidInput("collocation degree capped at 8".into()));
        }
        match (self.mode, self.solver) {
            (Mode::Ideal, SolverKind::Collocation) => Err(Error::InvalidInput(
                "ideal mode requires the exact or adaptive solver".into(),
            )),
            (Mode::Discretized, SolverKind::Collocation) => {
                let reach = self.potential.lipschitz().sqrt() * self.step_time;
                if reach > COLLOCATION_TIME_LIMIT * (1.0 + 1e-9) {
                    return Err(Error::InvalidInput(format!(
                        "collocation solver needs sqrt(L) T <= 1/16000, got {reach:e}"
                    )));
                }
                if self.ode_tolerance == 0.0 {
                    return Err(Error::InvalidInput(
                        "discretized collocation mode needs delta > 0".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// The discretized-HMC schedule: `T = 1/(16000 sqrt(L))`,
/// `delta = sqrt(mu) T^2 eps / 16`, `N = ceil(C_N log(d/eps) / (mu T^2))`
/// with the default `C_N = 2`.
pub fn default_config(p: &Potential, epsilon: f64, seed: u64) -> Result<ChainConfig> {
    default_config_with(p, epsilon, seed, DEFAULT_N_CONSTANT)
}

/// [`default_config`] with an explicit step-count constant `C_N`.
pub fn default_config_with(
    p: &Potential,
    epsilon: f64,
    seed: u64,
    n_constant: f64,
) -> Result<ChainConfig> {
    let d = p.dim() as f64;
    if !(epsilon > 0.0 && epsilon < d.sqrt()) {
        return Err(Error::InvalidInput(format!(
            "epsilon must lie in (0, sqrt(d)) = (0, {}), got {epsilon}",
            d.sqrt()
        )));
    }
    if !(n_constant > 0.0 && n_constant.is_finite()) {
        return Err(Error::InvalidInput(
            "step-count constant must be positive".into(),
        ));
    }
    let step_time = 1.0 / (DEFAULT_STEP_CONSTANT * p.lipschitz().sqrt());
    let delta = p.mu().sqrt() * step_time * step_time * epsilon / 16.0;
    let steps = (n_constant * (d / epsilon).ln() / (p.mu() * step_time * step_time)).ceil();
    Ok(ChainConfig {
        potential: p.clone(),
        step_time,
        steps: steps as u64,
        ode_tolerance: delta,
        epsilon,
        mode: Mode::Discretized,
        step_constant: DEFAULT_STEP_CONSTANT,
        seed,
        solver: SolverKind::Collocation,
        degree: 0,
    })
}

/// Gradient descent with fixed step `1/L` from the origin until
/// `|∇f(x)| <= tol`. Returns the point and the gradient evaluations spent.
pub fn find_minimizer(p: &Potential, tol: f64) -> Result<(DVector<f64>, u64)> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let step = 1.0 / p.lipschitz();
    let mut x = DVector::zeros(p.dim());
    let mut g = DVector::zeros(p.dim());
    for evals in 1..=MINIMIZER_ITERATION_CAP {
        p.gradient_into(&x, &mut g);
        if g.norm() <= tol {
            return Ok((x, evals));
        }
        x.axpy(-step, &g, 1.0);
    }
    Err(Error::ConvergenceFailure(format!(
        "gradient descent did not reach |grad| <= {tol:e} in {MINIMIZER_ITERATION_CAP} iterations"
    )))
}

/// Per-step gradient accounting for the amortized-cost claims.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GradientLedger {
    /// Gradient evaluations in each HMC step.
    pub per_step: Vec<u64>,
    /// `|v|` of the velocity drawn in each step.
    pub v0_norms: Vec<f64>,
    /// `|∇f(x)|` at the step's starting position.
    pub grad_norms: Vec<f64>,
}

impl GradientLedger {
    pub fn len(&self) -> usize {
        self.per_step.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_step.is_empty()
    }

    fn record(&mut self, outcome: &StepOutcome) {
        self.per_step.push(outcome.gradient_evaluations);
        self.v0_norms.push(outcome.v0_norm);
        self.grad_norms.push(outcome.grad_norm);
    }
}

/// One HMC update: the new position plus the step's accounting data.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub position: DVector<f64>,
    pub gradient_evaluations: u64,
    pub v0_norm: f64,
    pub grad_norm: f64,
}

/// The visited points of a finished chain, step 0 being the start.
#[derive(Clone, Debug)]
pub struct ChainTrajectory {
    points: DMatrix<f64>,
    pub ledger: GradientLedger,
    pub seed: u64,
}

impl ChainTrajectory {
    pub fn dim(&self) -> usize {
        self.points.nrows()
    }

    /// Number of HMC steps taken (`points` has one more column).
    pub fn num_steps(&self) -> usize {
        self.points.ncols() - 1
    }

    pub fn point(&self, k: usize) -> DVectorView<'_, f64> {
        self.points.column(k)
    }

    pub fn last_point(&self) -> DVector<f64> {
        self.points.column(self.points.ncols() - 1).into_owned()
    }

    /// Time series of coordinate `i` along the chain.
    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.points.row(i).iter().copied().collect()
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }
}

/// Tolerance standing in for "exactly solved" on non-quadratic targets.
fn ideal_tolerance(x: &DVector<f64>, v: &DVector<f64>) -> f64 {
    1e-12 * (1.0 + x.norm() + v.norm())
}

/// One HMC step with the velocity supplied by the caller.
///
/// Used directly for coupled comparisons that share randomness; [`hmc_step`]
/// draws the velocity from the chain's stream and delegates here.
pub fn hmc_step_given(
    config: &ChainConfig,
    x: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<StepOutcome> {
    let p = &config.potential;
    let grad0 = p.gradient(x)?;
    let grad_norm = grad0.norm();
    let v0_norm = v.norm();
    let s0 = PhaseState::new(x.clone(), v.clone())?;
    let t = config.step_time;
    let (state, solver_evals) = match config.solver {
        SolverKind::Exact => (exact_quadratic_flow(p, &s0, t)?, 0),
        SolverKind::Adaptive => {
            let delta = if config.mode == Mode::Discretized && config.ode_tolerance > 0.0 {
                config.ode_tolerance
            } else {
                ideal_tolerance(x, v)
            };
            let res = adaptive_reference_flow(p, &s0, t, delta)?;
            (res.state, res.gradient_evaluations)
        }
        SolverKind::Collocation => {
            let delta = config.ode_tolerance;
            let pieces = piece_count(v0_norm, grad_norm, p.lipschitz(), t, delta);
            let res = collocation_flow(p, &s0, t, delta, pieces, config.degree)?;
            (res.state, res.gradient_evaluations)
        }
    };
    Ok(StepOutcome {
        position: state.position,
        gradient_evaluations: 1 + solver_evals,
        v0_norm,
        grad_norm,
    })
}

/// One HMC step: draw `v ~ N(0, I)` from the chain's stream, flow for `T`.
pub fn hmc_step(config: &ChainConfig, x: &DVector<f64>, rng: &mut ChainRng) -> Result<StepOutcome> {
    let v = rng.normal_vector(config.potential.dim());
    hmc_step_given(config, x, &v)
}

/// Runs the chain on stream 0. Trajectories are pure functions of
/// `(config, seed)`.
pub fn run_chain(config: &ChainConfig) -> Result<ChainTrajectory> {
    run_chain_with_stream(config, 0)
}

/// Runs the chain keeping only the final point and the ledger, so long runs
/// need no trajectory storage. Draw-for-draw identical to
/// [`run_chain_with_stream`].
pub fn run_chain_endpoint(
    config: &ChainConfig,
    stream: u64,
) -> Result<(DVector<f64>, GradientLedger)> {
    config.validate()?;
    let p = &config.potential;
    let tol = 1e-8 * ((p.dim() as f64) * p.lipschitz()).sqrt();
    let (mut x, _) = find_minimizer(p, tol)?;
    let mut rng = ChainRng::new(config.seed, stream);
    let mut ledger = GradientLedger::default();
    for _ in 0..config.steps {
        let outcome = hmc_step(config, &x, &mut rng)?;
        ledger.record(&outcome);
        x = outcome.position;
    }
    Ok((x, ledger))
}

/// Runs the chain on RNG stream `(config.seed, stream)`; replicas and
/// parallel chains use distinct streams.
pub fn run_chain_with_stream(config: &ChainConfig, stream: u64) -> Result<ChainTrajectory> {
    config.validate()?;
    let p = &config.potential;
    let d = p.dim();
    let bytes = (d as u128) * (config.steps as u128 + 1) * 8;
    if bytes > TRAJECTORY_BYTE_CAP {
        return Err(Error::InvalidInput(format!(
            "trajectory of {} steps in dimension {d} would need {bytes} bytes; \
             lower `steps` or sample endpoints instead",
            config.steps
        )));
    }
    let n = config.steps as usize;
    let tol = 1e-8 * ((d as f64) * p.lipschitz()).sqrt();
    let (start, _) = find_minimizer(p, tol)?;
    let mut rng = ChainRng::new(config.seed, stream);
    let mut points = DMatrix::zeros(d, n + 1);
    points.set_column(0, &start);
    let mut ledger = GradientLedger::default();
    let mut x = start;
    for k in 1..=n {
        let outcome = hmc_step(config, &x, &mut rng)?;
        points.set_column(k, &outcome.position);
        ledger.record(&outcome);
        x = outcome.position;
    }
    Ok(ChainTrajectory {
        points,
        ledger,
        seed: config.seed,
    })
}

fn check_coupled_inputs(
    p: &Potential,
    x0: &DVector<f64>,
    y0: &DVector<f64>,
    v0: &DVector<f64>,
    t_max: f64,
) -> Result<f64> {
    for v in [x0, y0, v0] {
        if v.len() != p.dim() {
            return Err(Error::DimensionMismatch {
                expected: p.dim(),
                actual: v.len(),
            });
        }
    }
    let dist = (x0 - y0).norm();
    if dist == 0.0 {
        return Err(Error::DegenerateInput(
            "coupled flow needs two distinct starting positions".into(),
        ));
    }
    if t_max < 0.0 {
        return Err(Error::InvalidInput(
            "coupling time must be non-negative".into(),
        ));
    }
    let limit = 0.5 / p.lipschitz().sqrt();
    if t_max > limit * (1.0 + 1e-9) {
        return Err(Error::OutOfContract(format!(
            "coupled flow holds for t <= 1/(2 sqrt(L)) = {limit:e}, got {t_max:e}"
        )));
    }
    Ok(dist)
}

/// Two flows from `x0` and `y0` sharing the initial velocity `v0`
/// (synchronous coupling); returns both endpoint positions.
///
/// Quadratic targets use the closed form; otherwise each flow runs the
/// adaptive solver at `delta = 1e-12 |x0 - y0|`.
pub fn coupled_pair_flow(
    p: &Potential,
    x0: &DVector<f64>,
    y0: &DVector<f64>,
    v0: &DVector<f64>,
    t: f64,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let dist = check_coupled_inputs(p, x0, y0, v0, t)?;
    if p.is_quadratic() {
        let sx = exact_quadratic_flow(p, &PhaseState::new(x0.clone(), v0.clone())?, t)?;
        let sy = exact_quadratic_flow(p, &PhaseState::new(y0.clone(), v0.clone())?, t)?;
        return Ok((sx.position, sy.position));
    }
    let delta = 1e-12 * dist;
    let fx = adaptive_reference_flow(p, &PhaseState::new(x0.clone(), v0.clone())?, t, delta)?;
    let fy = adaptive_reference_flow(p, &PhaseState::new(y0.clone(), v0.clone())?, t, delta)?;
    Ok((fx.state.position, fy.state.position))
}

/// Squared coupled distance `|x(t) - y(t)|^2` at every grid time.
///
/// Same contract as [`coupled_pair_flow`]; the grid must be ascending,
/// non-negative, and stay within `1/(2 sqrt(L))`.
pub fn coupled_distance_profile(
    p: &Potential,
    x0: &DVector<f64>,
    y0: &DVector<f64>,
    v0: &DVector<f64>,
    t_grid: &[f64],
) -> Result<Vec<f64>> {
    if t_grid.is_empty() {
        return Err(Error::InvalidInput("empty time grid".into()));
    }
    if !t_grid.windows(2).all(|w| w[0] <= w[1]) || t_grid[0] < 0.0 {
        return Err(Error::InvalidInput(
            "time grid must be ascending and non-negative".into(),
        ));
    }
    let t_max = *t_grid.last().unwrap();
    let dist = check_coupled_inputs(p, x0, y0, v0, t_max)?;

    if let Some((eigs, basis, _)) = p.quadratic_parts() {
        // Equal initial velocities cancel mode by mode: the difference just
        // rotates as cos(omega t) in each eigendirection.
        let diff = x0 - y0;
        let delta_modes = match basis {
            None => diff,
            Some(q) => q.tr_mul(&diff),
        };
        return Ok(t_grid
            .iter()
            .map(|&t| {
                (0..eigs.len())
                    .map(|i| {
                        let c = (eigs[i].sqrt() * t).cos();
                        let v = delta_modes[i] * c;
                        v * v
                    })
                    .sum()
            })
            .collect());
    }

    if t_max == 0.0 {
        return Ok(vec![dist * dist; t_grid.len()]);
    }
    let delta = 1e-12 * dist;
    let (xs, _, _) = adaptive_profile(
        p,
        &PhaseState::new(x0.clone(), v0.clone())?,
        t_grid,
        delta,
        ADAPTIVE_STEP_CEILING,
    )?;
    let (ys, _, _) = adaptive_profile(
        p,
        &PhaseState::new(y0.clone(), v0.clone())?,
        t_grid,
        delta,
        ADAPTIVE_STEP_CEILING,
    )?;
    Ok(xs
        .iter()
        .zip(&ys)
        .map(|(a, b)| (&a.position - &b.position).norm_squared())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ideal_exact_config(p: Potential, step_time: f64, steps: u64, seed: u64) -> ChainConfig {
        let epsilon = 0.5 * (p.dim() as f64).sqrt();
        ChainConfig {
            potential: p,
            step_time,
            steps,
            ode_tolerance: 0.0,
            epsilon,
            mode: Mode::Ideal,
            step_constant: 2.0,
            seed,
            solver: SolverKind::Exact,
            degree: 0,
        }
    }

    #[test]
    fn minimizer_of_log_cosh_is_origin() {
        let p = Potential::log_cosh(3, 1.0, 5.0).unwrap();
        let (x, evals) = find_minimizer(&p, 1e-10).unwrap();
        assert!(x.norm() <= 1e-10 / p.mu());
        assert_eq!(evals, 1, "origin is already optimal");
    }

    #[test]
    fn minimizer_of_shifted_quadratic() {
        let p = Potential::quadratic_diagonal_centered(&[1.0, 4.0], &[2.5, -1.0]).unwrap();
        let tol = 1e-9;
        let (x, evals) = find_minimizer(&p, tol).unwrap();
        assert!((x - DVector::from_vec(vec![2.5, -1.0])).norm() <= tol / p.mu());
        assert!(evals > 1);
    }

    #[test]
    fn default_config_schedule_arithmetic() {
        let p = Potential::quadratic_diagonal(&[0.5, 1.0]).unwrap();
        let cfg = default_config(&p, 0.1, 7).unwrap();
        assert_relative_eq!(cfg.step_time, 6.25e-5, max_relative = 1e-15);
        assert_relative_eq!(
            cfg.ode_tolerance,
            p.mu().sqrt() * 2.44140625e-11,
            max_relative = 1e-12
        );
        assert_eq!(cfg.mode, Mode::Discretized);
        assert_eq!(cfg.solver, SolverKind::Collocation);
        cfg.validate().unwrap();
    }

    #[test]
    fn default_config_unit_log_case() {
        // kappa = 1 and d/eps = e make the log factor exactly 1,
        // so N = ceil(C_N / (mu T^2)) = 2 * 16000^2.
        let p = Potential::quadratic_diagonal(&[1.0]).unwrap();
        let eps = 1.0 / std::f64::consts::E;
        let cfg = default_config(&p, eps, 0).unwrap();
        assert_relative_eq!(cfg.steps as f64, 5.12e8, max_relative = 1e-8);
    }

    #[test]
    fn default_config_rejects_large_epsilon() {
        let p = Potential::quadratic_diagonal(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            default_config(&p, 10.0, 0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn config_invariants() {
        let p = Potential::log_cosh(2, 1.0, 4.0).unwrap();
        let mut cfg = ideal_exact_config(p, 0.1, 10, 0);
        cfg.solver = SolverKind::Collocation;
        assert!(cfg.validate().is_err(), "ideal mode cannot use collocation");

        cfg.mode = Mode::Discretized;
        cfg.ode_tolerance = 1e-10;
        assert!(
            cfg.validate().is_err(),
            "collocation beyond sqrt(L) T = 1/16000 is out of contract"
        );
        cfg.step_time = 1.0 / (16000.0 * 2.0);
        cfg.validate().unwrap();
    }

    #[test]
    fn step_from_minimizer_with_zero_velocity_is_fixed_point() {
        let p = Potential::quadratic_diagonal_centered(&[1.0, 3.0], &[0.5, -0.5]).unwrap();
        let cfg = ideal_exact_config(p, 0.3, 1, 0);
        let b = DVector::from_vec(vec![0.5, -0.5]);
        let out = hmc_step_given(&cfg, &b, &DVector::zeros(2)).unwrap();
        assert!((out.position - b).norm() <= 1e-15);
        assert_eq!(
            out.gradient_evaluations, 1,
            "exact flow needs only the probe"
        );
    }

    #[test]
    fn discretized_step_tracks_ideal_step() {
        let p = Potential::log_cosh(3, 1.0, 4.0).unwrap();
        let mut cfg = default_config(&p, 0.1, 3).unwrap();
        let delta = cfg.ode_tolerance;
        let x = DVector::from_vec(vec![0.4, -0.9, 1.2]);
        let v = DVector::from_vec(vec![1.0, 0.3, -0.7]);
        let disc = hmc_step_given(&cfg, &x, &v).unwrap();

        cfg.solver = SolverKind::Adaptive;
        cfg.ode_tolerance = delta / 100.0;
        let ideal = hmc_step_given(&cfg, &x, &v).unwrap();
        assert!(
            (disc.position - ideal.position).norm() <= delta,
            "discretized step strayed past delta"
        );
    }

    #[test]
    fn exact_step_coordinate_kernel_matches_closed_form() {
        // From a fixed position the exact-solver update of coordinate i is
        // Normal(x_i cos(omega_i T), sin^2(omega_i T) / omega_i^2).
        let eigs = [1.0, 4.0];
        let p = Potential::quadratic_diagonal(&eigs).unwrap();
        let cfg = ideal_exact_config(p, 0.3, 1, 0);
        let x = DVector::from_vec(vec![1.0, -2.0]);
        let n = 20_000;
        let mut rng = crate::rng::ChainRng::new(77, 0);
        let mut sums = [0.0f64; 2];
        let mut sq = [0.0f64; 2];
        for _ in 0..n {
            let out = hmc_step(&cfg, &x, &mut rng).unwrap();
            for i in 0..2 {
                sums[i] += out.position[i];
                sq[i] += out.position[i] * out.position[i];
            }
        }
        for i in 0..2 {
            let omega = eigs[i].sqrt();
            let expected_mean = x[i] * (omega * 0.3).cos();
            let expected_var = ((omega * 0.3).sin() / omega).powi(2);
            let mean = sums[i] / n as f64;
            let var = sq[i] / n as f64 - mean * mean;
            let se_mean = expected_var.sqrt() / (n as f64).sqrt();
            let se_var = expected_var * (2.0 / n as f64).sqrt();
            assert!(
                (mean - expected_mean).abs() <= 3.0 * se_mean,
                "coord {i}: mean {mean} vs {expected_mean}"
            );
            assert!(
                (var - expected_var).abs() <= 3.0 * se_var,
                "coord {i}: var {var} vs {expected_var}"
            );
        }
    }

    #[test]
    fn chains_are_deterministic_in_seed() {
        let p = Potential::quadratic_diagonal(&[1.0, 9.0]).unwrap();
        let cfg = ideal_exact_config(p, 0.25, 64, 99);
        let a = run_chain(&cfg).unwrap();
        let b = run_chain(&cfg).unwrap();
        assert_eq!(a.points(), b.points());
        assert_eq!(a.ledger, b.ledger);

        let other_stream = run_chain_with_stream(&cfg, 1).unwrap();
        assert_ne!(a.points(), other_stream.points());
    }

    #[test]
    fn zero_step_chain_sits_at_minimizer() {
        let p = Potential::log_cosh(2, 1.0, 2.0).unwrap();
        let cfg = ideal_exact_config(p, 0.1, 0, 5);
        let mut cfg = cfg;
        cfg.solver = SolverKind::Adaptive;
        let traj = run_chain(&cfg).unwrap();
        assert_eq!(traj.num_steps(), 0);
        assert!(traj.point(0).norm() <= 1e-7);
        assert!(traj.ledger.is_empty());
    }

    #[test]
    fn quarter_period_chain_draws_iid_normals() {
        // With T = pi/2 on the identity quadratic the cos term vanishes, so
        // successive points are iid N(0, 1).
        let p = Potential::quadratic_diagonal(&[1.0]).unwrap();
        let cfg = ideal_exact_config(p, std::f64::consts::FRAC_PI_2, 10_000, 42);
        let traj = run_chain(&cfg).unwrap();
        let xs = &traj.coordinate(0)[1..];
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 3.0 / n.sqrt(), "mean {mean} too far from 0");
        assert!(
            (var - 1.0).abs() <= 3.0 * (2.0 / n).sqrt(),
            "variance {var} too far from 1"
        );
    }

    #[test]
    fn ledger_lengths_match_steps() {
        let p = Potential::log_cosh(2, 1.0, 4.0).unwrap();
        let mut cfg = default_config(&p, 0.5, 11).unwrap();
        cfg.steps = 20;
        let traj = run_chain(&cfg).unwrap();
        assert_eq!(traj.ledger.len(), 20);
        assert_eq!(traj.ledger.v0_norms.len(), 20);
        assert_eq!(traj.ledger.grad_norms.len(), 20);
        assert!(traj.ledger.per_step.iter().all(|&g| g >= 2));
    }

    #[test]
    fn oversized_trajectory_is_rejected() {
        let p = Potential::quadratic_diagonal(&[1.0]).unwrap();
        let cfg = ideal_exact_config(p, 0.1, u64::MAX / 16, 0);
        assert!(matches!(run_chain(&cfg), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn coupled_flow_on_identity_contracts_like_cosine() {
        let p = Potential::quadratic_diagonal(&[1.0, 1.0]).unwrap();
        let x0 = DVector::from_vec(vec![1.0, -0.5]);
        let y0 = DVector::from_vec(vec![-0.2, 0.7]);
        let v0 = DVector::from_vec(vec![0.3, 0.9]);
        let d0 = (&x0 - &y0).norm();
        for t in [0.0, 0.2, 0.5] {
            let (x, y) = coupled_pair_flow(&p, &x0, &y0, &v0, t).unwrap();
            assert_relative_eq!((x - y).norm(), t.cos().abs() * d0, max_relative = 1e-12);
        }
        let (x, y) = coupled_pair_flow(&p, &x0, &y0, &v0, 0.0).unwrap();
        assert_eq!(x, x0);
        assert_eq!(y, y0);
    }

    #[test]
    fn coupled_flow_rejects_bad_inputs() {
        let p = Potential::quadratic_diagonal(&[1.0, 4.0]).unwrap();
        let x0 = DVector::from_vec(vec![1.0, 0.0]);
        let v0 = DVector::zeros(2);
        assert!(matches!(
            coupled_pair_flow(&p, &x0, &x0.clone(), &v0, 0.1),
            Err(Error::DegenerateInput(_))
        ));
        let y0 = DVector::from_vec(vec![0.0, 1.0]);
        assert!(matches!(
            coupled_pair_flow(&p, &x0, &y0, &v0, 0.3),
            Err(Error::OutOfContract(_))
        ));
    }

    #[test]
    fn coupled_profile_matches_endpoint_flow() {
        let p = Potential::log_cosh(2, 1.0, 4.0).unwrap();
        let x0 = DVector::from_vec(vec![0.8, -0.1]);
        let y0 = DVector::from_vec(vec![-0.4, 0.9]);
        let v0 = DVector::from_vec(vec![0.2, -1.1]);
        let grid = [0.05, 0.125, 0.25];
        let profile = coupled_distance_profile(&p, &x0, &y0, &v0, &grid).unwrap();
        let (x, y) = coupled_pair_flow(&p, &x0, &y0, &v0, 0.25).unwrap();
        assert_relative_eq!(profile[2], (x - y).norm_squared(), max_relative = 1e-9);
    }

    #[test]
    fn coupled_log_cosh_contraction_bound_holds() {
        let p = Potential::log_cosh(2, 1.0, 100.0).unwrap();
        let t = 0.5 / 10.0;
        let mut rng = ChainRng::new(1234, 0);
        let bound = 1.0 - p.mu() / 4.0 * t * t + 1e-6;
        for _ in 0..100 {
            let x0 = rng.normal_vector(2);
            let y0 = rng.normal_vector(2);
            if (&x0 - &y0).norm() < 0.2 {
                continue;
            }
            let v0 = rng.normal_vector(2);
            let d0 = (&x0 - &y0).norm_squared();
            let (x, y) = coupled_pair_flow(&p, &x0, &y0, &v0, t).unwrap();
            let ratio = (x - y).norm_squared() / d0;
            assert!(ratio <= bound, "contraction violated: {ratio} > {bound}");
        }
    }
}
