//! Estimators and closed forms that turn chain output into quantitative
//! checks: contraction reports, spectral-gap and autocorrelation bounds,
//! Gaussian Wasserstein distances, relaxation-time and gradient-cost scaling.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::chain::{
    coupled_distance_profile, default_config_with, find_minimizer, run_chain_endpoint,
    run_chain_with_stream, ChainConfig, GradientLedger, Mode, SolverKind,
};
use crate::error::{Error, Result};
use crate::potentials::Potential;
use crate::rng::ChainRng;

/// Batches used for batch-means standard errors.
const BATCH_COUNT: usize = 32;

/// Lag-1 autocorrelation of a scalar chain with a batch-means standard error.
#[derive(Clone, Debug)]
pub struct AutocorrEstimate {
    pub lag1: f64,
    pub std_err: f64,
    pub n_samples: usize,
    pub burn_in: usize,
}

impl AutocorrEstimate {
    /// Relaxation-time estimate `1 / (1 - lag1)`.
    pub fn relaxation_estimate(&self) -> f64 {
        1.0 / (1.0 - self.lag1)
    }
}

/// Per-grid-point worst coupled contraction ratio against `1 - (mu/4) t^2`.
#[derive(Clone, Debug)]
pub struct ContractionReport {
    pub t_grid: Vec<f64>,
    /// Max over pairs of `|x(t)-y(t)|^2 / |x0-y0|^2` at each grid time.
    pub worst_ratio: Vec<f64>,
    pub bound: Vec<f64>,
    pub pairs_tested: usize,
}

impl ContractionReport {
    /// Largest amount by which any grid point exceeds its bound.
    pub fn max_violation(&self) -> f64 {
        self.worst_ratio
            .iter()
            .zip(&self.bound)
            .map(|(r, b)| r - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn holds(&self, slack: f64) -> bool {
        self.max_violation() <= slack
    }
}

/// Two-sided coupled-distance sandwich `1/2 <= ratio^2 <= 2` over the grid.
#[derive(Clone, Debug)]
pub struct CrudeBoundReport {
    pub t_grid: Vec<f64>,
    pub min_ratio: Vec<f64>,
    pub max_ratio: Vec<f64>,
    pub pairs_tested: usize,
}

impl CrudeBoundReport {
    pub fn holds(&self, slack: f64) -> bool {
        self.min_ratio.iter().all(|&r| r >= 0.5 - slack)
            && self.max_ratio.iter().all(|&r| r <= 2.0 + slack)
    }
}

/// Empirical endpoint moments of replicated chains against the Gaussian target.
#[derive(Clone, Debug)]
pub struct W2Report {
    pub empirical_mean: DVector<f64>,
    pub empirical_cov: DMatrix<f64>,
    pub w2: f64,
    /// The guarantee under test: `epsilon / sqrt(mu)`.
    pub target_bound: f64,
    pub replicas: usize,
    pub steps: u64,
}

impl W2Report {
    pub fn within_bound(&self) -> bool {
        self.w2 <= self.target_bound
    }
}

/// Measurements against condition numbers with a fitted log-log exponent.
#[derive(Clone, Debug)]
pub struct ScalingReport {
    pub kappas: Vec<f64>,
    pub measurements: Vec<f64>,
    pub fitted_exponent: f64,
    pub fit_residual: f64,
}

/// Closed-form spectral gaps of the two-mode Gaussian chain.
#[derive(Clone, Copy, Debug)]
pub struct GapBounds {
    /// `1 - |cos(T sqrt(mu))|`: the slow coordinate's gap.
    pub gap_slow: f64,
    /// `1 - |cos(T sqrt(L))|`: the fast coordinate's gap.
    pub gap_fast: f64,
    /// `2 c^2 kappa`, which `1/gap_slow` always dominates.
    pub relaxation_lower: f64,
}

/// Lag-1 sample autocorrelation after discarding `burn_in` entries.
///
/// The point estimate uses the whole post-burn-in series; the standard error
/// comes from batch means over 32 equal batches.
pub fn lag1_autocorrelation(samples: &[f64], burn_in: usize) -> Result<AutocorrEstimate> {
    let post = samples.get(burn_in..).unwrap_or(&[]);
    if post.len() < 1000 {
        return Err(Error::TooFewSamples {
            needed: 1000,
            got: post.len(),
        });
    }
    let lag1 = lag1_of(post);
    let batch_len = post.len() / BATCH_COUNT;
    let batch_vals: Vec<f64> = (0..BATCH_COUNT)
        .map(|b| lag1_of(&post[b * batch_len..(b + 1) * batch_len]))
        .collect();
    let bmean = batch_vals.iter().sum::<f64>() / BATCH_COUNT as f64;
    let bvar = batch_vals
        .iter()
        .map(|v| (v - bmean) * (v - bmean))
        .sum::<f64>()
        / (BATCH_COUNT - 1) as f64;
    Ok(AutocorrEstimate {
        lag1,
        std_err: (bvar / BATCH_COUNT as f64).sqrt(),
        n_samples: post.len(),
        burn_in,
    })
}

fn lag1_of(z: &[f64]) -> f64 {
    let n = z.len();
    let mean = z.iter().sum::<f64>() / n as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        let c = z[i] - mean;
        den += c * c;
        if i + 1 < n {
            num += c * (z[i + 1] - mean);
        }
    }
    num / den
}

/// Exact spectral-gap quantities of the `diag(mu, L)` Gaussian chain run at
/// step size `T = 1/(c sqrt(L))`.
pub fn gaussian_chain_exact_gap(mu: f64, lipschitz: f64, c: f64) -> Result<GapBounds> {
    if !(c > 0.0 && mu > 0.0 && lipschitz >= mu) {
        return Err(Error::InvalidInput(
            "need c > 0 and 0 < mu <= lipschitz".into(),
        ));
    }
    let step_time = 1.0 / (c * lipschitz.sqrt());
    Ok(GapBounds {
        gap_slow: 1.0 - (step_time * mu.sqrt()).cos().abs(),
        gap_fast: 1.0 - (step_time * lipschitz.sqrt()).cos().abs(),
        relaxation_lower: 2.0 * c * c * (lipschitz / mu),
    })
}

/// Uniform grid `0, t_max/points, ..., t_max` (one leading zero row).
pub fn uniform_time_grid(t_max: f64, points: usize) -> Vec<f64> {
    (0..=points)
        .map(|j| t_max * j as f64 / points as f64)
        .collect()
}

/// Per-pair sampling plus coupled profiles; returns elementwise
/// (max, min) squared ratios over all pairs.
fn coupled_ratio_sweep(
    p: &Potential,
    pairs: usize,
    t_grid: &[f64],
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if pairs == 0 {
        return Err(Error::InvalidInput("need at least one coupled pair".into()));
    }
    let limit = 0.5 / p.lipschitz().sqrt();
    if t_grid.iter().any(|&t| t < 0.0 || t > limit * (1.0 + 1e-9)) {
        return Err(Error::OutOfContract(format!(
            "contraction grid must stay inside [0, 1/(2 sqrt(L))] = [0, {limit:e}]"
        )));
    }
    let d = p.dim();
    let scale = 1.0 / p.mu().sqrt();
    // Nearly coincident pairs push the coupled tolerance (relative to
    // |x0-y0|) below the f64 round-off plateau of the reference flow;
    // resample those.
    let min_sep = 0.35 * (d as f64).sqrt() * scale;
    let profiles: Vec<Vec<f64>> = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChainRng::new(seed, i as u64);
            let (x0, y0) = loop {
                let x0 = rng.normal_vector(d) * scale;
                let y0 = rng.normal_vector(d) * scale;
                if (&x0 - &y0).norm() >= min_sep {
                    break (x0, y0);
                }
            };
            let v0 = rng.normal_vector(d);
            let d0 = (&x0 - &y0).norm_squared();
            coupled_distance_profile(p, &x0, &y0, &v0, t_grid)
                .map(|dists| dists.into_iter().map(|ds| ds / d0).collect::<Vec<f64>>())
        })
        .collect::<Result<_>>()?;
    let mut max_ratio = vec![f64::NEG_INFINITY; t_grid.len()];
    let mut min_ratio = vec![f64::INFINITY; t_grid.len()];
    for profile in &profiles {
        for (j, &r) in profile.iter().enumerate() {
            max_ratio[j] = max_ratio[j].max(r);
            min_ratio[j] = min_ratio[j].min(r);
        }
    }
    Ok((max_ratio, min_ratio))
}

/// Worst coupled squared ratio per grid time versus the `1 - (mu/4) t^2` bound.
///
/// Positions are drawn from `N(0, I/mu)`, velocities from `N(0, I)`; both
/// flows share the velocity.
pub fn contraction_sweep(
    p: &Potential,
    pairs: usize,
    t_grid: &[f64],
    seed: u64,
) -> Result<ContractionReport> {
    let (worst_ratio, _) = coupled_ratio_sweep(p, pairs, t_grid, seed)?;
    let bound = t_grid.iter().map(|&t| 1.0 - p.mu() / 4.0 * t * t).collect();
    Ok(ContractionReport {
        t_grid: t_grid.to_vec(),
        worst_ratio,
        bound,
        pairs_tested: pairs,
    })
}

/// Two-sided sandwich check on 64 grid times up to `1/(2 sqrt(L))`
/// (plus the trivial `t = 0` row).
pub fn crude_bound_sweep(p: &Potential, pairs: usize, seed: u64) -> Result<CrudeBoundReport> {
    let t_grid = uniform_time_grid(0.5 / p.lipschitz().sqrt(), 64);
    let (max_ratio, min_ratio) = coupled_ratio_sweep(p, pairs, &t_grid, seed)?;
    Ok(CrudeBoundReport {
        t_grid,
        min_ratio,
        max_ratio,
        pairs_tested: pairs,
    })
}

/// Both sweeps from one pass over the same sampled pairs.
pub fn contraction_and_crude_sweep(
    p: &Potential,
    pairs: usize,
    t_grid: &[f64],
    seed: u64,
) -> Result<(ContractionReport, CrudeBoundReport)> {
    let (max_ratio, min_ratio) = coupled_ratio_sweep(p, pairs, t_grid, seed)?;
    let bound = t_grid.iter().map(|&t| 1.0 - p.mu() / 4.0 * t * t).collect();
    Ok((
        ContractionReport {
            t_grid: t_grid.to_vec(),
            worst_ratio: max_ratio.clone(),
            bound,
            pairs_tested: pairs,
        },
        CrudeBoundReport {
            t_grid: t_grid.to_vec(),
            min_ratio,
            max_ratio,
            pairs_tested: pairs,
        },
    ))
}

fn check_square_symmetric(c: &DMatrix<f64>, dim: usize) -> Result<()> {
    if c.nrows() != dim || c.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: c.nrows().max(c.ncols()),
        });
    }
    if !c.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("non-finite covariance entry".into()));
    }
    let asym = (c - c.transpose()).amax();
    if asym > 1e-8 * c.amax().max(1.0) {
        return Err(Error::InvalidInput(format!(
            "covariance must be symmetric (asymmetry {asym:e})"
        )));
    }
    Ok(())
}

fn psd_eigen(c: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let eig = ((c + c.transpose()) * 0.5).symmetric_eigen();
    let min = eig.eigenvalues.min();
    if min < -1e-8 {
        return Err(Error::NotPositiveSemiDefinite {
            min_eigenvalue: min,
        });
    }
    Ok((eig.eigenvectors, eig.eigenvalues))
}

fn lex_less(m1: &DVector<f64>, c1: &DMatrix<f64>, m2: &DVector<f64>, c2: &DMatrix<f64>) -> bool {
    let a = m1.iter().chain(c1.iter());
    let b = m2.iter().chain(c2.iter());
    for (x, y) in a.zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Closed-form 2-Wasserstein distance between Gaussians:
/// `sqrt(|m1-m2|^2 + tr(c1 + c2 - 2 (c2^{1/2} c1 c2^{1/2})^{1/2}))`.
///
/// Matrix square roots go through symmetric eigendecompositions with
/// eigenvalues clamped at zero; round-off below -1e-8 is rejected as
/// non-PSD input. Arguments are ordered canonically first, which makes the
/// distance exactly symmetric.
pub fn gaussian_w2(
    mean1: &DVector<f64>,
    cov1: &DMatrix<f64>,
    mean2: &DVector<f64>,
    cov2: &DMatrix<f64>,
) -> Result<f64> {
    let d = mean1.len();
    if mean2.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: mean2.len(),
        });
    }
    if !mean1.iter().chain(mean2.iter()).all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("non-finite mean entry".into()));
    }
    check_square_symmetric(cov1, d)?;
    check_square_symmetric(cov2, d)?;
    if mean1 == mean2 && cov1 == cov2 {
        // The square root below would amplify the O(eps) Bures residual of
        // identical inputs to O(sqrt(eps)); the metric axiom wants exactly 0.
        psd_eigen(cov1)?;
        return Ok(0.0);
    }
    let (ma, ca, mb, cb) = if lex_less(mean2, cov2, mean1, cov1) {
        (mean2, cov2, mean1, cov1)
    } else {
        (mean1, cov1, mean2, cov2)
    };
    let (_, eigs_a) = psd_eigen(ca)?;
    let (vecs_b, eigs_b) = psd_eigen(cb)?;
    let sqrt_b =
        &vecs_b * DMatrix::from_diagonal(&eigs_b.map(|l| l.max(0.0).sqrt())) * vecs_b.transpose();
    let inner = &sqrt_b * ca * &sqrt_b;
    let inner_eig = ((&inner + inner.transpose()) * 0.5).symmetric_eigen();
    let cross: f64 = inner_eig
        .eigenvalues
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .sum::<f64>()
        * 2.0;
    let bures = (eigs_a.sum() + eigs_b.sum() - cross).max(0.0);
    Ok(((ma - mb).norm_squared() + bures).sqrt())
}

/// The closed-form transition law of the exact-solver chain on a quadratic
/// target: per eigenmode with frequency `omega = sqrt(a)`, one step maps
/// `y -> cos(omega T) y + sigma |sin(omega T)| xi` with `sigma = 1/omega`.
///
/// Because each mode is AR(1), the `n`-step kernel is available in closed
/// form too: coefficient `cos^n` and noise sd `sigma sqrt(1 - cos^{2n})`.
/// Sampling it draws `d` Gaussians per endpoint instead of `d` per step.
#[derive(Clone, Debug)]
pub struct GaussianHmcKernel {
    cosines: Vec<f64>,
    sines: Vec<f64>,
    sigmas: Vec<f64>,
    basis: Option<DMatrix<f64>>,
    center: DVector<f64>,
}

impl GaussianHmcKernel {
    pub fn new(p: &Potential, step_time: f64) -> Result<Self> {
        let (eigs, basis, center) = p.quadratic_parts().ok_or_else(|| {
            Error::UnsupportedMethod("closed-form kernel requires a quadratic target".into())
        })?;
        let mut cosines = Vec::with_capacity(eigs.len());
        let mut sines = Vec::with_capacity(eigs.len());
        let mut sigmas = Vec::with_capacity(eigs.len());
        for &a in eigs.iter() {
            let omega = a.sqrt();
            let (s, c) = (omega * step_time).sin_cos();
            cosines.push(c);
            sines.push(s);
            sigmas.push(1.0 / omega);
        }
        Ok(Self {
            cosines,
            sines,
            sigmas,
            basis: basis.cloned(),
            center: center.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// One-step AR(1) coefficient of mode `i`: `cos(omega_i T)`.
    pub fn mode_coefficient(&self, i: usize) -> f64 {
        self.cosines[i]
    }

    /// One-step innovation sd of mode `i`: `sigma_i |sin(omega_i T)|`.
    pub fn mode_noise_sd(&self, i: usize) -> f64 {
        self.sigmas[i] * self.sines[i].abs()
    }

    /// `(coefficient, noise sd)` of the `n`-step composition per mode,
    /// computed stably via `log1p(-sin^2)`.
    pub fn composed_modes(&self, n: u64) -> Vec<(f64, f64)> {
        (0..self.dim())
            .map(|i| {
                let c = self.cosines[i];
                let s = self.sines[i];
                let log_c2 = (-s * s).ln_1p();
                let coeff_mag = (0.5 * n as f64 * log_c2).exp();
                let sign = if c < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
                let var_factor = -(n as f64 * log_c2).exp_m1();
                (
                    sign * coeff_mag,
                    self.sigmas[i] * var_factor.max(0.0).sqrt(),
                )
            })
            .collect()
    }

    /// Draws `x^{(n)}` given `x^{(0)} = start`, consuming `d` Gaussians in
    /// mode order.
    pub fn sample_endpoint(
        &self,
        start: &DVector<f64>,
        modes: &[(f64, f64)],
        rng: &mut ChainRng,
    ) -> DVector<f64> {
        let centered = start - &self.center;
        let mut y = match &self.basis {
            None => centered,
            Some(q) => q.tr_mul(&centered),
        };
        for (i, &(coeff, sd)) in modes.iter().enumerate() {
            y[i] = coeff * y[i] + sd * rng.standard_normal();
        }
        match &self.basis {
            None => y + &self.center,
            Some(q) => q * y + &self.center,
        }
    }
}

/// Options for [`w2_convergence_experiment`].
#[derive(Clone, Copy, Debug)]
pub struct W2Options {
    pub solver: SolverKind,
    /// Step-count constant `C_N`.
    pub n_constant: f64,
    /// Override the scheduled number of steps; mainly for trend checks and
    /// for making non-exact solver runs affordable.
    pub steps_override: Option<u64>,
}

impl Default for W2Options {
    fn default() -> Self {
        Self {
            solver: SolverKind::Exact,
            n_constant: 2.0,
            steps_override: None,
        }
    }
}

/// Runs `replicas` independent chains from the minimizer and compares the
/// empirical endpoint moments with the Gaussian target's exact moments.
///
/// With the exact solver the endpoint law is sampled directly from the
/// composed `n`-step kernel (same statistics, no per-step work), which is
/// what makes the schedule's full `N` affordable. Other solvers run every
/// step; cap `N` via `steps_override` when doing so.
pub fn w2_convergence_experiment(
    p: &Potential,
    epsilon: f64,
    replicas: usize,
    seed: u64,
    options: &W2Options,
) -> Result<W2Report> {
    if !p.is_quadratic() {
        return Err(Error::UnsupportedMethod(
            "the Wasserstein experiment needs the Gaussian target's closed-form moments".into(),
        ));
    }
    if replicas < 2 {
        return Err(Error::InvalidInput("need at least two replicas".into()));
    }
    let mut config = default_config_with(p, epsilon, seed, options.n_constant)?;
    config.solver = options.solver;
    if options.solver == SolverKind::Exact {
        config.mode = Mode::Ideal;
        config.ode_tolerance = 0.0;
    }
    if let Some(n) = options.steps_override {
        config.steps = n;
    }
    config.validate()?;

    let endpoints: Vec<DVector<f64>> = if options.solver == SolverKind::Exact {
        let kernel = GaussianHmcKernel::new(p, config.step_time)?;
        let modes = kernel.composed_modes(config.steps);
        let tol = 1e-8 * ((p.dim() as f64) * p.lipschitz()).sqrt();
        let (start, _) = find_minimizer(p, tol)?;
        (0..replicas)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChainRng::new(seed, r as u64);
                kernel.sample_endpoint(&start, &modes, &mut rng)
            })
            .collect()
    } else {
        (0..replicas)
            .into_par_iter()
            .map(|r| run_chain_endpoint(&config, r as u64).map(|(x, _)| x))
            .collect::<Result<_>>()?
    };

    let (empirical_mean, empirical_cov) = endpoint_moments(&endpoints);
    let target_mean = p.minimizer();
    let target_cov = p.quadratic_covariance().expect("quadratic target");
    let w2 = gaussian_w2(&empirical_mean, &empirical_cov, &target_mean, &target_cov)?;
    Ok(W2Report {
        empirical_mean,
        empirical_cov,
        w2,
        target_bound: epsilon / p.mu().sqrt(),
        replicas,
        steps: config.steps,
    })
}

fn endpoint_moments(points: &[DVector<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    let n = points.len();
    let d = points[0].len();
    let mut mean = DVector::zeros(d);
    for x in points {
        mean += x;
    }
    mean /= n as f64;
    let mut cov = DMatrix::zeros(d, d);
    for x in points {
        let c = x - &mean;
        cov.ger(1.0 / (n - 1) as f64, &c, &c, 1.0);
    }
    (mean, cov)
}

/// Ledger summary for the amortized-cost claims.
#[derive(Clone, Copy, Debug)]
pub struct GradientStats {
    /// Mean gradient evaluations per HMC step.
    pub mean_per_step: f64,
    /// Mean of `|∇f(x^{(k-1)})|^2`, to be reported against `L d`.
    pub mean_grad_norm_sq: f64,
}

pub fn amortized_gradient_stats(ledger: &GradientLedger) -> Result<GradientStats> {
    if ledger.is_empty() {
        return Err(Error::InvalidInput("empty gradient ledger".into()));
    }
    let n = ledger.len() as f64;
    Ok(GradientStats {
        mean_per_step: ledger.per_step.iter().sum::<u64>() as f64 / n,
        mean_grad_norm_sq: ledger.grad_norms.iter().map(|g| g * g).sum::<f64>() / n,
    })
}

/// Least-squares slope of `log y` against `log x` plus the RMS residual.
pub fn fit_log_log(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidInput(
            "log-log fit needs two or more matched points".into(),
        ));
    }
    if xs
        .iter()
        .chain(ys.iter())
        .any(|&v| !v.is_finite() || v <= 0.0)
    {
        return Err(Error::InvalidInput(
            "log-log fit needs positive data".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput(
            "log-log fit needs distinct x values".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok((slope, residual))
}

/// Measures the relaxation time `1/(1 - lag1)` of the slow coordinate on
/// `diag(1, kappa)` Gaussian targets at `T = 1/(c sqrt(L))` and fits its
/// log-log slope against `kappa`.
pub fn relaxation_scaling_experiment(
    kappas: &[f64],
    c: f64,
    samples_per_chain: usize,
    seed: u64,
) -> Result<ScalingReport> {
    if kappas.len() < 3 {
        return Err(Error::InvalidInput(
            "relaxation scaling needs at least three condition numbers".into(),
        ));
    }
    if kappas.iter().any(|&k| !k.is_finite() || k < 1.0) {
        return Err(Error::InvalidInput("condition numbers must be >= 1".into()));
    }
    if !c.is_finite() || c <= 0.0 {
        return Err(Error::InvalidInput("step constant must be positive".into()));
    }
    let measurements: Vec<f64> = kappas
        .par_iter()
        .enumerate()
        .map(|(i, &kappa)| {
            let p = Potential::quadratic_diagonal(&[1.0, kappa])?;
            let burn_in = (10.0 * (2.0 * c * c * kappa).ceil()) as usize;
            let config = ChainConfig {
                potential: p,
                step_time: 1.0 / (c * kappa.sqrt()),
                steps: (burn_in + samples_per_chain) as u64,
                ode_tolerance: 0.0,
                epsilon: 0.5,
                mode: Mode::Ideal,
                step_constant: c,
                seed,
                solver: SolverKind::Exact,
                degree: 0,
            };
            let traj = run_chain_with_stream(&config, i as u64)?;
            let est = lag1_autocorrelation(&traj.coordinate(0), burn_in)?;
            Ok(est.relaxation_estimate())
        })
        .collect::<Result<_>>()?;
    let (fitted_exponent, fit_residual) = fit_log_log(kappas, &measurements)?;
    Ok(ScalingReport {
        kappas: kappas.to_vec(),
        measurements,
        fitted_exponent,
        fit_residual,
    })
}
