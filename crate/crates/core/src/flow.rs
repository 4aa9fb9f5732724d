//! Solvers for the Hamiltonian flow `x'' = -∇f(x)` over a time span.
//!
//! Three routes with different guarantees:
//! - [`exact_quadratic_flow`]: closed form per eigenmode, quadratic targets
//!   only, zero gradient evaluations;
//! - [`adaptive_reference_flow`]: velocity Verlet with step doubling and
//!   Richardson certification, works on any target and serves as the
//!   numerical stand-in for the exactly-solved flow;
//! - [`collocation_flow`]: Picard iteration on a piecewise-polynomial
//!   representation of the acceleration, valid while `sqrt(L)·t <= 1/16000`,
//!   with the gradient budget the chain ledger accounts for.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::potentials::Potential;

/// Hard ceiling on leapfrog substeps in the adaptive reference flow.
pub const ADAPTIVE_STEP_CEILING: usize = 1 << 24;

/// Contract boundary of the collocation solver: `sqrt(L) * t` may not exceed it.
pub const COLLOCATION_TIME_LIMIT: f64 = 1.0 / 16000.0;

/// A point in phase space: position `x` and velocity `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseState {
    pub position: DVector<f64>,
    pub velocity: DVector<f64>,
}

impl PhaseState {
    pub fn new(position: DVector<f64>, velocity: DVector<f64>) -> Result<Self> {
        if position.len() != velocity.len() {
            return Err(Error::DimensionMismatch {
                expected: position.len(),
                actual: velocity.len(),
            });
        }
        if !position
            .iter()
            .chain(velocity.iter())
            .all(|v| v.is_finite())
        {
            return Err(Error::InvalidInput("non-finite phase coordinate".into()));
        }
        Ok(Self { position, velocity })
    }

    pub fn dim(&self) -> usize {
        self.position.len()
    }

    /// Same position, negated velocity.
    pub fn reversed(&self) -> Self {
        Self {
            position: self.position.clone(),
            velocity: -&self.velocity,
        }
    }
}

/// Outcome of a numerical flow computation.
#[derive(Clone, Debug)]
pub struct FlowResult {
    pub state: PhaseState,
    pub gradient_evaluations: u64,
    /// Bound on the final position error when the method certifies one.
    pub certified_error: Option<f64>,
}

fn check_state(p: &Potential, s: &PhaseState) -> Result<()> {
    if s.position.len() != p.dim() || s.velocity.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            actual: s.position.len().max(s.velocity.len()),
        });
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite time {t}")));
    }
    Ok(())
}

/// Closed-form flow for quadratic targets.
///
/// In the eigenbasis of the Hessian each mode with eigenvalue `a = omega^2`
/// rotates independently:
/// `y(t) = y0 cos(omega t) + w0 sin(omega t)/omega`,
/// `w(t) = -y0 omega sin(omega t) + w0 cos(omega t)`.
pub fn exact_quadratic_flow(p: &Potential, s0: &PhaseState, t: f64) -> Result<PhaseState> {
    check_state(p, s0)?;
    check_time(t)?;
    let (eigs, basis, center) = p.quadratic_parts().ok_or_else(|| {
        Error::UnsupportedMethod("closed-form flow requires a quadratic target".into())
    })?;
    let centered = &s0.position - center;
    let (mut y, mut w) = match basis {
        None => (centered, s0.velocity.clone()),
        Some(q) => (q.tr_mul(&centered), q.tr_mul(&s0.velocity)),
    };
    for i in 0..eigs.len() {
        let omega = eigs[i].sqrt();
        let (s, c) = (omega * t).sin_cos();
        let (yi, wi) = (y[i], w[i]);
        y[i] = yi * c + wi * s / omega;
        w[i] = -yi * omega * s + wi * c;
    }
    let (position, velocity) = match basis {
        None => (y + center, w),
        Some(q) => (q * y + center, q * w),
    };
    Ok(PhaseState { position, velocity })
}

/// Leapfrog integration state with the gradient at the current position cached.
struct LeapfrogState {
    x: DVector<f64>,
    v: DVector<f64>,
    g: DVector<f64>,
}

impl LeapfrogState {
    fn start(p: &Potential, s0: &PhaseState) -> (Self, u64) {
        let mut g = DVector::zeros(s0.dim());
        p.gradient_into(&s0.position, &mut g);
        (
            Self {
                x: s0.position.clone(),
                v: s0.velocity.clone(),
                g,
            },
            1,
        )
    }

    fn snapshot(&self) -> PhaseState {
        PhaseState {
            position: self.x.clone(),
            velocity: self.v.clone(),
        }
    }

    /// Kick-drift-kick steps of size `h`; requires `self.g = ∇f(self.x)`.
    fn advance(&mut self, p: &Potential, h: f64, steps: usize) -> u64 {
        for _ in 0..steps {
            self.v.axpy(-0.5 * h, &self.g, 1.0);
            self.x.axpy(h, &self.v, 1.0);
            p.gradient_into(&self.x, &mut self.g);
            self.v.axpy(-0.5 * h, &self.g, 1.0);
        }
        steps as u64
    }
}

/// Velocity-Verlet flow with a fixed step count.
///
/// Exactly time-reversible; second-order accurate; `steps + 1` gradient
/// evaluations. No error certificate -- use [`adaptive_reference_flow`]
/// when one is needed.
pub fn leapfrog_flow(p: &Potential, s0: &PhaseState, t: f64, steps: usize) -> Result<FlowResult> {
    check_state(p, s0)?;
    check_time(t)?;
    if steps == 0 {
        return Err(Error::InvalidInput(
            "leapfrog needs at least one step".into(),
        ));
    }
    let (mut st, mut evals) = LeapfrogState::start(p, s0);
    evals += st.advance(p, t / steps as f64, steps);
    Ok(FlowResult {
        state: st.snapshot(),
        gradient_evaluations: evals,
        certified_error: None,
    })
}

/// Step budget per grid segment at the coarsest refinement level, sized so
/// doubling the level exactly doubles every segment's count.
fn segment_base_steps(times: &[f64], n0: usize) -> Vec<usize> {
    let span = *times.last().expect("non-empty time grid");
    let mut out = Vec::with_capacity(times.len());
    let mut t_prev = 0.0;
    for &tj in times {
        let seg = tj - t_prev;
        if seg > 0.0 {
            out.push(((n0 as f64) * seg / span).ceil().max(1.0) as usize);
        } else {
            out.push(0);
        }
        t_prev = tj;
    }
    out
}

/// Runs one leapfrog pass from time 0, landing exactly on each requested
/// time and recording the state there. Segment `j` takes
/// `base_steps[j] * multiplier` steps.
fn leapfrog_at_times(
    p: &Potential,
    s0: &PhaseState,
    times: &[f64],
    base_steps: &[usize],
    multiplier: usize,
) -> (Vec<PhaseState>, u64) {
    if base_steps.iter().all(|&s| s == 0) {
        return (vec![s0.clone(); times.len()], 0);
    }
    let (mut st, mut evals) = LeapfrogState::start(p, s0);
    let mut out = Vec::with_capacity(times.len());
    let mut t_prev = 0.0;
    for (&tj, &base) in times.iter().zip(base_steps) {
        let seg = tj - t_prev;
        if base > 0 {
            let steps = base * multiplier;
            evals += st.advance(p, seg / steps as f64, steps);
        }
        out.push(st.snapshot());
        t_prev = tj;
    }
    (out, evals)
}

fn extrapolate_pair(coarse: &[PhaseState], fine: &[PhaseState]) -> Vec<PhaseState> {
    coarse
        .iter()
        .zip(fine)
        .map(|(c, f)| PhaseState {
            position: (&f.position * 4.0 - &c.position) / 3.0,
            velocity: (&f.velocity * 4.0 - &c.velocity) / 3.0,
        })
        .collect()
}

/// Doubles the leapfrog step count and Richardson-extrapolates until two
/// successive extrapolants agree to `delta / 10` at every requested time.
pub(crate) fn adaptive_profile(
    p: &Potential,
    s0: &PhaseState,
    times: &[f64],
    delta: f64,
    ceiling: usize,
) -> Result<(Vec<PhaseState>, u64, f64)> {
    debug_assert!(times.windows(2).all(|w| w[0] <= w[1]));
    debug_assert!(times.first().is_some_and(|&t| t >= 0.0));
    let base = segment_base_steps(times, 16);
    let base_total: usize = base.iter().sum();
    let (coarse, e0) = leapfrog_at_times(p, s0, times, &base, 1);
    let (fine, e1) = leapfrog_at_times(p, s0, times, &base, 2);
    let mut evals = e0 + e1;
    let mut coarse = coarse;
    let mut fine = fine;
    let mut prev = extrapolate_pair(&coarse, &fine);
    let mut multiplier = 4usize;
    loop {
        if base_total.saturating_mul(multiplier) > ceiling {
            return Err(Error::ConvergenceFailure(format!(
                "adaptive flow did not certify delta={delta:e} within {ceiling} substeps"
            )));
        }
        let (next, e) = leapfrog_at_times(p, s0, times, &base, multiplier);
        evals += e;
        coarse = fine;
        fine = next;
        let current = extrapolate_pair(&coarse, &fine);
        let diff = current
            .iter()
            .zip(&prev)
            .map(|(a, b)| (&a.position - &b.position).norm())
            .fold(0.0f64, f64::max);
        if !diff.is_finite() {
            return Err(Error::ConvergenceFailure(
                "adaptive flow produced non-finite state".into(),
            ));
        }
        if diff <= delta / 10.0 {
            return Ok((current, evals, diff.min(delta)));
        }
        prev = current;
        multiplier *= 2;
    }
}

/// Reference flow with a certified position error `<= delta`.
///
/// Stand-in for the exactly-solved flow on targets without a closed form:
/// the certificate is driven far below whatever quantity the caller measures.
pub fn adaptive_reference_flow(
    p: &Potential,
    s0: &PhaseState,
    t: f64,
    delta: f64,
) -> Result<FlowResult> {
    adaptive_reference_flow_with_ceiling(p, s0, t, delta, ADAPTIVE_STEP_CEILING)
}

/// [`adaptive_reference_flow`] with an explicit substep ceiling.
pub fn adaptive_reference_flow_with_ceiling(
    p: &Potential,
    s0: &PhaseState,
    t: f64,
    delta: f64,
    ceiling: usize,
) -> Result<FlowResult> {
    check_state(p, s0)?;
    check_time(t)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "delta must be positive, got {delta}"
        )));
    }
    if t == 0.0 {
        return Ok(FlowResult {
            state: s0.clone(),
            gradient_evaluations: 1,
            certified_error: Some(0.0),
        });
    }
    if t < 0.0 {
        // Backward flow via time-reversal symmetry.
        let back = adaptive_reference_flow_with_ceiling(p, &s0.reversed(), -t, delta, ceiling)?;
        return Ok(FlowResult {
            state: back.state.reversed(),
            ..back
        });
    }
    let (states, evals, certified) = adaptive_profile(p, s0, &[t], delta, ceiling)?;
    Ok(FlowResult {
        state: states.into_iter().next().expect("one requested time"),
        gradient_evaluations: evals,
        certified_error: Some(certified),
    })
}

/// Pieces needed by the collocation solver so that a piecewise-constant
/// acceleration reaches position accuracy `delta` over time `t`:
/// `max(1, ceil(2 L t^3 / delta * (|v0| + t |∇f(x0)|)))`.
pub fn piece_count(v0_norm: f64, grad0_norm: f64, lipschitz: f64, t: f64, delta: f64) -> usize {
    assert!(delta > 0.0, "piece_count needs delta > 0");
    assert!(t >= 0.0 && v0_norm >= 0.0 && grad0_norm >= 0.0 && lipschitz > 0.0);
    let raw = (2.0 * lipschitz * t.powi(3) / delta) * (v0_norm + t * grad0_norm);
    // Back off a few ulps so round-off cannot bump an exact integer count.
    (raw * (1.0 - 1e-12)).ceil().clamp(1.0, 1e15) as usize
}

/// Piecewise polynomial over `[breakpoints[0], breakpoints[m]]`.
///
/// Coefficients are stored per piece in the normalized local coordinate
/// `sigma = (t - T_{j-1}) / (T_j - T_{j-1})`, one `d x (degree+1)` matrix
/// per piece with column `k` multiplying `sigma^k`.
#[derive(Clone, Debug)]
pub struct PiecewisePolynomial {
    breakpoints: Vec<f64>,
    coefficients: Vec<DMatrix<f64>>,
    degree: usize,
}

impl PiecewisePolynomial {
    pub fn new(breakpoints: Vec<f64>, coefficients: Vec<DMatrix<f64>>) -> Result<Self> {
        if breakpoints.len() < 2 || coefficients.len() != breakpoints.len() - 1 {
            return Err(Error::InvalidInput(
                "need m >= 1 pieces and m+1 breakpoints".into(),
            ));
        }
        if !breakpoints.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput("breakpoints must be increasing".into()));
        }
        let d = coefficients[0].nrows();
        let cols = coefficients[0].ncols();
        if cols == 0
            || coefficients
                .iter()
                .any(|c| c.nrows() != d || c.ncols() != cols)
        {
            return Err(Error::InvalidInput("ragged coefficient matrices".into()));
        }
        Ok(Self {
            breakpoints,
            coefficients,
            degree: cols - 1,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn pieces(&self) -> usize {
        self.coefficients.len()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn dim(&self) -> usize {
        self.coefficients[0].nrows()
    }

    /// Value of piece `j` at normalized coordinate `sigma` (Horner).
    pub fn piece_value(&self, piece: usize, sigma: f64) -> DVector<f64> {
        let c = &self.coefficients[piece];
        let mut acc: DVector<f64> = c.column(c.ncols() - 1).into();
        for k in (0..c.ncols() - 1).rev() {
            acc *= sigma;
            acc += c.column(k);
        }
        acc
    }

    pub fn eval(&self, t: f64) -> Result<DVector<f64>> {
        let (lo, hi) = (self.breakpoints[0], *self.breakpoints.last().unwrap());
        if !(t >= lo && t <= hi) {
            return Err(Error::InvalidInput(format!(
                "t={t} outside domain [{lo}, {hi}]"
            )));
        }
        let piece = match self
            .breakpoints
            .binary_search_by(|b| b.partial_cmp(&t).unwrap())
        {
            Ok(j) => j.min(self.pieces() - 1),
            Err(j) => j - 1,
        };
        let width = self.breakpoints[piece + 1] - self.breakpoints[piece];
        Ok(self.piece_value(piece, (t - self.breakpoints[piece]) / width))
    }
}

/// Ascending Chebyshev-Gauss nodes mapped to (0, 1).
fn chebyshev_nodes(count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| {
            0.5 * (1.0 - ((2 * i + 1) as f64 * std::f64::consts::PI / (2 * count) as f64).cos())
        })
        .collect()
}

fn vandermonde_inverse(nodes: &[f64]) -> DMatrix<f64> {
    let n = nodes.len();
    let v = DMatrix::from_fn(n, n, |i, k| nodes[i].powi(k as i32));
    v.try_inverse()
        .expect("distinct nodes give an invertible Vandermonde")
}

/// Fixed-point collocation solver for `x'' = -∇f(x)` on `[0, t]`.
///
/// The acceleration is represented as a degree-`degree` polynomial on each of
/// `pieces` equal sub-intervals; Picard iteration refreshes the nodal values
/// with `-∇f` of the doubly-integrated current iterate, carrying (position,
/// velocity) boundary data piece by piece. Iteration stops when successive
/// nodal iterates agree to `delta / (10 t^2)` in sup norm, or after
/// `ceil(log2(C t / delta)) + 8` passes with `C = |v0| + t |∇f(x0)|`.
///
/// Only valid in the contract region `sqrt(L)·t <= 1/16000`; callers pick
/// `pieces` with [`piece_count`] to make the certificate `delta` good.
pub fn collocation_flow(
    p: &Potential,
    s0: &PhaseState,
    t: f64,
    delta: f64,
    pieces: usize,
    degree: usize,
) -> Result<FlowResult> {
    collocation_flow_with_path(p, s0, t, delta, pieces, degree).map(|(r, _)| r)
}

/// [`collocation_flow`] also returning the position path as a piecewise
/// polynomial of degree `degree + 2`.
pub fn collocation_flow_with_path(
    p: &Potential,
    s0: &PhaseState,
    t: f64,
    delta: f64,
    pieces: usize,
    degree: usize,
) -> Result<(FlowResult, PiecewisePolynomial)> {
    check_state(p, s0)?;
    check_time(t)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "delta must be positive, got {delta}"
        )));
    }
    if pieces == 0 {
        return Err(Error::InvalidInput("pieces must be positive".into()));
    }
    if degree > 8 {
        return Err(Error::InvalidInput(format!(
            "collocation degree capped at 8, got {degree}"
        )));
    }
    if t < 0.0 {
        return Err(Error::InvalidInput("collocation flow needs t >= 0".into()));
    }
    let sqrt_l = p.lipschitz().sqrt();
    if sqrt_l * t > COLLOCATION_TIME_LIMIT * (1.0 + 1e-9) {
        return Err(Error::OutOfContract(format!(
            "sqrt(L)*t = {:e} exceeds the collocation limit {:e}; use the adaptive reference flow",
            sqrt_l * t,
            COLLOCATION_TIME_LIMIT
        )));
    }

    let d = p.dim();
    let grad0 = p.gradient(&s0.position)?;
    let mut evals = 1u64;

    if t == 0.0 {
        let path = PiecewisePolynomial::new(
            vec![0.0, 1.0],
            vec![DMatrix::from_columns(std::slice::from_ref(&s0.position))],
        )?;
        return Ok((
            FlowResult {
                state: s0.clone(),
                gradient_evaluations: evals,
                certified_error: Some(0.0),
            },
            path,
        ));
    }

    let nodes = if degree == 0 {
        vec![0.5]
    } else {
        chebyshev_nodes(degree + 1)
    };
    let per_piece = nodes.len();
    let vinv_t = vandermonde_inverse(&nodes).transpose();
    let width = t / pieces as f64;

    // Nodal acceleration values, one d x (degree+1) matrix per piece.
    let mut nodal: Vec<DMatrix<f64>> =
        vec![DMatrix::from_fn(d, per_piece, |i, _| -grad0[i]); pieces];
    let mut coeffs: Vec<DMatrix<f64>> = nodal.iter().map(|q| q * &vinv_t).collect();

    let c_scale = s0.velocity.norm() + t * grad0.norm();
    let max_iters = ((c_scale * t / delta).log2().ceil().max(1.0)) as usize + 8;
    let stop_tol = delta / (10.0 * t * t);

    // Double integral of sigma^k over a piece: width^2 sigma^{k+2}/((k+1)(k+2));
    // single integral: width sigma^{k+1}/(k+1).
    let mut iterations = 0usize;
    while iterations < max_iters {
        let mut x_start = s0.position.clone();
        let mut v_start = s0.velocity.clone();
        let mut worst = 0.0f64;
        let mut next_nodal = Vec::with_capacity(pieces);
        for j in 0..pieces {
            let c = &coeffs[j];
            let mut fresh = DMatrix::zeros(d, per_piece);
            for (ni, &sigma) in nodes.iter().enumerate() {
                let mut x = &x_start + &v_start * (width * sigma);
                for k in 0..=degree {
                    let factor = width * width * sigma.powi(k as i32 + 2)
                        / ((k + 1) as f64 * (k + 2) as f64);
                    x.axpy(factor, &c.column(k).into_owned(), 1.0);
                }
                let mut g = DVector::zeros(d);
                p.gradient_into(&x, &mut g);
                evals += 1;
                let mut delta_node = 0.0;
                for i in 0..d {
                    let val = -g[i];
                    let diff = val - nodal[j][(i, ni)];
                    delta_node += diff * diff;
                    fresh[(i, ni)] = val;
                }
                worst = worst.max(delta_node.sqrt());
            }
            // Carry boundary data across the piece using the current iterate.
            let mut x_end = &x_start + &v_start * width;
            let mut v_end = v_start.clone();
            for k in 0..=degree {
                let col = c.column(k).into_owned();
                x_end.axpy(width * width / ((k + 1) as f64 * (k + 2) as f64), &col, 1.0);
                v_end.axpy(width / (k + 1) as f64, &col, 1.0);
            }
            x_start = x_end;
            v_start = v_end;
            next_nodal.push(fresh);
        }
        if !worst.is_finite() {
            return Err(Error::ConvergenceFailure(
                "collocation iterate is non-finite".into(),
            ));
        }
        nodal = next_nodal;
        coeffs = nodal.iter().map(|q| q * &vinv_t).collect();
        iterations += 1;
        if worst <= stop_tol {
            break;
        }
    }

    // Final integration walk: endpoint plus the position path polynomial.
    let mut breakpoints = Vec::with_capacity(pieces + 1);
    breakpoints.extend((0..=pieces).map(|j| t * j as f64 / pieces as f64));
    let mut path_coeffs = Vec::with_capacity(pieces);
    let mut x_start = s0.position.clone();
    let mut v_start = s0.velocity.clone();
    for c in &coeffs {
        let mut piece = DMatrix::zeros(d, degree + 3);
        piece.set_column(0, &x_start);
        piece.set_column(1, &(&v_start * width));
        for k in 0..=degree {
            let col = c.column(k).into_owned();
            piece.set_column(
                k + 2,
                &(&col * (width * width / ((k + 1) as f64 * (k + 2) as f64))),
            );
        }
        let mut x_end = &x_start + &v_start * width;
        let mut v_end = v_start.clone();
        for k in 0..=degree {
            let col = c.column(k).into_owned();
            x_end.axpy(width * width / ((k + 1) as f64 * (k + 2) as f64), &col, 1.0);
            v_end.axpy(width / (k + 1) as f64, &col, 1.0);
        }
        path_coeffs.push(piece);
        x_start = x_end;
        v_start = v_end;
    }
    if !x_start.iter().chain(v_start.iter()).all(|v| v.is_finite()) {
        return Err(Error::ConvergenceFailure(
            "collocation endpoint is non-finite".into(),
        ));
    }
    let path = PiecewisePolynomial::new(breakpoints, path_coeffs)?;
    Ok((
        FlowResult {
            state: PhaseState {
                position: x_start,
                velocity: v_start,
            },
            gradient_evaluations: evals,
            certified_error: Some(delta),
        },
        path,
    ))
}
