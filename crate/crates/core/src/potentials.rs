//! Target potentials: strongly convex, smooth energies `f` with certified
//! curvature constants.
//!
//! A [`Potential`] carries `f`, `∇f`, the strong-convexity constant `mu` and
//! the gradient Lipschitz constant `lipschitz` (`mu <= lipschitz`). Only the
//! gradient is ever exposed; no Hessian oracle exists on purpose, so nothing
//! downstream can silently assume twice differentiability.
//!
//! Two families are provided:
//! - quadratics `f(x) = (x-b)' A (x-b) / 2` with SPD `A`, stored through the
//!   eigendecomposition of `A` so the Hamiltonian flow has a closed form;
//! - the log-cosh family `f(x) = sum_i mu/2 x_i^2 + (L-mu) log cosh x_i`,
//!   a non-quadratic target whose curvature provably stays inside `(mu, L]`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::flow::PhaseState;

#[derive(Clone, Debug)]
pub struct Potential {
    mu: f64,
    lipschitz: f64,
    kind: Kind,
}

#[derive(Clone, Debug)]
enum Kind {
    Quadratic(Quadratic),
    LogCosh { dim: usize },
}

/// Eigenvalues, optional eigenbasis, and center of a quadratic Hessian.
pub(crate) type QuadraticParts<'a> = (&'a DVector<f64>, Option<&'a DMatrix<f64>>, &'a DVector<f64>);

#[derive(Clone, Debug)]
struct Quadratic {
    /// Hessian eigenvalues, each in `[mu, lipschitz]`.
    eigenvalues: DVector<f64>,
    /// Orthonormal eigenbasis; `None` when the Hessian is diagonal.
    basis: Option<DMatrix<f64>>,
    /// Minimizer `b`.
    center: DVector<f64>,
}

fn check_curvature_range(eigenvalues: &DVector<f64>) -> Result<(f64, f64)> {
    if eigenvalues.is_empty() {
        return Err(Error::InvalidInput("empty eigenvalue list".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &a in eigenvalues.iter() {
        if !a.is_finite() || a <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "eigenvalues must be finite and positive, got {a}"
            )));
        }
        lo = lo.min(a);
        hi = hi.max(a);
    }
    Ok((lo, hi))
}

impl Potential {
    /// Quadratic with diagonal Hessian `diag(eigenvalues)` minimized at 0.
    pub fn quadratic_diagonal(eigenvalues: &[f64]) -> Result<Self> {
        let eigenvalues = DVector::from_column_slice(eigenvalues);
        let center = DVector::zeros(eigenvalues.len());
        Self::from_modes(eigenvalues, None, center)
    }

    /// Quadratic with diagonal Hessian and an explicit minimizer.
    pub fn quadratic_diagonal_centered(eigenvalues: &[f64], center: &[f64]) -> Result<Self> {
        let eigenvalues = DVector::from_column_slice(eigenvalues);
        let center = DVector::from_column_slice(center);
        Self::from_modes(eigenvalues, None, center)
    }

    /// Quadratic `f(x) = (x-b)' A (x-b) / 2` with a dense SPD matrix `A`.
    ///
    /// The matrix is eigendecomposed at construction; the decomposition is
    /// what the exact flow and the closed-form chain kernel run on.
    pub fn quadratic_dense(matrix: DMatrix<f64>, center: DVector<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidInput("Hessian must be square".into()));
        }
        let d = matrix.nrows();
        if center.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: center.len(),
            });
        }
        let scale = matrix.amax().max(1.0);
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > 1e-10 * scale {
            return Err(Error::InvalidInput(format!(
                "Hessian must be symmetric (asymmetry {asym:e})"
            )));
        }
        let sym = (&matrix + matrix.transpose()) * 0.5;
        let eigen = sym.symmetric_eigen();
        Self::from_modes(eigen.eigenvalues, Some(eigen.eigenvectors), center)
    }

    fn from_modes(
        eigenvalues: DVector<f64>,
        basis: Option<DMatrix<f64>>,
        center: DVector<f64>,
    ) -> Result<Self> {
        let (mu, lipschitz) = check_curvature_range(&eigenvalues)?;
        if center.len() != eigenvalues.len() || !center.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidInput("bad center vector".into()));
        }
        Ok(Self {
            mu,
            lipschitz,
            kind: Kind::Quadratic(Quadratic {
                eigenvalues,
                basis,
                center,
            }),
        })
    }

    /// Diagonal quadratic with eigenvalues spread geometrically over
    /// `[mu, lipschitz]`, so both curvature extremes are present.
    pub fn quadratic_log_spaced(dim: usize, mu: f64, lipschitz: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if !(mu > 0.0 && mu.is_finite() && lipschitz >= mu && lipschitz.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "need 0 < mu <= lipschitz, got mu={mu}, lipschitz={lipschitz}"
            )));
        }
        let eigs: Vec<f64> = if dim == 1 {
            vec![lipschitz]
        } else {
            (0..dim)
                .map(|i| mu * (lipschitz / mu).powf(i as f64 / (dim - 1) as f64))
                .collect()
        };
        Self::quadratic_diagonal(&eigs)
    }

    /// Separable log-cosh target `f(x) = sum_i mu/2 x_i^2 + (L-mu) log cosh x_i`.
    ///
    /// Per-coordinate curvature is `mu + (L-mu) sech^2(x_i)`, which lies in
    /// `(mu, L]`, so the advertised constants are certified analytically.
    /// The unique minimizer is the origin.
    pub fn log_cosh(dim: usize, mu: f64, lipschitz: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if !(mu > 0.0 && mu.is_finite() && lipschitz >= mu && lipschitz.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "need 0 < mu <= lipschitz, got mu={mu}, lipschitz={lipschitz}"
            )));
        }
        Ok(Self {
            mu,
            lipschitz,
            kind: Kind::LogCosh { dim },
        })
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            Kind::Quadratic(q) => q.eigenvalues.len(),
            Kind::LogCosh { dim } => *dim,
        }
    }

    /// Strong-convexity constant.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Gradient Lipschitz constant.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Condition number `kappa = lipschitz / mu`.
    pub fn condition_number(&self) -> f64 {
        self.lipschitz / self.mu
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self.kind, Kind::Quadratic(_))
    }

    /// The exact minimizer (known in closed form for both families).
    pub fn minimizer(&self) -> DVector<f64> {
        match &self.kind {
            Kind::Quadratic(q) => q.center.clone(),
            Kind::LogCosh { dim } => DVector::zeros(*dim),
        }
    }

    /// Eigenvalues, optional eigenbasis and center of a quadratic target.
    pub(crate) fn quadratic_parts(&self) -> Option<QuadraticParts<'_>> {
        match &self.kind {
            Kind::Quadratic(q) => Some((&q.eigenvalues, q.basis.as_ref(), &q.center)),
            Kind::LogCosh { .. } => None,
        }
    }

    /// Hessian matrix `A` of a quadratic target.
    pub fn quadratic_hessian(&self) -> Option<DMatrix<f64>> {
        let (eigs, basis, _) = self.quadratic_parts()?;
        Some(match basis {
            None => DMatrix::from_diagonal(eigs),
            Some(q) => q * DMatrix::from_diagonal(eigs) * q.transpose(),
        })
    }

    /// Covariance `A^{-1}` of the Gaussian target `exp(-f)` for quadratics.
    pub fn quadratic_covariance(&self) -> Option<DMatrix<f64>> {
        let (eigs, basis, _) = self.quadratic_parts()?;
        let inv = DVector::from_fn(eigs.len(), |i, _| 1.0 / eigs[i]);
        Some(match basis {
            None => DMatrix::from_diagonal(&inv),
            Some(q) => q * DMatrix::from_diagonal(&inv) * q.transpose(),
        })
    }

    fn check_point(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("non-finite coordinate".into()));
        }
        Ok(())
    }

    /// Energy `f(x)`.
    pub fn value(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_point(x)?;
        Ok(match &self.kind {
            Kind::Quadratic(q) => {
                let centered = x - &q.center;
                let y = match &q.basis {
                    None => centered,
                    Some(b) => b.transpose() * centered,
                };
                0.5 * y
                    .iter()
                    .zip(q.eigenvalues.iter())
                    .map(|(yi, a)| a * yi * yi)
                    .sum::<f64>()
            }
            Kind::LogCosh { .. } => {
                let span = self.lipschitz - self.mu;
                x.iter()
                    .map(|&xi| 0.5 * self.mu * xi * xi + span * ln_cosh(xi))
                    .sum()
            }
        })
    }

    /// Gradient `∇f(x)`.
    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_point(x)?;
        let mut out = DVector::zeros(x.len());
        self.gradient_into(x, &mut out);
        Ok(out)
    }

    /// Gradient written into a caller-owned buffer; no validation, for hot loops.
    pub fn gradient_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        match &self.kind {
            Kind::Quadratic(q) => match &q.basis {
                None => {
                    for i in 0..x.len() {
                        out[i] = q.eigenvalues[i] * (x[i] - q.center[i]);
                    }
                }
                Some(b) => {
                    let mut y = b.transpose() * (x - &q.center);
                    for i in 0..y.len() {
                        y[i] *= q.eigenvalues[i];
                    }
                    out.copy_from(&(b * y));
                }
            },
            Kind::LogCosh { .. } => {
                let span = self.lipschitz - self.mu;
                for i in 0..x.len() {
                    out[i] = self.mu * x[i] + span * x[i].tanh();
                }
            }
        }
    }

    /// Secant curvature `rho = <∇f(x)-∇f(y), x-y> / |x-y|^2` along a chord.
    ///
    /// Strong convexity and smoothness sandwich the value in `[mu, lipschitz]`.
    pub fn secant_curvature(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        let diff = x - y;
        let norm_sq = diff.norm_squared();
        if norm_sq == 0.0 {
            return Err(Error::DegenerateInput(
                "secant curvature needs two distinct points".into(),
            ));
        }
        let grad_diff = self.gradient(x)? - self.gradient(y)?;
        Ok(grad_diff.dot(&diff) / norm_sq)
    }

    /// Hamiltonian `H(x, v) = f(x) + |v|^2 / 2`.
    pub fn energy(&self, state: &PhaseState) -> Result<f64> {
        if state.velocity.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: state.velocity.len(),
            });
        }
        Ok(self.value(&state.position)? + 0.5 * state.velocity.norm_squared())
    }
}

/// `log cosh x`, stable for large `|x|`.
fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::ChainRng;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn central_difference(p: &Potential, x: &DVector<f64>, h: f64) -> DVector<f64> {
        DVector::from_fn(x.len(), |i, _| {
            let mut plus = x.clone();
            let mut minus = x.clone();
            plus[i] += h;
            minus[i] -= h;
            (p.value(&plus).unwrap() - p.value(&minus).unwrap()) / (2.0 * h)
        })
    }

    fn test_targets() -> Vec<Potential> {
        let mut rng = ChainRng::new(2024, 0);
        let raw = DMatrix::from_fn(5, 5, |_, _| rng.standard_normal());
        let ortho = raw.qr().q();
        let spd = &ortho
            * DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 1.0, 2.0, 3.5, 5.0]))
            * ortho.transpose();
        vec![
            Potential::quadratic_diagonal(&[1.0, 4.0]).unwrap(),
            Potential::quadratic_diagonal_centered(&[2.0, 0.5, 1.0], &[1.0, -2.0, 0.25]).unwrap(),
            Potential::quadratic_dense(spd, DVector::from_vec(vec![0.1, 0.0, -0.3, 0.7, 1.1]))
                .unwrap(),
            Potential::log_cosh(3, 1.0, 2.0).unwrap(),
            Potential::log_cosh(2, 0.5, 50.0).unwrap(),
        ]
    }

    #[test]
    fn quadratic_value_examples() {
        let identity = Potential::quadratic_diagonal(&[1.0, 1.0]).unwrap();
        assert_eq!(identity.value(&DVector::zeros(2)).unwrap(), 0.0);

        let p = Potential::quadratic_diagonal(&[1.0, 4.0]).unwrap();
        let v = p.value(&DVector::from_vec(vec![1.0, 1.0])).unwrap();
        assert_abs_diff_eq!(v, 2.5, epsilon = 1e-15);
    }

    #[test]
    fn log_cosh_value_and_gradient_examples() {
        let p = Potential::log_cosh(1, 1.0, 2.0).unwrap();
        assert_eq!(p.value(&DVector::from_vec(vec![0.0])).unwrap(), 0.0);
        let g = p.gradient(&DVector::from_vec(vec![1.0])).unwrap();
        assert_relative_eq!(g[0], 1.0 + 1.0f64.tanh(), max_relative = 1e-15);
        assert_abs_diff_eq!(g[0], 1.76159, epsilon = 1e-5);
    }

    #[test]
    fn gradient_identity_hessian() {
        let p = Potential::quadratic_diagonal(&[1.0, 1.0]).unwrap();
        let x = DVector::from_vec(vec![3.0, -2.0]);
        assert_eq!(p.gradient(&x).unwrap(), x);
    }

    #[test]
    fn gradient_vanishes_at_minimizer() {
        for p in test_targets() {
            let g = p.gradient(&p.minimizer()).unwrap();
            assert_eq!(g.amax(), 0.0, "gradient at minimizer must be exactly zero");
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        for p in test_targets() {
            let mut rng = ChainRng::new(9, 1);
            for _ in 0..100 {
                let x = rng.normal_vector(p.dim()) * 2.0;
                let g = p.gradient(&x).unwrap();
                let fd = central_difference(&p, &x, 1e-5);
                let err = (&g - &fd).norm();
                assert!(
                    err <= 1e-6 * (1.0 + g.norm()),
                    "finite differences disagree: err={err:e}"
                );
            }
        }
    }

    #[test]
    fn secant_curvature_sandwiched() {
        for p in test_targets() {
            let mut rng = ChainRng::new(17, 2);
            for _ in 0..1000 {
                let x = rng.normal_vector(p.dim()) * 3.0;
                let y = rng.normal_vector(p.dim()) * 3.0;
                if (&x - &y).norm() == 0.0 {
                    continue;
                }
                let rho = p.secant_curvature(&x, &y).unwrap();
                assert!(
                    rho >= p.mu() - 1e-9 && rho <= p.lipschitz() + 1e-9,
                    "rho={rho} outside [{}, {}]",
                    p.mu(),
                    p.lipschitz()
                );
            }
        }
    }

    #[test]
    fn gradient_is_lipschitz() {
        for p in test_targets() {
            let mut rng = ChainRng::new(23, 3);
            for _ in 0..1000 {
                let x = rng.normal_vector(p.dim()) * 3.0;
                let y = rng.normal_vector(p.dim()) * 3.0;
                let lhs = (p.gradient(&x).unwrap() - p.gradient(&y).unwrap()).norm();
                let rhs = (p.lipschitz() + 1e-9) * (&x - &y).norm();
                assert!(lhs <= rhs, "gradient not Lipschitz: {lhs} > {rhs}");
            }
        }
    }

    #[test]
    fn identity_curvature_is_one() {
        let p = Potential::quadratic_diagonal(&[1.0, 1.0, 1.0]).unwrap();
        let mut rng = ChainRng::new(5, 0);
        for _ in 0..10 {
            let x = rng.normal_vector(3);
            let y = rng.normal_vector(3);
            if (&x - &y).norm() == 0.0 {
                continue;
            }
            assert_relative_eq!(
                p.secant_curvature(&x, &y).unwrap(),
                1.0,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn eigen_direction_curvature() {
        let p = Potential::quadratic_diagonal(&[0.5, 8.0]).unwrap();
        let x = DVector::from_vec(vec![1.0, 0.0]);
        let y = DVector::from_vec(vec![-2.0, 0.0]);
        assert_relative_eq!(
            p.secant_curvature(&x, &y).unwrap(),
            0.5,
            max_relative = 1e-14
        );
    }

    #[test]
    fn coincident_points_rejected() {
        let p = Potential::log_cosh(2, 1.0, 2.0).unwrap();
        let x = DVector::from_vec(vec![1.0, 2.0]);
        assert!(matches!(
            p.secant_curvature(&x, &x.clone()),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let p = Potential::quadratic_diagonal(&[1.0, 2.0]).unwrap();
        let x = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(matches!(
            p.value(&x),
            Err(Error::DimensionMismatch {
                expected: 2,
                actual: 3
            })
        ));
        assert!(p.gradient(&x).is_err());
    }

    #[test]
    fn hamiltonian_energy_examples() {
        let lc = Potential::log_cosh(2, 1.0, 2.0).unwrap();
        let rest = PhaseState::new(DVector::zeros(2), DVector::zeros(2)).unwrap();
        assert_eq!(lc.energy(&rest).unwrap(), 0.0);

        let p = Potential::quadratic_diagonal(&[1.0, 1.0]).unwrap();
        let s = PhaseState::new(
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0]),
        )
        .unwrap();
        assert_abs_diff_eq!(p.energy(&s).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn dense_quadratic_matches_direct_form() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let b = DVector::from_vec(vec![1.0, -1.0]);
        let p = Potential::quadratic_dense(a.clone(), b.clone()).unwrap();
        let mut rng = ChainRng::new(31, 0);
        for _ in 0..20 {
            let x = rng.normal_vector(2) * 2.0;
            let centered = &x - &b;
            let direct = 0.5 * centered.dot(&(&a * &centered));
            assert_relative_eq!(p.value(&x).unwrap(), direct, max_relative = 1e-12);
            let gdirect = &a * centered;
            assert_relative_eq!(
                (p.gradient(&x).unwrap() - gdirect).norm(),
                0.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn constants_come_from_spectrum() {
        let p = Potential::quadratic_diagonal(&[0.25, 3.0, 9.0]).unwrap();
        assert_eq!(p.mu(), 0.25);
        assert_eq!(p.lipschitz(), 9.0);
        assert_eq!(p.condition_number(), 36.0);

        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, -0.2, 1.0]);
        assert!(Potential::quadratic_dense(asym, DVector::zeros(2)).is_err());
        assert!(Potential::quadratic_diagonal(&[1.0, -2.0]).is_err());
        assert!(Potential::log_cosh(2, 2.0, 1.0).is_err());
    }

    #[test]
    fn log_spaced_spectrum_covers_extremes() {
        let p = Potential::quadratic_log_spaced(10, 1.0, 10.0).unwrap();
        assert_eq!(p.dim(), 10);
        assert_relative_eq!(p.mu(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(p.lipschitz(), 10.0, max_relative = 1e-12);
    }

    #[test]
    fn ln_cosh_is_stable_for_large_arguments() {
        assert_relative_eq!(
            ln_cosh(800.0),
            800.0 - std::f64::consts::LN_2,
            max_relative = 1e-15
        );
        assert_eq!(ln_cosh(0.0), 0.0);
        assert_relative_eq!(ln_cosh(-3.0), (3.0f64.cosh()).ln(), max_relative = 1e-14);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn potential_strategy() -> impl Strategy<Value = Potential> {
            (1usize..5, 0.05f64..4.0, 0.0f64..50.0, any::<bool>()).prop_map(
                |(dim, mu, span, quadratic)| {
                    if quadratic {
                        Potential::quadratic_log_spaced(dim, mu, mu + span).unwrap()
                    } else {
                        Potential::log_cosh(dim, mu, mu + span).unwrap()
                    }
                },
            )
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn curvature_stays_sandwiched(
                p in potential_strategy(),
                seed in 0u64..1000,
            ) {
                let mut rng = ChainRng::new(seed, 0);
                for _ in 0..20 {
                    let x = rng.normal_vector(p.dim()) * 3.0;
                    let y = rng.normal_vector(p.dim()) * 3.0;
                    if (&x - &y).norm() == 0.0 {
                        continue;
                    }
                    let rho = p.secant_curvature(&x, &y).unwrap();
                    prop_assert!(rho >= p.mu() - 1e-9, "rho {rho} below mu {}", p.mu());
                    prop_assert!(rho <= p.lipschitz() + 1e-9, "rho {rho} above L {}", p.lipschitz());
                    let grad_gap = (p.gradient(&x).unwrap() - p.gradient(&y).unwrap()).norm();
                    prop_assert!(grad_gap <= (p.lipschitz() + 1e-9) * (&x - &y).norm());
                }
            }

            #[test]
            fn value_dominates_quadratic_lower_model(
                p in potential_strategy(),
                seed in 0u64..1000,
            ) {
                // mu-strong convexity from the minimizer: f(x) >= mu/2 |x - b|^2.
                let mut rng = ChainRng::new(seed, 1);
                let b = p.minimizer();
                for _ in 0..20 {
                    let x = rng.normal_vector(p.dim()) * 2.0;
                    let fx = p.value(&x).unwrap();
                    let model = 0.5 * p.mu() * (&x - &b).norm_squared();
                    prop_assert!(fx >= model - 1e-9 * (1.0 + fx.abs()));
                }
            }
        }
    }
}
