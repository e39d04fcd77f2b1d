//! Closure-term extraction and the data-driven closure fit.
//!
//! The exact closure samples come from projected full-order data: at each
//! snapshot, the first `r` components of the rank-`R` Galerkin right-hand
//! side minus the rank-`r` right-hand side. A quadratic ansatz
//! `tau(a) ~= A~ a + a^T B~ a` is then fitted to those samples by ridge
//! least squares, one output row at a time. Adding the fitted operators to
//! the Galerkin ones closes the reduced model.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, RomError};
use crate::fom::{SnapshotSet, ToySystem};
use crate::galerkin::{assemble_operators, sample_series, RomOperators, RomTrajectory};
use crate::pod::PodBasis;
use crate::tensor::Tensor3;

/// Singular values below this fraction of the largest are treated as zero
/// when inverting the feature matrix. The duplicated `a_m a_n` / `a_n a_m`
/// features make the unregularized system rank-deficient by construction.
const PINV_CUTOFF_REL: f64 = 1e-12;

/// Condition estimate above which the fit logs a warning.
const CONDITION_WARN: f64 = 1e12;

/// Per-snapshot exact closure data: `tau` rows are the ideal closure term,
/// `a_full` rows the full rank-`R` projected coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosureSamples {
    times: Vec<f64>,
    tau: DMatrix<f64>,
    a_full: DMatrix<f64>,
}

impl ClosureSamples {
    pub fn from_parts(times: Vec<f64>, tau: DMatrix<f64>, a_full: DMatrix<f64>) -> Result<Self> {
        let m = times.len();
        if tau.nrows() != m || a_full.nrows() != m {
            return Err(RomError::DimensionMismatch(format!(
                "{} times, {} tau rows, {} coefficient rows",
                m,
                tau.nrows(),
                a_full.nrows()
            )));
        }
        if tau.ncols() >= a_full.ncols() {
            return Err(RomError::RankNotStrictlySmaller {
                r: tau.ncols(),
                big_r: a_full.ncols(),
            });
        }
        if tau.iter().any(|v| !v.is_finite()) {
            return Err(RomError::InvalidParameter(
                "closure samples contain non-finite entries".into(),
            ));
        }
        Ok(Self {
            times,
            tau,
            a_full,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_samples(&self) -> usize {
        self.times.len()
    }

    pub fn tau(&self) -> &DMatrix<f64> {
        &self.tau
    }

    pub fn a_full(&self) -> &DMatrix<f64> {
        &self.a_full
    }

    /// Resolved rank r.
    pub fn r(&self) -> usize {
        self.tau.ncols()
    }

    /// Full rank R.
    pub fn big_r(&self) -> usize {
        self.a_full.ncols()
    }
}

/// Fitted closure operators plus fit diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosureOperators {
    r: usize,
    a_tilde: DMatrix<f64>,
    b_tilde: Tensor3,
    ridge_lambda: f64,
    residual_rel: f64,
    condition: f64,
}

impl ClosureOperators {
    pub fn from_parts(
        a_tilde: DMatrix<f64>,
        b_tilde: Tensor3,
        ridge_lambda: f64,
        residual_rel: f64,
        condition: f64,
    ) -> Result<Self> {
        let r = a_tilde.nrows();
        if a_tilde.ncols() != r || b_tilde.dim() != r {
            return Err(RomError::DimensionMismatch(
                "closure operator blocks disagree on dimension".into(),
            ));
        }
        if a_tilde.iter().any(|v| !v.is_finite()) || b_tilde.iter().any(|v| !v.is_finite()) {
            return Err(RomError::InvalidParameter(
                "closure operators contain non-finite entries".into(),
            ));
        }
        Ok(Self {
            r,
            a_tilde,
            b_tilde,
            ridge_lambda,
            residual_rel,
            condition,
        })
    }

    pub fn zeros(r: usize) -> Self {
        Self {
            r,
            a_tilde: DMatrix::zeros(r, r),
            b_tilde: Tensor3::zeros(r),
            ridge_lambda: 0.0,
            residual_rel: 0.0,
            condition: 1.0,
        }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn a_tilde(&self) -> &DMatrix<f64> {
        &self.a_tilde
    }

    pub fn b_tilde(&self) -> &Tensor3 {
        &self.b_tilde
    }

    pub fn ridge_lambda(&self) -> f64 {
        self.ridge_lambda
    }

    /// In-sample `||fit residual||_F / ||tau||_F`.
    pub fn residual_rel(&self) -> f64 {
        self.residual_rel
    }

    /// Condition estimate of the regularized normal system.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// The fitted correction `A~ a + a^T B~ a`.
    pub fn apply(&self, a: &DVector<f64>) -> Result<DVector<f64>> {
        if a.len() != self.r {
            return Err(RomError::DimensionMismatch(format!(
                "coefficient vector has length {}, closure dimension is {}",
                a.len(),
                self.r
            )));
        }
        let mut out = &self.a_tilde * a;
        out += self.b_tilde.contract(a);
        Ok(out)
    }
}

/// Extracts exact closure samples from full-order snapshots.
///
/// At each snapshot time, `a_full = project(snapshot, R)` and
/// `tau_i = [F_R(a_full)]_i - [F_r(a_full[..r])]_i` for `i < r`, with both
/// right-hand sides assembled from the same basis. The identity
/// `F_r + tau = [F_R]_{1..r}` holds to round-off by construction.
pub fn extract_closure_samples(
    basis: &PodBasis,
    snapshots: &SnapshotSet,
    r: usize,
    viscosity: f64,
) -> Result<ClosureSamples> {
    let big_r = basis.rank();
    if r >= big_r {
        return Err(RomError::RankNotStrictlySmaller { r, big_r });
    }
    if r == 0 {
        return Err(RomError::InvalidParameter(
            "resolved rank must be at least 1".into(),
        ));
    }
    let ops_full = assemble_operators(basis, big_r, viscosity)?;
    let ops_resolved = assemble_operators(basis, r, viscosity)?;

    let series = basis.project_series(snapshots, big_r)?;
    let m = series.times().len();
    let mut tau = DMatrix::zeros(m, r);
    for j in 0..m {
        let a_full = series.coeffs().row(j).transpose();
        let f_full = ops_full.rhs(&a_full)?;
        let a_res = a_full.rows(0, r).into_owned();
        let f_res = ops_resolved.rhs(&a_res)?;
        for i in 0..r {
            tau[(j, i)] = f_full[i] - f_res[i];
        }
    }
    ClosureSamples::from_parts(series.times().to_vec(), tau, series.coeffs().clone())
}

/// Quadratic feature row `(a_1..a_r, a_1 a_1, a_1 a_2, ..., a_r a_r)`.
fn feature_matrix(samples: &ClosureSamples) -> DMatrix<f64> {
    let m = samples.n_samples();
    let r = samples.r();
    let p = r + r * r;
    let mut phi = DMatrix::zeros(m, p);
    for j in 0..m {
        for i in 0..r {
            phi[(j, i)] = samples.a_full[(j, i)];
        }
        for mi in 0..r {
            for ni in 0..r {
                phi[(j, r + mi * r + ni)] = samples.a_full[(j, mi)] * samples.a_full[(j, ni)];
            }
        }
    }
    phi
}

/// The default ridge policy: `1e-6 * sigma_max^2` of the feature matrix.
pub fn auto_ridge_lambda(samples: &ClosureSamples) -> f64 {
    let phi = feature_matrix(samples);
    let sigma_max = phi
        .singular_values()
        .iter()
        .fold(0.0_f64, |acc, &s| acc.max(s));
    1e-6 * sigma_max * sigma_max
}

/// Post-fit hook for imposing structure on the fitted operators (symmetry,
/// dissipativity, and similar side constraints). The shipped pipeline leaves
/// the operators untouched.
pub trait ClosureConstraint {
    fn apply(&self, a_tilde: &mut DMatrix<f64>, b_tilde: &mut Tensor3);
}

/// The default constraint: none.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unconstrained;

impl ClosureConstraint for Unconstrained {
    fn apply(&self, _a_tilde: &mut DMatrix<f64>, _b_tilde: &mut Tensor3) {}
}

/// Fits the closure operators by ridge least squares.
///
/// Each output row is an independent linear problem in the `r + r^2`
/// unknowns; all rows share one SVD of the feature matrix. With
/// `ridge_lambda = 0` the minimum-norm solution is returned, which
/// symmetrizes the quadratic coefficients across the duplicated features.
/// A condition estimate above 1e12 logs a warning but does not fail: the
/// ridge term keeps the solve bounded.
pub fn fit_closure(samples: &ClosureSamples, ridge_lambda: f64) -> Result<ClosureOperators> {
    fit_closure_constrained(samples, ridge_lambda, &Unconstrained)
}

/// `fit_closure` with a constraint hook applied to the fitted operators
/// before the diagnostics are computed.
pub fn fit_closure_constrained(
    samples: &ClosureSamples,
    ridge_lambda: f64,
    constraint: &dyn ClosureConstraint,
) -> Result<ClosureOperators> {
    let m = samples.n_samples();
    if m < 2 {
        return Err(RomError::InsufficientSamples { got: m, needed: 2 });
    }
    if ridge_lambda < 0.0 || !ridge_lambda.is_finite() {
        return Err(RomError::InvalidParameter(format!(
            "ridge_lambda must be non-negative and finite, got {ridge_lambda}"
        )));
    }
    let r = samples.r();
    let p = r + r * r;
    if m < p {
        log::warn!(
            "closure fit has {m} samples for {p} unknowns; minimum-norm solution returned"
        );
    }

    let phi = feature_matrix(samples);
    let svd = phi.svd(true, true);
    let u = svd.u.as_ref().expect("U requested");
    let v_t = svd.v_t.as_ref().expect("V^T requested");
    let sigma = &svd.singular_values;

    let sigma_max = sigma.iter().fold(0.0_f64, |acc, &s| acc.max(s));
    // Smallest singular value of the p x p normal system; zero when the
    // feature matrix cannot have full column rank.
    let sigma_min_sq = if m >= p && sigma.len() == p {
        let s = sigma.iter().fold(f64::INFINITY, |acc, &v| acc.min(v));
        s * s
    } else {
        0.0
    };
    let denom = sigma_min_sq + ridge_lambda;
    let condition = if denom > 0.0 {
        (sigma_max * sigma_max + ridge_lambda) / denom
    } else {
        f64::INFINITY
    };
    if condition > CONDITION_WARN {
        log::warn!(
            "regularized normal system condition estimate {condition:.3e} exceeds {CONDITION_WARN:.0e}"
        );
    }

    // W = V diag(sigma / (sigma^2 + lambda)) U^T tau, with a rank cutoff.
    let mut ut_tau = u.transpose() * &samples.tau;
    for k in 0..sigma.len() {
        let s = sigma[k];
        let factor = if s <= PINV_CUTOFF_REL * sigma_max {
            0.0
        } else {
            s / (s * s + ridge_lambda)
        };
        for c in 0..r {
            ut_tau[(k, c)] *= factor;
        }
    }
    let weights = v_t.transpose() * ut_tau; // p x r

    let mut a_tilde = DMatrix::zeros(r, r);
    let mut b_tilde = Tensor3::zeros(r);
    for i in 0..r {
        for mi in 0..r {
            a_tilde[(i, mi)] = weights[(mi, i)];
            for ni in 0..r {
                b_tilde.set(i, mi, ni, weights[(r + mi * r + ni, i)]);
            }
        }
    }
    // The contraction is invariant under this; reported tensors are canonical.
    let mut b_tilde = b_tilde.symmetrized_mn();
    constraint.apply(&mut a_tilde, &mut b_tilde);

    // In-sample residual of the operators actually returned.
    let mut res_sq = 0.0;
    let mut tau_sq = 0.0;
    for j in 0..m {
        let a = DVector::from_iterator(r, (0..r).map(|i| samples.a_full[(j, i)]));
        let mut predicted = &a_tilde * &a;
        predicted += b_tilde.contract(&a);
        for i in 0..r {
            let d = predicted[i] - samples.tau[(j, i)];
            res_sq += d * d;
            tau_sq += samples.tau[(j, i)] * samples.tau[(j, i)];
        }
    }
    let residual_rel = if tau_sq > 0.0 {
        (res_sq / tau_sq).sqrt()
    } else {
        0.0
    };

    ClosureOperators::from_parts(a_tilde, b_tilde, ridge_lambda, residual_rel, condition)
}

/// D2-VMS right-hand side `(A + A~) a + a^T (B + B~) a`, centering terms included.
pub fn d2vms_rhs(
    ops: &RomOperators,
    closure: &ClosureOperators,
    a: &DVector<f64>,
) -> Result<DVector<f64>> {
    if ops.r() != closure.r() {
        return Err(RomError::DimensionMismatch(format!(
            "operators have dimension {}, closure has dimension {}",
            ops.r(),
            closure.r()
        )));
    }
    let mut out = ops.rhs(a)?;
    out += closure.apply(a)?;
    Ok(out)
}

/// Supplies the unresolved coefficients `a_{r+1..R}(t)` by piecewise-linear
/// interpolation of the projected snapshot data.
#[derive(Debug, Clone)]
pub struct UnresolvedInterpolant {
    times: Vec<f64>,
    tail: DMatrix<f64>,
    r: usize,
    big_r: usize,
}

impl UnresolvedInterpolant {
    pub fn new(samples: &ClosureSamples) -> Self {
        let r = samples.r();
        let big_r = samples.big_r();
        let m = samples.n_samples();
        let tail = samples
            .a_full
            .view((0, r), (m, big_r - r))
            .into_owned();
        Self {
            times: samples.times.clone(),
            tail,
            r,
            big_r,
        }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn big_r(&self) -> usize {
        self.big_r
    }

    /// Unresolved coefficients at time `t`.
    pub fn at(&self, t: f64) -> Result<DVector<f64>> {
        sample_series(&self.times, &self.tail, t)
    }
}

/// Ideal-ROM right-hand side: the first `r` components of the full rank-`R`
/// dynamics evaluated at the concatenation of the resolved state and the
/// interpolated unresolved coefficients.
pub fn irom_rhs(
    ops_full: &RomOperators,
    r: usize,
    a_resolved: &DVector<f64>,
    unresolved_at: &UnresolvedInterpolant,
    t: f64,
) -> Result<DVector<f64>> {
    let big_r = ops_full.r();
    if unresolved_at.big_r() != big_r || unresolved_at.r() != r {
        return Err(RomError::DimensionMismatch(format!(
            "interpolant covers ({}, {}), operators expect ({r}, {big_r})",
            unresolved_at.r(),
            unresolved_at.big_r()
        )));
    }
    if a_resolved.len() != r {
        return Err(RomError::DimensionMismatch(format!(
            "resolved state has length {}, expected {r}",
            a_resolved.len()
        )));
    }
    let tail = unresolved_at.at(t)?;
    let mut full = DVector::zeros(big_r);
    full.rows_mut(0, r).copy_from(a_resolved);
    full.rows_mut(r, big_r - r).copy_from(&tail);
    let f_full = ops_full.rhs(&full)?;
    Ok(f_full.rows(0, r).into_owned())
}

/// Closure samples of a 3-mode toy trajectory:
/// `tau_i = F_i(a1,a2,a3) - F_i(a1,..,a_keep,0,..)` for `i <= keep`.
pub fn toy_closure_samples(
    system: &ToySystem,
    reference: &RomTrajectory,
    keep: usize,
) -> Result<ClosureSamples> {
    let dim = reference.rank();
    if dim != crate::fom::TOY_DIM {
        return Err(RomError::DimensionMismatch(format!(
            "toy reference trajectory has rank {dim}, expected {}",
            crate::fom::TOY_DIM
        )));
    }
    if keep == 0 || keep >= dim {
        return Err(RomError::RankNotStrictlySmaller {
            r: keep,
            big_r: dim,
        });
    }
    let ops_full = system.operators();
    let ops_keep = ops_full.leading(keep)?;
    let m = reference.times().len();
    let mut tau = DMatrix::zeros(m, keep);
    for j in 0..m {
        let a = reference.state(j);
        let f_full = ops_full.rhs(&a)?;
        let a_keep = a.rows(0, keep).into_owned();
        let f_keep = ops_keep.rhs(&a_keep)?;
        for i in 0..keep {
            tau[(j, i)] = f_full[i] - f_keep[i];
        }
    }
    ClosureSamples::from_parts(reference.times().to_vec(), tau, reference.coeffs().clone())
}

/// Builds closure samples from a toy trajectory and fits them.
pub fn fit_toy_closure(
    system: &ToySystem,
    reference: &RomTrajectory,
    keep: usize,
    ridge_lambda: f64,
) -> Result<ClosureOperators> {
    let samples = toy_closure_samples(system, reference, keep)?;
    fit_closure(&samples, ridge_lambda)
}
