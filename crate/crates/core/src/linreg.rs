//! Overparameterized Gaussian random-design linear regression.
//!
//! The model: rows of the design `X` are i.i.d. `N(0, Sigma)` with
//! `Sigma` given spectrally (eigenvalues plus an optional orthonormal
//! basis), responses `Y = X beta + Z` with `Z ~ N(0, sigma^2 I)`
//! independent of `X`, and squared-error loss. The learned predictor is
//! the minimum-norm interpolator `(X'X)^+ X'Y`; its denoised surrogate
//! is the projection of the true coefficients onto the row space of `X`
//! (the minimum-norm fit to noiseless labels).
//!
//! Everything downstream is exact arithmetic on that pair: the
//! three-term decomposition of the generalization gap, the label-flip
//! adversary that defeats uniform convergence, and the closed-form bound
//! expressions with their free constants.

use crate::mc::{derive_seed, McError, McEstimate, McRng, RunPlan};
use crate::spectra::{SpectraError, Spectrum};
use crate::table::{csv_document, fmt_real};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

/// Relative singular-value cutoff used when no explicit tolerance is
/// passed: values below `tol * s_max` are treated as zero.
pub const DEFAULT_SVD_REL_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LinregError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empirical risk needs at least one observation")]
    EmptySample,
    #[error("sigma must be non-negative and finite, got {0}")]
    InvalidSigma(f64),
    #[error("sample size n must be positive")]
    InvalidSampleSize,
    #[error("basis is not orthonormal to tolerance 1e-10 (max deviation {0:.3e})")]
    BasisNotOrthonormal(f64),
    #[error("operation requires the overparameterized regime d > n (got n={n}, d={d})")]
    NeedsOverparameterized { n: usize, d: usize },
    #[error("critical index does not exist within the finite spectrum (n={n}, b={b}); cannot certify the bound")]
    CriticalIndexMissing { n: usize, b: f64 },
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Mc(#[from] McError),
}

/// Eigenbasis of the covariance matrix.
#[derive(Debug, Clone)]
pub enum Basis {
    /// Diagonal covariance: `Sigma = diag(eigenvalues)`.
    Identity,
    /// `Sigma = B diag(eigenvalues) B'` with `B` orthonormal.
    Orthonormal(DMatrix<f64>),
}

/// Full specification of one random-design regression task.
#[derive(Debug, Clone)]
pub struct RegressionInstance {
    pub spectrum: Spectrum,
    pub basis: Basis,
    pub beta: DVector<f64>,
    pub sigma: f64,
    pub n: usize,
}

impl RegressionInstance {
    pub fn new(
        spectrum: Spectrum,
        beta: Vec<f64>,
        sigma: f64,
        n: usize,
    ) -> Result<Self, LinregError> {
        Self::with_basis(spectrum, Basis::Identity, beta, sigma, n)
    }

    pub fn with_basis(
        spectrum: Spectrum,
        basis: Basis,
        beta: Vec<f64>,
        sigma: f64,
        n: usize,
    ) -> Result<Self, LinregError> {
        let d = spectrum.dim();
        if beta.len() != d {
            return Err(LinregError::DimensionMismatch { expected: d, got: beta.len() });
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(LinregError::InvalidSigma(sigma));
        }
        if n == 0 {
            return Err(LinregError::InvalidSampleSize);
        }
        if let Basis::Orthonormal(b) = &basis {
            if b.nrows() != d || b.ncols() != d {
                return Err(LinregError::DimensionMismatch { expected: d, got: b.nrows() });
            }
            let dev = (b.transpose() * b - DMatrix::identity(d, d)).abs().max();
            if dev > 1e-10 {
                return Err(LinregError::BasisNotOrthonormal(dev));
            }
        }
        Ok(Self { spectrum, basis, beta: DVector::from_vec(beta), sigma, n })
    }

    pub fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    /// Quadratic form `v' Sigma v`.
    pub fn sigma_quad(&self, v: &DVector<f64>) -> f64 {
        self.sigma_bilinear(v, v)
    }

    /// Bilinear form `u' Sigma w`.
    pub fn sigma_bilinear(&self, u: &DVector<f64>, w: &DVector<f64>) -> f64 {
        let lambda = self.spectrum.eigenvalues();
        match &self.basis {
            Basis::Identity => (0..u.len()).map(|i| lambda[i] * u[i] * w[i]).sum(),
            Basis::Orthonormal(b) => {
                let bu = b.transpose() * u;
                let bw = b.transpose() * w;
                (0..bu.len()).map(|i| lambda[i] * bu[i] * bw[i]).sum()
            }
        }
    }
}

/// One realized draw from a [`RegressionInstance`].
///
/// `y` is constructed as `x * beta + z` exactly once, so the residual
/// identity holds bit-for-bit against the stored `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSample {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub z: DVector<f64>,
}

impl DesignSample {
    fn from_parts(x: DMatrix<f64>, beta: &DVector<f64>, z: DVector<f64>) -> Self {
        let y = &x * beta + &z;
        Self { x, y, z }
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }
}

/// Draw a design deterministically from `(instance, seed)`.
///
/// Entries of the pre-basis design are drawn row-major and scaled by the
/// square roots of the eigenvalues; residuals follow, scaled by sigma.
pub fn sample_design(instance: &RegressionInstance, seed: u64) -> DesignSample {
    let (n, d) = (instance.n, instance.dim());
    let mut rng = McRng::new(seed);
    let sqrt_lambda: Vec<f64> =
        instance.spectrum.eigenvalues().iter().map(|&l| l.sqrt()).collect();
    let mut x = DMatrix::<f64>::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            x[(i, j)] = sqrt_lambda[j] * rng.standard_normal();
        }
    }
    if let Basis::Orthonormal(b) = &instance.basis {
        x *= b.transpose();
    }
    let z = DVector::from_fn(n, |_, _| instance.sigma * rng.standard_normal());
    DesignSample::from_parts(x, &instance.beta, z)
}

/// Label-flip adversary: maps `(X, Y)` to `(X, 2 X beta - Y)`.
///
/// The residual flips sign, so the map is an involution and preserves the
/// sampling distribution. The flipped sample is rebuilt through the same
/// constructor as [`sample_design`], keeping `Y = X beta + Z` exact.
pub fn flip_adversary(sample: &DesignSample, beta: &DVector<f64>) -> DesignSample {
    DesignSample::from_parts(sample.x.clone(), beta, -&sample.z)
}

/// Thin SVD of a design with a relative cutoff, exposing the pieces every
/// operation here needs: minimum-norm solves, row-space projections, and
/// column-space norms.
pub struct RowSpaceSvd {
    u: DMatrix<f64>,
    v_t: DMatrix<f64>,
    singular: DVector<f64>,
    kept: Vec<bool>,
    rank: usize,
}

impl RowSpaceSvd {
    pub fn new(x: &DMatrix<f64>, rel_tol: f64) -> Self {
        let svd = x.clone().svd(true, true);
        let u = svd.u.expect("u requested");
        let v_t = svd.v_t.expect("v_t requested");
        let singular = svd.singular_values;
        let smax = singular.iter().cloned().fold(0.0f64, f64::max);
        let cutoff = rel_tol * smax;
        let kept: Vec<bool> = singular.iter().map(|&s| s > cutoff && s > 0.0).collect();
        let rank = kept.iter().filter(|&&k| k).count();
        Self { u, v_t, singular, kept, rank }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Minimum-norm least-squares solution for the right-hand side `y`.
    pub fn min_norm_solve(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut coeffs = self.u.transpose() * y;
        for i in 0..coeffs.len() {
            if self.kept[i] {
                coeffs[i] /= self.singular[i];
            } else {
                coeffs[i] = 0.0;
            }
        }
        self.v_t.transpose() * coeffs
    }

    /// Orthogonal projection of `v` onto the row space of the design.
    pub fn project_row_space(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut coeffs = &self.v_t * v;
        for i in 0..coeffs.len() {
            if !self.kept[i] {
                coeffs[i] = 0.0;
            }
        }
        self.v_t.transpose() * coeffs
    }

    /// Squared norm of the projection of `z` onto the column space.
    pub fn column_space_norm_sq(&self, z: &DVector<f64>) -> f64 {
        let coeffs = self.u.transpose() * z;
        (0..coeffs.len()).filter(|&i| self.kept[i]).map(|i| coeffs[i] * coeffs[i]).sum()
    }

    /// `(X'X)^+ X' z` — the coefficient error induced by the residual.
    pub fn pseudo_apply(&self, z: &DVector<f64>) -> DVector<f64> {
        self.min_norm_solve(z)
    }
}

/// Minimum-Euclidean-norm least-squares solution of `X b = Y`, via SVD
/// with singular values below `rel_tol * s_max` treated as zero. For an
/// all-zero design this returns the zero vector (pseudo-inverse
/// convention); the degenerate case is detectable through
/// [`RowSpaceSvd::rank`].
pub fn min_norm_interpolator(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    rel_tol: f64,
) -> Result<DVector<f64>, LinregError> {
    if y.len() != x.nrows() {
        return Err(LinregError::DimensionMismatch { expected: x.nrows(), got: y.len() });
    }
    Ok(RowSpaceSvd::new(x, rel_tol).min_norm_solve(y))
}

/// Projection of `beta` onto the row space of `x`: the minimum-norm fit
/// to the noiseless labels `X beta`.
pub fn denoised_surrogate(
    x: &DMatrix<f64>,
    beta: &DVector<f64>,
    rel_tol: f64,
) -> Result<DVector<f64>, LinregError> {
    if beta.len() != x.ncols() {
        return Err(LinregError::DimensionMismatch { expected: x.ncols(), got: beta.len() });
    }
    Ok(RowSpaceSvd::new(x, rel_tol).project_row_space(beta))
}

/// Exact population risk under the instance's model:
/// `(b - beta)' Sigma (b - beta) + sigma^2`.
pub fn population_risk(
    b: &DVector<f64>,
    instance: &RegressionInstance,
) -> Result<f64, LinregError> {
    if b.len() != instance.dim() {
        return Err(LinregError::DimensionMismatch { expected: instance.dim(), got: b.len() });
    }
    let diff = b - &instance.beta;
    Ok(instance.sigma_quad(&diff) + instance.sigma * instance.sigma)
}

/// Empirical risk `|X b - Y|^2 / n`.
pub fn empirical_risk(
    b: &DVector<f64>,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
) -> Result<f64, LinregError> {
    if x.nrows() == 0 {
        return Err(LinregError::EmptySample);
    }
    if b.len() != x.ncols() {
        return Err(LinregError::DimensionMismatch { expected: x.ncols(), got: b.len() });
    }
    if y.len() != x.nrows() {
        return Err(LinregError::DimensionMismatch { expected: x.nrows(), got: y.len() });
    }
    let r = x * b - y;
    Ok(r.norm_squared() / x.nrows() as f64)
}

/// The three closed-form terms splitting the generalization gap of the
/// minimum-norm interpolator through its denoised surrogate.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionTerms {
    /// `L_S(surrogate) - L_S(interpolator)`; equals `|Z|^2 / n` whenever
    /// the design has full row rank.
    pub empirical_gap: f64,
    /// `L_D(interpolator) - L_D(surrogate)`.
    pub risk_gap: f64,
    /// `L_D(surrogate) - L_S(surrogate)`; always
    /// `sigma^2 - |Z|^2/n + beta' P_perp Sigma P_perp beta`.
    pub surrogate_gen: f64,
    /// Set when the SVD found fewer nonzero singular values than
    /// `min(n, d)` — a measure-zero event under the Gaussian model.
    pub rank_deficient: bool,
}

impl DecompositionTerms {
    /// Sum of the three terms; identical to
    /// `L_D(interpolator) - L_S(interpolator)` up to rounding.
    pub fn sum(&self) -> f64 {
        self.empirical_gap + self.risk_gap + self.surrogate_gen
    }
}

/// Evaluate the decomposition in closed form on one sample.
///
/// The empirical-gap term is the squared column-space component of the
/// residual over `n` (which reduces to `|Z|^2/n` in the overparameterized
/// full-row-rank regime), and the risk-gap term is the factored
/// quadratic-form difference
/// `(bhat - bhat0)' Sigma (bhat + bhat0 - 2 beta)`; both coincide with
/// their definitional risk differences in every rank regime. The trace
/// expression for the risk gap is available separately as
/// [`risk_gap_trace`]; it drops a term that is mean-zero given the design
/// and that vanishes identically for isotropic covariance.
pub fn surrogate_decomposition(
    sample: &DesignSample,
    instance: &RegressionInstance,
    rel_tol: f64,
) -> Result<DecompositionTerms, LinregError> {
    check_sample_shape(sample, instance)?;
    let n = sample.n() as f64;
    let svd = RowSpaceSvd::new(&sample.x, rel_tol);
    let beta_hat = svd.min_norm_solve(&sample.y);
    let beta_surr = svd.project_row_space(&instance.beta);

    let empirical_gap = svd.column_space_norm_sq(&sample.z) / n;

    let diff = &beta_hat - &beta_surr;
    let mid = &beta_hat + &beta_surr - 2.0 * &instance.beta;
    let risk_gap = instance.sigma_bilinear(&diff, &mid);

    let perp = &instance.beta - &beta_surr;
    let surrogate_gen =
        instance.sigma * instance.sigma - sample.z.norm_squared() / n + instance.sigma_quad(&perp);

    Ok(DecompositionTerms {
        empirical_gap,
        risk_gap,
        surrogate_gen,
        rank_deficient: svd.rank() < sample.n().min(sample.d()),
    })
}

/// Variance-like trace term `tr(X (X'X)^+ Sigma (X'X)^+ X' Z Z')`,
/// evaluated as the quadratic form `q' Sigma q` with `q = (X'X)^+ X' Z`.
pub fn risk_gap_trace(
    sample: &DesignSample,
    instance: &RegressionInstance,
    rel_tol: f64,
) -> Result<f64, LinregError> {
    check_sample_shape(sample, instance)?;
    let svd = RowSpaceSvd::new(&sample.x, rel_tol);
    let q = svd.pseudo_apply(&sample.z);
    Ok(instance.sigma_quad(&q))
}

fn check_sample_shape(
    sample: &DesignSample,
    instance: &RegressionInstance,
) -> Result<(), LinregError> {
    if sample.d() != instance.dim() {
        return Err(LinregError::DimensionMismatch { expected: instance.dim(), got: sample.d() });
    }
    if sample.n() == 0 {
        return Err(LinregError::EmptySample);
    }
    Ok(())
}

fn require_overparameterized(instance: &RegressionInstance) -> Result<(), LinregError> {
    if instance.dim() <= instance.n {
        return Err(LinregError::NeedsOverparameterized { n: instance.n, d: instance.dim() });
    }
    Ok(())
}

/// Per-replicate absolute gap `|L_D - L_S|` at the flipped dataset: fit
/// the minimum-norm interpolator to `(X, 2 X beta - Y)` and compare its
/// exact population risk with its empirical risk on the original sample.
/// A Monte Carlo lower bound on the expected sup-gap of any hypothesis
/// set containing the flipped fit.
pub fn uc_failure_probe(
    instance: &RegressionInstance,
    plan: &RunPlan,
) -> Result<McEstimate, LinregError> {
    let samples = uc_failure_probe_samples(instance, plan)?;
    Ok(McEstimate::from_samples(&samples, plan.base_seed))
}

/// The raw per-replicate gaps behind [`uc_failure_probe`], in replicate
/// order (for table emission).
pub fn uc_failure_probe_samples(
    instance: &RegressionInstance,
    plan: &RunPlan,
) -> Result<Vec<f64>, LinregError> {
    require_overparameterized(instance)?;
    replicate_values(plan, |seed| {
        let sample = sample_design(instance, seed);
        let flipped = flip_adversary(&sample, &instance.beta);
        let fit = RowSpaceSvd::new(&sample.x, DEFAULT_SVD_REL_TOL).min_norm_solve(&flipped.y);
        let pop = population_risk(&fit, instance)?;
        let emp = empirical_risk(&fit, &sample.x, &sample.y)?;
        Ok((pop - emp).abs())
    })
}

/// Monte Carlo estimate of the variance-like trace term across fresh
/// designs.
pub fn risk_gap_mc(
    instance: &RegressionInstance,
    plan: &RunPlan,
) -> Result<McEstimate, LinregError> {
    require_overparameterized(instance)?;
    let samples = replicate_values(plan, |seed| {
        let sample = sample_design(instance, seed);
        risk_gap_trace(&sample, instance, DEFAULT_SVD_REL_TOL)
    })?;
    Ok(McEstimate::from_samples(&samples, plan.base_seed))
}

/// Evaluate a fallible per-replicate closure over a plan, in parallel,
/// returning values in replicate order.
fn replicate_values<F>(plan: &RunPlan, f: F) -> Result<Vec<f64>, LinregError>
where
    F: Fn(u64) -> Result<f64, LinregError> + Sync,
{
    if plan.replicates == 0 {
        return Err(LinregError::Mc(McError::EmptyPlan));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.max_parallelism.max(1))
        .build()
        .expect("thread pool construction");
    let results: Vec<Result<f64, LinregError>> = pool.install(|| {
        (0..plan.replicates)
            .into_par_iter()
            .map(|i| f(derive_seed(plan.base_seed, i)))
            .collect()
    });
    results.into_iter().collect()
}

/// Uniform bound on the surrogate class's generalization gap:
/// `C (sigma^2 + |beta|^2 lambda_max max(sqrt(r0), r0/sqrt(n))) / sqrt(n)`.
/// `C` is a free universal constant supplied by the caller.
pub fn surrogate_gap_bound(instance: &RegressionInstance, big_c: f64) -> f64 {
    let n = instance.n as f64;
    let r0 = instance.spectrum.effective_rank(0).expect("spectrum non-empty");
    let lambda_max = instance.spectrum.max_eigenvalue();
    let beta_sq = instance.beta.norm_squared();
    big_c * (instance.sigma * instance.sigma + beta_sq * lambda_max * r0.sqrt().max(r0 / n.sqrt()))
        / n.sqrt()
}

/// Expected-risk bound split into its pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskBound {
    pub kstar: usize,
    pub sgc_term: f64,
    pub variance_term: f64,
    pub total: f64,
}

/// `sigma^2 + surrogate_gap_bound + c sigma^2 (k*/n + n/R_{k*})`, with
/// free constants `C`, `c` and threshold constant `b` defining `k*`.
/// Errors when the finite spectrum has no critical index.
pub fn expected_risk_bound(
    instance: &RegressionInstance,
    big_c: f64,
    small_c: f64,
    b: f64,
) -> Result<RiskBound, LinregError> {
    let n = instance.n;
    let kstar = instance
        .spectrum
        .critical_index(n, b)
        .ok_or(LinregError::CriticalIndexMissing { n, b })?;
    let sgc_term = surrogate_gap_bound(instance, big_c);
    let stable = instance.spectrum.stable_rank(kstar)?;
    let sigma_sq = instance.sigma * instance.sigma;
    let variance_term = small_c * sigma_sq * (kstar as f64 / n as f64 + n as f64 / stable);
    Ok(RiskBound { kstar, sgc_term, variance_term, total: sigma_sq + sgc_term + variance_term })
}

// ---------------------------------------------------------------------
// Table emission
// ---------------------------------------------------------------------

pub const DECOMPOSITION_CSV_HEADER: &str =
    "replicate,term_emp_gap,term_risk_gap,term_surr_gen,LD_hat,LS_hat,identity_residual";

#[derive(Debug, Clone)]
pub struct DecompositionRow {
    pub replicate: u64,
    pub terms: DecompositionTerms,
    pub ld_hat: f64,
    pub ls_hat: f64,
    pub identity_residual: f64,
}

/// One decomposition row per replicate, each checked against its own
/// independently computed risks.
pub fn decomposition_table(
    instance: &RegressionInstance,
    plan: &RunPlan,
) -> Result<Vec<DecompositionRow>, LinregError> {
    let mut rows = Vec::with_capacity(plan.replicates as usize);
    for i in 0..plan.replicates {
        let seed = derive_seed(plan.base_seed, i);
        let sample = sample_design(instance, seed);
        let terms = surrogate_decomposition(&sample, instance, DEFAULT_SVD_REL_TOL)?;
        let beta_hat = RowSpaceSvd::new(&sample.x, DEFAULT_SVD_REL_TOL).min_norm_solve(&sample.y);
        let ld_hat = population_risk(&beta_hat, instance)?;
        let ls_hat = empirical_risk(&beta_hat, &sample.x, &sample.y)?;
        let identity_residual = terms.sum() - (ld_hat - ls_hat);
        rows.push(DecompositionRow { replicate: i, terms, ld_hat, ls_hat, identity_residual });
    }
    Ok(rows)
}

pub fn decomposition_csv(rows: &[DecompositionRow]) -> String {
    let body: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{}",
                r.replicate,
                fmt_real(r.terms.empirical_gap),
                fmt_real(r.terms.risk_gap),
                fmt_real(r.terms.surrogate_gen),
                fmt_real(r.ld_hat),
                fmt_real(r.ls_hat),
                fmt_real(r.identity_residual)
            )
        })
        .collect();
    csv_document(DECOMPOSITION_CSV_HEADER, &body)
}

pub const BOUND_CSV_HEADER: &str =
    "n,d,sigma,kstar,bound_total,bound_sgc_term,bound_variance_term";

#[derive(Debug, Clone)]
pub struct BoundRow {
    pub n: usize,
    pub d: usize,
    pub sigma: f64,
    pub bound: Option<RiskBound>,
}

/// Evaluate the expected-risk bound for each instance; rows whose
/// spectrum has no critical index are kept but marked undefined.
pub fn bound_table(
    instances: &[RegressionInstance],
    big_c: f64,
    small_c: f64,
    b: f64,
) -> Vec<BoundRow> {
    instances
        .iter()
        .map(|inst| {
            let bound = expected_risk_bound(inst, big_c, small_c, b).ok();
            BoundRow { n: inst.n, d: inst.dim(), sigma: inst.sigma, bound }
        })
        .collect()
}

pub fn bound_csv(rows: &[BoundRow]) -> String {
    let body: Vec<String> = rows
        .iter()
        .map(|r| match &r.bound {
            Some(bound) => format!(
                "{},{},{},{},{},{},{}",
                r.n,
                r.d,
                fmt_real(r.sigma),
                bound.kstar,
                fmt_real(bound.total),
                fmt_real(bound.sgc_term),
                fmt_real(bound.variance_term)
            ),
            None => {
                format!("{},{},{},none,undefined,undefined,undefined", r.n, r.d, fmt_real(r.sigma))
            }
        })
        .collect();
    csv_document(BOUND_CSV_HEADER, &body)
}

pub const PROBE_CSV_HEADER: &str = "replicate,seed,abs_gap";

pub fn probe_csv(base_seed: u64, gaps: &[f64]) -> String {
    let body: Vec<String> = gaps
        .iter()
        .enumerate()
        .map(|(i, g)| format!("{},{},{}", i, derive_seed(base_seed, i as u64), fmt_real(*g)))
        .collect();
    csv_document(PROBE_CSV_HEADER, &body)
}
