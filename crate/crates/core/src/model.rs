//! Model primitives: data records, restricted covariance structures,
//! parameter and latent state, and the complete-data log likelihood.
//!
//! The bivariate error of record `i` is `(eps_i, eta_i) ~ N2(0, alpha/q_i * Omega)`
//! with `q_i ~ alpha * chisq(nu) / nu`; integrating the weights out gives a
//! bivariate t. `Omega` carries the identification restriction: unit selection
//! variance for the continuous models, unit diagonal for the binary ones.

use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::Result;

/// Largest correlation magnitude kept after a covariance update.
pub const RHO_CLAMP: f64 = 1.0 - 1e-9;

/// One data row. `y` is present exactly when `u` is true; for the binary
/// models a present `y` must be 0.0 or 1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedRecord {
    pub u: bool,
    pub y: Option<f64>,
    /// Outcome-equation covariates, common length `k` across a dataset.
    pub x: Vec<f64>,
    /// Selection-equation covariates, common length `l` across a dataset.
    pub w: Vec<f64>,
}

/// Checks a dataset for consistent covariate lengths and the selection and
/// outcome pattern, returning `(k, l)`.
pub fn validate_records(records: &[ObservedRecord], binary: bool) -> Result<(usize, usize)> {
    let first = records.first().ok_or(Error::EmptyDataset)?;
    let (k, l) = (first.x.len(), first.w.len());
    if k == 0 || l == 0 {
        return Err(Error::DimensionMismatch("empty covariate vector".into()));
    }
    for (i, r) in records.iter().enumerate() {
        if r.x.len() != k || r.w.len() != l {
            return Err(Error::DimensionMismatch(format!(
                "record {i} has covariate lengths ({}, {}), expected ({k}, {l})",
                r.x.len(),
                r.w.len()
            )));
        }
        if r.x.iter().chain(r.w.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidRecord { index: i, reason: "non-finite covariate".into() });
        }
        match (r.u, r.y) {
            (true, None) => {
                return Err(Error::InvalidRecord { index: i, reason: "selected but no outcome".into() })
            }
            (false, Some(_)) => {
                return Err(Error::InvalidRecord { index: i, reason: "outcome present but unselected".into() })
            }
            (true, Some(y)) => {
                if !y.is_finite() {
                    return Err(Error::InvalidRecord { index: i, reason: "non-finite outcome".into() });
                }
                if binary && y != 0.0 && y != 1.0 {
                    return Err(Error::InvalidRecord {
                        index: i,
                        reason: format!("binary outcome must be 0 or 1, got {y}"),
                    });
                }
            }
            (false, None) => {}
        }
    }
    Ok((k, l))
}

/// Symmetric positive-definite 2x2 matrix, stored as its upper triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spd2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Spd2 {
    pub fn new(a11: f64, a12: f64, a22: f64) -> Result<Self> {
        let m = Spd2 { a11, a12, a22 };
        if !(a11.is_finite() && a12.is_finite() && a22.is_finite()) {
            return Err(Error::NonFinite("Spd2"));
        }
        if a11 <= 0.0 || a22 <= 0.0 || m.det() <= 0.0 {
            return Err(Error::NotSpd);
        }
        Ok(m)
    }

    pub fn det(self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn inverse(self) -> Spd2 {
        let d = self.det();
        Spd2 { a11: self.a22 / d, a12: -self.a12 / d, a22: self.a11 / d }
    }

    /// Lower Cholesky factor `(l11, l21, l22)` with `A = L L'`.
    pub fn chol_lower(self) -> (f64, f64, f64) {
        let l11 = self.a11.sqrt();
        let l21 = self.a12 / l11;
        let l22 = (self.a22 - l21 * l21).sqrt();
        (l11, l21, l22)
    }

    /// Quadratic form `e' A^{-1} e` for `e = (e1, e2)`.
    pub fn inv_quad(self, e1: f64, e2: f64) -> f64 {
        (self.a22 * e1 * e1 - 2.0 * self.a12 * e1 * e2 + self.a11 * e2 * e2) / self.det()
    }
}

/// Covariance of the continuous-outcome models: free outcome variance and
/// correlation, selection variance pinned to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestrictedCov {
    sigma1_sq: f64,
    rho: f64,
}

impl RestrictedCov {
    /// Builds the covariance, clamping `|rho|` to [RHO_CLAMP].
    pub fn new(sigma1_sq: f64, rho: f64) -> Result<Self> {
        if !sigma1_sq.is_finite() || sigma1_sq <= 0.0 {
            return Err(Error::InvalidParameter(format!("sigma1_sq = {sigma1_sq}")));
        }
        if !rho.is_finite() || rho.abs() > 1.0 {
            return Err(Error::InvalidParameter(format!("rho = {rho}")));
        }
        Ok(RestrictedCov { sigma1_sq, rho: rho.clamp(-RHO_CLAMP, RHO_CLAMP) })
    }

    pub fn sigma1_sq(self) -> f64 {
        self.sigma1_sq
    }

    pub fn sigma1(self) -> f64 {
        self.sigma1_sq.sqrt()
    }

    pub fn rho(self) -> f64 {
        self.rho
    }

    pub fn omega(self) -> Spd2 {
        let s1 = self.sigma1();
        Spd2 { a11: self.sigma1_sq, a12: self.rho * s1, a22: 1.0 }
    }
}

/// Correlation matrix of the binary-outcome models: unit diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrMatrix {
    rho: f64,
}

impl CorrMatrix {
    /// Builds the correlation, clamping `|rho|` to [RHO_CLAMP].
    pub fn new(rho: f64) -> Result<Self> {
        if !rho.is_finite() || rho.abs() > 1.0 {
            return Err(Error::InvalidParameter(format!("rho = {rho}")));
        }
        Ok(CorrMatrix { rho: rho.clamp(-RHO_CLAMP, RHO_CLAMP) })
    }

    pub fn rho(self) -> f64 {
        self.rho
    }

    pub fn omega(self) -> Spd2 {
        Spd2 { a11: 1.0, a12: self.rho, a22: 1.0 }
    }
}

/// Error covariance in either restriction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovState {
    Restricted(RestrictedCov),
    Correlation(CorrMatrix),
}

impl CovState {
    pub fn omega(self) -> Spd2 {
        match self {
            CovState::Restricted(c) => c.omega(),
            CovState::Correlation(c) => c.omega(),
        }
    }

    pub fn rho(self) -> f64 {
        match self {
            CovState::Restricted(c) => c.rho(),
            CovState::Correlation(c) => c.rho(),
        }
    }

    pub fn sigma1(self) -> f64 {
        match self {
            CovState::Restricted(c) => c.sigma1(),
            CovState::Correlation(_) => 1.0,
        }
    }
}

/// Which of the four samplers is running.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelVariant {
    SelectionNormal,
    SelectionT,
    SelectionProbit,
    SelectionRobit,
}

impl ModelVariant {
    /// True for the heavy-tailed variants that sample mixture weights and nu.
    pub fn is_t(self) -> bool {
        matches!(self, ModelVariant::SelectionT | ModelVariant::SelectionRobit)
    }

    /// True for the binary-outcome variants.
    pub fn is_binary(self) -> bool {
        matches!(self, ModelVariant::SelectionProbit | ModelVariant::SelectionRobit)
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::SelectionNormal => "selection",
            ModelVariant::SelectionT => "selection-t",
            ModelVariant::SelectionProbit => "selection-probit",
            ModelVariant::SelectionRobit => "selection-robit",
        }
    }
}

/// Prior hyperparameters shared by all four samplers.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    /// Prior mean of the stacked coefficients, length `k + l`.
    pub mu0: DVector<f64>,
    /// Prior covariance of the stacked coefficients.
    pub sigma0: DMatrix<f64>,
    /// Inverse-Wishart degrees of freedom for the expanded covariance.
    pub nu0: f64,
    /// Gamma shape for nu.
    pub alpha0: f64,
    /// Gamma rate for nu.
    pub beta0: f64,
    /// Scaled inverse chi-square numerator for alpha.
    pub b: f64,
    /// Scaled inverse chi-square degrees of freedom for alpha.
    pub c: f64,
}

impl PriorSpec {
    /// Diffuse default: `mu0 = 0`, `sigma0 = 100 I`, `nu0 = 3`, `alpha0 = 1`,
    /// `beta0 = 0.1`, `b = c = 0.1`.
    pub fn default_for(dim: usize) -> Self {
        PriorSpec {
            mu0: DVector::zeros(dim),
            sigma0: DMatrix::identity(dim, dim) * 100.0,
            nu0: 3.0,
            alpha0: 1.0,
            beta0: 0.1,
            b: 0.1,
            c: 0.1,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.mu0.len() != dim || self.sigma0.nrows() != dim || self.sigma0.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "prior sized for {} coefficients, model has {dim}",
                self.mu0.len()
            )));
        }
        if self.sigma0.clone().cholesky().is_none() {
            return Err(Error::NotSpd);
        }
        if !(self.nu0 >= 3.0) {
            return Err(Error::InvalidParameter(format!("nu0 = {} (need >= 3)", self.nu0)));
        }
        for (name, v) in [("alpha0", self.alpha0), ("beta0", self.beta0), ("b", self.b), ("c", self.c)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} = {v}")));
            }
        }
        Ok(())
    }
}

/// Current parameter block. `delta` stacks the outcome coefficients (first
/// `k` entries) over the selection coefficients (last `l`). `nu` is
/// `f64::INFINITY` for the normal-error variants.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamState {
    pub delta: Vec<f64>,
    pub cov: CovState,
    pub nu: f64,
}

impl ParamState {
    pub fn beta(&self, k: usize) -> &[f64] {
        &self.delta[..k]
    }

    pub fn gamma(&self, k: usize) -> &[f64] {
        &self.delta[k..]
    }
}

/// Per-record augmentation: latent outcome and selection values, mixture
/// weights, and the expansion scale. Weights stay at 1 and alpha at 1 for
/// the normal-error variants.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState {
    pub ystar: Vec<f64>,
    pub ustar: Vec<f64>,
    pub q: Vec<f64>,
    pub alpha: f64,
}

/// Block design matrix of one record: row 0 is `[x', 0]`, row 1 is `[0, w']`,
/// so that `V * delta = (x'beta, w'gamma)`.
pub fn design_row(rec: &ObservedRecord) -> DMatrix<f64> {
    let (k, l) = (rec.x.len(), rec.w.len());
    let mut v = DMatrix::zeros(2, k + l);
    for (j, &xj) in rec.x.iter().enumerate() {
        v[(0, j)] = xj;
    }
    for (j, &wj) in rec.w.iter().enumerate() {
        v[(1, k + j)] = wj;
    }
    v
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Linear predictors `(x'beta, w'gamma)` of one record.
pub fn linear_predictors(rec: &ObservedRecord, delta: &[f64]) -> (f64, f64) {
    let k = rec.x.len();
    (dot(&rec.x, &delta[..k]), dot(&rec.w, &delta[k..]))
}

/// Conditional mean/variance pairs of one latent coordinate given the other,
/// under `(ystar, ustar) ~ N2((x'beta, w'gamma), alpha/q * Omega)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CondMoments {
    pub mean_u_given_y: f64,
    pub var_u_given_y: f64,
    pub mean_y_given_u: f64,
    pub var_y_given_u: f64,
}

/// Conditional moments for the continuous-outcome covariance.
pub fn conditional_moments_continuous(
    cov: RestrictedCov,
    xb: f64,
    wg: f64,
    ystar: f64,
    ustar: f64,
    q: f64,
    alpha: f64,
) -> Result<CondMoments> {
    if !(q > 0.0) {
        return Err(Error::InvalidParameter(format!("q = {q}")));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha}")));
    }
    let (s1, rho) = (cov.sigma1(), cov.rho());
    if rho.abs() >= 1.0 {
        return Err(Error::DegenerateCorrelation);
    }
    let shrink = alpha / q * (1.0 - rho * rho);
    Ok(CondMoments {
        mean_u_given_y: wg + rho * (ystar - xb) / s1,
        var_u_given_y: shrink,
        mean_y_given_u: xb + rho * s1 * (ustar - wg),
        var_y_given_u: shrink * cov.sigma1_sq(),
    })
}

/// Conditional moments for the binary-outcome correlation (both latent
/// variances are one before scaling by `alpha/q`).
pub fn conditional_moments_binary(
    corr: CorrMatrix,
    xb: f64,
    wg: f64,
    ystar: f64,
    ustar: f64,
    q: f64,
    alpha: f64,
) -> Result<CondMoments> {
    let cov = RestrictedCov::new(1.0, corr.rho())?;
    conditional_moments_continuous(cov, xb, wg, ystar, ustar, q, alpha)
}

/// Joint log density of the latent pairs and mixture weights given the
/// parameters, dropping the `(2 pi)^{-n}` constant:
///
/// ```text
/// -(n + n nu / 2) log alpha + (n nu / 2) log(nu / 2) - n log Gamma(nu / 2)
/// - (n / 2) log |Omega| - 1/(2 alpha) sum_i q_i d_i
/// + sum_i [ (nu / 2) log q_i - nu q_i / (2 alpha) ]
/// ```
///
/// with `d_i` the `Omega^{-1}` quadratic form of the record residual. For
/// infinite `nu` (normal-error variants) the weight terms vanish and the
/// alpha exponent is `-n`.
pub fn complete_data_loglik(
    records: &[ObservedRecord],
    latent: &LatentState,
    params: &ParamState,
) -> Result<f64> {
    let n = records.len();
    if latent.ystar.len() != n || latent.ustar.len() != n || latent.q.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "latent state sized for {} records, dataset has {n}",
            latent.ystar.len()
        )));
    }
    let alpha = latent.alpha;
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha}")));
    }
    let nu = params.nu;
    let omega = params.cov.omega();
    let nf = n as f64;

    let mut quad = 0.0;
    let mut log_q = 0.0;
    let mut sum_q = 0.0;
    for (i, rec) in records.iter().enumerate() {
        let (xb, wg) = linear_predictors(rec, &params.delta);
        let q = latent.q[i];
        if !(q > 0.0) {
            return Err(Error::InvalidParameter(format!("q[{i}] = {q}")));
        }
        quad += q * omega.inv_quad(latent.ystar[i] - xb, latent.ustar[i] - wg);
        log_q += q.ln();
        sum_q += q;
    }

    let base = -(nf / 2.0) * omega.det().ln() - quad / (2.0 * alpha);
    if nu.is_infinite() {
        return Ok(base - nf * alpha.ln());
    }
    if !(nu > 0.0) {
        return Err(Error::InvalidParameter(format!("nu = {nu}")));
    }
    let half_nu = nu / 2.0;
    Ok(base - (nf + nf * half_nu) * alpha.ln() + nf * half_nu * half_nu.ln()
        - nf * crate::distributions::ln_gamma(half_nu)
        + half_nu * log_q
        - nu * sum_q / (2.0 * alpha))
}

/// Log density of the bivariate t with location `mu`, scale `omega`, and
/// `nu` degrees of freedom, evaluated at `t`.
pub fn t2_logpdf(t: (f64, f64), mu: (f64, f64), omega: Spd2, nu: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::InvalidParameter(format!("nu = {nu}")));
    }
    let d = omega.inv_quad(t.0 - mu.0, t.1 - mu.1);
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    Ok(-ln2pi - 0.5 * omega.det().ln() - (nu + 2.0) / 2.0 * (d / nu).ln_1p())
}
