//! Seedable random source and the draw primitives used by the Gibbs steps.

mod special;
mod truncnorm;

pub use special::{digamma, gamma_logpdf, ln_gamma, norm_cdf, norm_pdf, norm_quantile, trigamma};
pub use truncnorm::sample_truncated_normal;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::Error;
use crate::model::Spd2;
use crate::Result;

/// Deterministic generator behind every sampler; a fixed seed fixes the
/// whole draw sequence.
pub type RandomSource = ChaCha8Rng;

/// Random source for one chain.
pub fn source(seed: u64) -> RandomSource {
    RandomSource::seed_from_u64(seed)
}

/// Standard normal draw.
pub fn sample_std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Gamma(shape, rate) draw.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    let g = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::InvalidParameter(format!("gamma({shape}, {rate}): {e}")))?;
    // Tiny shapes can underflow to exactly zero; retry the astronomically
    // rare event instead of handing a zero to a divisor.
    for _ in 0..100 {
        let x = g.sample(rng);
        if x > 0.0 {
            return Ok(x);
        }
    }
    Err(Error::RejectionBudget("gamma"))
}

/// Chi-square draw.
pub fn sample_chisq<R: Rng + ?Sized>(df: f64, rng: &mut R) -> Result<f64> {
    sample_gamma(df / 2.0, 0.5, rng)
}

/// Draw of `scale / chisq(df)`.
pub fn sample_scaled_inv_chisq<R: Rng + ?Sized>(df: f64, scale: f64, rng: &mut R) -> Result<f64> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidParameter(format!("scaled inverse chi-square scale = {scale}")));
    }
    Ok(scale / sample_chisq(df, rng)?)
}

/// Bivariate normal draw with the given mean and covariance.
pub fn sample_mvn2<R: Rng + ?Sized>(mu: (f64, f64), cov: Spd2, rng: &mut R) -> (f64, f64) {
    let (l11, l21, l22) = cov.chol_lower();
    let z1 = sample_std_normal(rng);
    let z2 = sample_std_normal(rng);
    (mu.0 + l11 * z1, mu.1 + l21 * z1 + l22 * z2)
}

/// Multivariate normal draw with the given mean and covariance.
pub fn sample_mvn<R: Rng + ?Sized>(
    mu: &DVector<f64>,
    cov: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if cov.nrows() != mu.len() || cov.ncols() != mu.len() {
        return Err(Error::DimensionMismatch(format!(
            "mean of length {} with {}x{} covariance",
            mu.len(),
            cov.nrows(),
            cov.ncols()
        )));
    }
    let chol = cov.clone().cholesky().ok_or(Error::NotSpd)?;
    let z = DVector::from_fn(mu.len(), |_, _| sample_std_normal(rng));
    Ok(mu + chol.l() * z)
}

/// Inverse-Wishart draw for a 2x2 scale matrix: the density is
/// `|S|^{-(df + 3)/2} exp(-tr(S^{-1} scale) / 2)`, so the mean is
/// `scale / (df - 3)` once `df > 3`. Uses the Bartlett factorization of the
/// Wishart-distributed inverse.
pub fn sample_inverse_wishart2<R: Rng + ?Sized>(
    df: f64,
    scale: Spd2,
    rng: &mut R,
) -> Result<Spd2> {
    if !(df > 1.0) || !df.is_finite() {
        return Err(Error::InvalidParameter(format!("inverse-Wishart df = {df}")));
    }
    let (l11, l21, l22) = scale.inverse().chol_lower();
    let c1 = sample_chisq(df, rng)?.sqrt();
    let c2 = sample_chisq(df - 1.0, rng)?.sqrt();
    let n21 = sample_std_normal(rng);
    // W = (L A)(L A)' with A = [[c1, 0], [n21, c2]] lower triangular.
    let p = l11 * c1;
    let r = l21 * c1 + l22 * n21;
    let s = l22 * c2;
    let w = Spd2 { a11: p * p, a12: p * r, a22: r * r + s * s };
    let inv = w.inverse();
    Spd2::new(inv.a11, inv.a12, inv.a22)
}
