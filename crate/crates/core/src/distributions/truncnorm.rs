//! Truncated normal sampling that stays exact however far out the
//! truncation sits.
//!
//! Central intervals invert the normal CDF on a uniform drawn between the
//! endpoint probabilities. Once the whole interval lies beyond
//! [`TAIL_SPLIT`] standard deviations that difference underflows, so the
//! sampler switches to rejection: a shifted exponential proposal with the
//! optimal rate for wide intervals, a uniform proposal for slivers. Both
//! keep their acceptance probability bounded below regardless of how far
//! out the interval is, so an eight-sigma truncation costs the same handful
//! of uniforms as a one-sigma one.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::special::{norm_cdf, norm_quantile};
use crate::error::Error;
use crate::Result;

/// Standardized truncation point beyond which rejection replaces CDF
/// inversion.
const TAIL_SPLIT: f64 = 4.0;

const MAX_REJECT: usize = 10_000;

/// Draws from `N(mu, sigma_sq)` conditioned on `lower <= z <= upper`.
/// Either bound may be infinite.
pub fn sample_truncated_normal<R: Rng + ?Sized>(
    mu: f64,
    sigma_sq: f64,
    lower: f64,
    upper: f64,
    rng: &mut R,
) -> Result<f64> {
    if !mu.is_finite() || !sigma_sq.is_finite() || !(sigma_sq > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "truncated normal with mu = {mu}, sigma_sq = {sigma_sq}"
        )));
    }
    if !(lower < upper) {
        return Err(Error::InvalidParameter(format!(
            "truncation interval [{lower}, {upper}]"
        )));
    }
    let sigma = sigma_sq.sqrt();
    let a = (lower - mu) / sigma;
    let b = (upper - mu) / sigma;
    let z = sample_standardized(a, b, rng)?;
    Ok((mu + sigma * z).clamp(lower, upper))
}

fn sample_standardized<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    if a == f64::NEG_INFINITY && b == f64::INFINITY {
        return Ok(StandardNormal.sample(rng));
    }
    if a >= TAIL_SPLIT {
        return right_tail(a, b, rng);
    }
    if b <= -TAIL_SPLIT {
        return right_tail(-b, -a, rng).map(|z| -z);
    }

    let pa = if a == f64::NEG_INFINITY { 0.0 } else { norm_cdf(a) };
    let pb = if b == f64::INFINITY { 1.0 } else { norm_cdf(b) };
    let width = pb - pa;
    if width <= 0.0 {
        // Interval narrower than CDF resolution; both ends are finite here.
        return Ok(0.5 * (a + b));
    }
    let u = pa + width * rng.gen::<f64>();
    Ok(norm_quantile(u).clamp(a, b))
}

/// Rejection sampling on `[a, b]` with `a >= TAIL_SPLIT`, `b` possibly
/// infinite.
fn right_tail<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    let rate = 0.5 * (a + (a * a + 4.0).sqrt());
    if b.is_finite() && rate * (b - a) < 0.5 {
        // Narrow sliver: the density is nearly flat across it.
        for _ in 0..MAX_REJECT {
            let z = a + (b - a) * rng.gen::<f64>();
            if open01(rng).ln() <= 0.5 * (a - z) * (a + z) {
                return Ok(z);
            }
        }
    } else {
        for _ in 0..MAX_REJECT {
            let z = a - open01(rng).ln() / rate;
            if z > b {
                continue;
            }
            let t = z - rate;
            if open01(rng).ln() <= -0.5 * t * t {
                return Ok(z);
            }
        }
    }
    Err(Error::RejectionBudget("truncated normal tail"))
}

/// Uniform on (0, 1]; safe under `ln`.
fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.gen::<f64>()
}
