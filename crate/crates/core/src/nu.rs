//! Metropolized independence sampler for the degrees of freedom.
//!
//! Given the mixture weights and expansion scale, the full conditional of
//! `nu` has log kernel
//!
//! ```text
//! l(nu) = (N nu / 2) log(nu / 2) - N log Gamma(nu / 2)
//!         + (alpha0 - 1) log nu - xi nu
//! ```
//!
//! with `xi` a scalar statistic of the weights. A Gamma density is matched
//! to the kernel's interior mode and curvature there, then used as the
//! independence proposal; the Metropolis ratio corrects the residual
//! mismatch, so acceptance stays near one.

use rand::Rng;

use crate::distributions::{digamma, gamma_logpdf, ln_gamma, sample_gamma, trigamma};
use crate::error::Error;
use crate::Result;

/// Hard support for the degrees of freedom; candidates outside are rejected.
pub const NU_MIN: f64 = 1e-3;
pub const NU_MAX: f64 = 1e6;

/// Gamma proposal whose mode `(alpha_star - 1) / beta_star` and log-density
/// curvature at that mode agree with the conditional's.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuProposal {
    pub alpha_star: f64,
    pub beta_star: f64,
    /// Interior mode of the conditional.
    pub mode: f64,
}

/// Weight statistic entering the conditional:
/// `beta0 + N log(alpha) / 2 + sum q_i / (2 alpha) - sum log(q_i) / 2`.
pub fn xi_stat(q: &[f64], alpha: f64, beta0: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha = {alpha}")));
    }
    let mut acc = beta0 + q.len() as f64 * alpha.ln() / 2.0;
    for (i, &qi) in q.iter().enumerate() {
        if !(qi > 0.0) || !qi.is_finite() {
            return Err(Error::InvalidParameter(format!("q[{i}] = {qi}")));
        }
        acc += qi / (2.0 * alpha) - qi.ln() / 2.0;
    }
    Ok(acc)
}

/// Log kernel of the conditional; `-inf` outside `nu > 0`.
pub fn log_cond_nu(nu: f64, n: usize, xi: f64, alpha0: f64) -> f64 {
    if !(nu > 0.0) {
        return f64::NEG_INFINITY;
    }
    let half = nu / 2.0;
    let nf = n as f64;
    nf * half * half.ln() - nf * ln_gamma(half) + (alpha0 - 1.0) * nu.ln() - xi * nu
}

/// First derivative of the log kernel.
fn d_log_cond(nu: f64, n: usize, xi: f64, alpha0: f64) -> f64 {
    let nf = n as f64;
    nf / 2.0 * ((nu / 2.0).ln() + 1.0 - digamma(nu / 2.0)) + (alpha0 - 1.0) / nu - xi
}

/// Second derivative of the log kernel; `xi` drops out.
fn dd_log_cond(nu: f64, n: usize, alpha0: f64) -> f64 {
    let nf = n as f64;
    nf / (2.0 * nu) - nf / 4.0 * trigamma(nu / 2.0) - (alpha0 - 1.0) / (nu * nu)
}

/// Locates the conditional's interior mode by safeguarded Newton iteration
/// on `log nu` (bisection step whenever Newton leaves the bracket) and
/// returns the matched Gamma proposal. `nu_init` seeds the search, normally
/// with the chain's current value.
pub fn gamma_approx(n: usize, xi: f64, alpha0: f64, nu_init: f64) -> Result<NuProposal> {
    if !xi.is_finite() {
        return Err(Error::NonFinite("xi"));
    }
    if !(alpha0 > 0.0) || !alpha0.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha0 = {alpha0}")));
    }
    let dlo = d_log_cond(NU_MIN, n, xi, alpha0);
    let dhi = d_log_cond(NU_MAX, n, xi, alpha0);
    if !(dlo > 0.0 && dhi < 0.0) {
        return Err(Error::ModeNotFound { lo: NU_MIN, hi: NU_MAX, dlo, dhi });
    }

    let (mut lo, mut hi) = (NU_MIN, NU_MAX);
    let mut nu = nu_init.clamp(NU_MIN, NU_MAX);
    let mut d1 = d_log_cond(nu, n, xi, alpha0);
    for _ in 0..500 {
        if d1.abs() <= 1e-10 {
            break;
        }
        if d1 > 0.0 {
            lo = nu;
        } else {
            hi = nu;
        }
        let d2 = dd_log_cond(nu, n, alpha0);
        // Newton on t = log nu: dl/dt = nu l', d2l/dt2 relates via nu l''.
        let mut next = if d2 < 0.0 { (nu.ln() - d1 / (d2 * nu)).exp() } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = (lo * hi).sqrt();
        }
        if next == nu {
            break;
        }
        nu = next;
        d1 = d_log_cond(nu, n, xi, alpha0);
    }

    let curv = dd_log_cond(nu, n, alpha0);
    if !(curv < 0.0) {
        return Err(Error::ModeNotFound { lo, hi, dlo, dhi });
    }
    Ok(NuProposal { alpha_star: 1.0 - nu * nu * curv, beta_star: -nu * curv, mode: nu })
}

/// One Metropolized independence step. Draws a Gamma candidate, rejects it
/// outside the hard support, otherwise accepts with probability
/// `min(1, [f(cand) / g(cand)] / [f(nu) / g(nu)])` computed in log space.
/// Returns the new value and whether the candidate was accepted.
pub fn mis_update<R: Rng + ?Sized>(
    nu: f64,
    proposal: NuProposal,
    n: usize,
    xi: f64,
    alpha0: f64,
    rng: &mut R,
) -> Result<(f64, bool)> {
    let cand = sample_gamma(proposal.alpha_star, proposal.beta_star, rng)?;
    if !(NU_MIN..=NU_MAX).contains(&cand) {
        return Ok((nu, false));
    }
    let lg = |v: f64| gamma_logpdf(v, proposal.alpha_star, proposal.beta_star);
    let log_ratio =
        log_cond_nu(cand, n, xi, alpha0) - lg(cand) - (log_cond_nu(nu, n, xi, alpha0) - lg(nu));
    if log_ratio >= 0.0 || (1.0 - rng.gen::<f64>()).ln() < log_ratio {
        Ok((cand, true))
    } else {
        Ok((nu, false))
    }
}
