//! Imputation and posterior steps specific to the binary-outcome models.

use rand::Rng;

use crate::distributions::{
    sample_inverse_wishart2, sample_scaled_inv_chisq, sample_std_normal, sample_truncated_normal,
};
use crate::error::Error;
use crate::model::{
    conditional_moments_binary, linear_predictors, CorrMatrix, LatentState, ObservedRecord,
    PriorSpec, Spd2,
};
use crate::Result;

use super::{
    chain_setup, impute_q, initial_latents, negative, positive, post_alpha, post_delta,
    refresh_alpha, update_nu, ChainConfig, ChainDraws, INITIAL_NU,
};

/// Latent pair for one record. Selected records run one Gibbs alternation,
/// the selection latent given the current outcome latent and then the
/// outcome latent given the new selection latent, each truncated to the side
/// its indicator requires. Unselected records draw the selection latent
/// below zero from its marginal and the outcome latent untruncated.
pub fn impute_latent_binary<R: Rng + ?Sized>(
    rec: &ObservedRecord,
    corr: CorrMatrix,
    delta: &[f64],
    ystar: f64,
    q: f64,
    alpha: f64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let (xb, wg) = linear_predictors(rec, delta);
    if rec.u {
        let y = rec
            .y
            .ok_or_else(|| Error::InvalidParameter("selected record without an outcome".into()))?;
        let m = conditional_moments_binary(corr, xb, wg, ystar, 0.0, q, alpha)?;
        let ustar = positive(sample_truncated_normal(
            m.mean_u_given_y,
            m.var_u_given_y,
            0.0,
            f64::INFINITY,
            rng,
        )?);
        let m = conditional_moments_binary(corr, xb, wg, 0.0, ustar, q, alpha)?;
        let next = if y > 0.0 {
            positive(sample_truncated_normal(
                m.mean_y_given_u,
                m.var_y_given_u,
                0.0,
                f64::INFINITY,
                rng,
            )?)
        } else {
            negative(sample_truncated_normal(
                m.mean_y_given_u,
                m.var_y_given_u,
                f64::NEG_INFINITY,
                0.0,
                rng,
            )?)
        };
        Ok((next, ustar))
    } else {
        let ustar =
            negative(sample_truncated_normal(wg, alpha / q, f64::NEG_INFINITY, 0.0, rng)?);
        let m = conditional_moments_binary(corr, xb, wg, 0.0, ustar, q, alpha)?;
        let next = m.mean_y_given_u + m.var_y_given_u.sqrt() * sample_std_normal(rng);
        Ok((next, ustar))
    }
}

/// Correlation draw through the expanded model: both latent scales are drawn
/// from `1/{(1 - rho^2) chisq(nu0)}`, outcome scale first, the residuals are
/// rescaled to `E_i = diag(sigma1, sigma2)(Z_i - V_i delta)`, the
/// unrestricted covariance is drawn from
/// `IW(N + nu0, sum q_i E_i E_i' / alpha + I)`, and normalizing to unit
/// diagonal lands back on the correlation form.
pub fn post_corr_px<R: Rng + ?Sized>(
    records: &[ObservedRecord],
    latent: &LatentState,
    delta: &[f64],
    corr: CorrMatrix,
    prior: &PriorSpec,
    rng: &mut R,
) -> Result<CorrMatrix> {
    let rho = corr.rho();
    let cond_scale = 1.0 / (1.0 - rho * rho);
    let s1 = sample_scaled_inv_chisq(prior.nu0, cond_scale, rng)?.sqrt();
    let s2 = sample_scaled_inv_chisq(prior.nu0, cond_scale, rng)?.sqrt();
    let (mut s11, mut s12, mut s22) = (0.0, 0.0, 0.0);
    for (i, rec) in records.iter().enumerate() {
        let (xb, wg) = linear_predictors(rec, delta);
        let e1 = s1 * (latent.ystar[i] - xb);
        let e2 = s2 * (latent.ustar[i] - wg);
        let w = latent.q[i] / latent.alpha;
        s11 += w * e1 * e1;
        s12 += w * e1 * e2;
        s22 += w * e2 * e2;
    }
    let scale = Spd2::new(s11 + 1.0, s12, s22 + 1.0)?;
    let sigma = sample_inverse_wishart2(records.len() as f64 + prior.nu0, scale, rng)?;
    CorrMatrix::new(sigma.a12 / (sigma.a11 * sigma.a22).sqrt())
}

/// One full chain for the selection model with binary outcomes, normal or t
/// errors by variant. Both latent equations carry unit variance, so the
/// retained draws are the coefficients, the correlation, and the degrees of
/// freedom; the normal variant skips the expansion-scale, mixture-weight,
/// and degrees-of-freedom steps and reports `nu` as infinite.
pub fn run_chain_binary(
    records: &[ObservedRecord],
    prior: &PriorSpec,
    config: &ChainConfig,
) -> Result<ChainDraws> {
    if !config.variant.is_binary() {
        return Err(Error::InvalidParameter(format!(
            "{} needs the continuous-outcome runner",
            config.variant.name()
        )));
    }
    let (k, l, mut rng, mut warnings) = chain_setup(records, prior, config, true)?;
    let selected_y: Vec<bool> =
        records.iter().filter(|r| r.u).map(|r| r.y.unwrap_or(0.0) > 0.0).collect();
    if !selected_y.is_empty() && selected_y.iter().all(|&b| b == selected_y[0]) {
        warnings.push(format!(
            "all {} observed outcomes are {}; the outcome equation is weakly identified by \
             the data",
            selected_y.len(),
            u8::from(selected_y[0])
        ));
    }
    let is_t = config.variant.is_t();
    let cap = (config.iterations - config.burnin).div_ceil(config.thin);
    let mut draws = ChainDraws::new(config.variant, k, l, cap);
    draws.warnings = warnings;

    let mut latent = initial_latents(records, true);
    let mut delta = vec![0.0; k + l];
    let mut corr = CorrMatrix::new(0.0)?;
    let mut nu = if is_t { INITIAL_NU } else { f64::INFINITY };

    for iter in 0..config.iterations {
        if is_t {
            refresh_alpha(&mut latent, prior, config.variant, &mut rng)?;
        }
        for (i, rec) in records.iter().enumerate() {
            let (ys, us) = impute_latent_binary(
                rec,
                corr,
                &delta,
                latent.ystar[i],
                latent.q[i],
                latent.alpha,
                &mut rng,
            )?;
            latent.ystar[i] = ys;
            latent.ustar[i] = us;
            debug_assert!(rec.u == (us > 0.0));
            debug_assert!(!rec.u || rec.y.map_or(false, |y| (y > 0.0) == (ys > 0.0)));
        }
        if is_t {
            impute_q(records, &mut latent, &delta, corr.omega(), nu, &mut rng)?;
            latent.alpha =
                post_alpha(records, &latent, &delta, corr.omega(), prior, nu, &mut rng)?;
        }
        delta = post_delta(records, &latent, corr.omega(), prior, &mut rng)?;
        corr = post_corr_px(records, &latent, &delta, corr, prior, &mut rng)?;
        if is_t {
            let (next, accepted) = update_nu(&latent, prior, nu, &mut rng)?;
            nu = next;
            if iter >= config.burnin {
                draws.nu_proposed += 1;
                draws.nu_accepted += u64::from(accepted);
            }
        }
        if config.keep(iter) {
            draws.push(iter, &delta, None, corr.rho(), nu)?;
        }
    }
    Ok(draws)
}
