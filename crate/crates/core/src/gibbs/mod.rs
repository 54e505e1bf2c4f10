//! Gibbs chains over the augmented model, and the update steps they share.
//!
//! A sweep runs the imputation block (expansion scale from its prior, latent
//! pairs, mixture weights) and then the posterior block (scale, coefficients,
//! covariance through the expanded inverse-Wishart step, degrees of freedom).
//! The normal-error variants skip every weight- and nu-related step. The
//! continuous and binary runners differ only in how latents are imputed and
//! in which covariance restriction the expanded draw is mapped back to.

pub mod binary;
pub mod continuous;

use nalgebra::DVector;
use rand::Rng;

use crate::distributions::{
    sample_scaled_inv_chisq, sample_std_normal, source, RandomSource,
};
use crate::error::Error;
use crate::model::{
    linear_predictors, LatentState, ModelVariant, ObservedRecord, PriorSpec, Spd2,
};
use crate::nu::{gamma_approx, mis_update, xi_stat};
use crate::Result;

/// Sweep schedule and identity of one chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burnin: usize,
    pub thin: usize,
    pub seed: u64,
    pub variant: ModelVariant,
}

impl ChainConfig {
    /// Config with the default 20% burn-in and no thinning.
    pub fn new(iterations: usize, seed: u64, variant: ModelVariant) -> Self {
        ChainConfig { iterations, burnin: iterations / 5, thin: 1, seed, variant }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations = 0".into()));
        }
        if self.burnin >= self.iterations {
            return Err(Error::InvalidParameter(format!(
                "burnin {} >= iterations {}",
                self.burnin, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidParameter("thin = 0".into()));
        }
        Ok(())
    }

    fn keep(&self, iter: usize) -> bool {
        iter >= self.burnin && (iter - self.burnin) % self.thin == 0
    }
}

/// Post-burn-in, thinned draws of one chain, stored as one column per
/// parameter, plus the nu-proposal counts over post-burn-in sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDraws {
    pub variant: ModelVariant,
    pub k: usize,
    pub l: usize,
    pub beta: Vec<Vec<f64>>,
    pub gamma: Vec<Vec<f64>>,
    /// Empty for the binary variants (no free outcome scale).
    pub sigma1: Vec<f64>,
    pub rho: Vec<f64>,
    /// Constant `inf` for the normal-error variants.
    pub nu: Vec<f64>,
    /// Sweep index of each retained draw.
    pub kept_iters: Vec<usize>,
    pub nu_proposed: u64,
    pub nu_accepted: u64,
    pub warnings: Vec<String>,
}

impl ChainDraws {
    fn new(variant: ModelVariant, k: usize, l: usize, capacity: usize) -> Self {
        ChainDraws {
            variant,
            k,
            l,
            beta: vec![Vec::with_capacity(capacity); k],
            gamma: vec![Vec::with_capacity(capacity); l],
            sigma1: if variant.is_binary() { Vec::new() } else { Vec::with_capacity(capacity) },
            rho: Vec::with_capacity(capacity),
            nu: Vec::with_capacity(capacity),
            kept_iters: Vec::with_capacity(capacity),
            nu_proposed: 0,
            nu_accepted: 0,
            warnings: Vec::new(),
        }
    }

    /// Number of retained draws.
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// Column labels in draw order: `beta_*`, `gamma_*`, `sigma1` (continuous
    /// variants), `rho`, `nu`.
    pub fn parameter_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.k + self.l + 3);
        for j in 0..self.k {
            names.push(format!("beta_{j}"));
        }
        for j in 0..self.l {
            names.push(format!("gamma_{j}"));
        }
        if !self.variant.is_binary() {
            names.push("sigma1".into());
        }
        names.push("rho".into());
        names.push("nu".into());
        names
    }

    /// Retained series of one parameter by its column label.
    pub fn series(&self, name: &str) -> Result<&[f64]> {
        if let Some(idx) = name.strip_prefix("beta_") {
            if let Ok(j) = idx.parse::<usize>() {
                if j < self.k {
                    return Ok(&self.beta[j]);
                }
            }
        }
        if let Some(idx) = name.strip_prefix("gamma_") {
            if let Ok(j) = idx.parse::<usize>() {
                if j < self.l {
                    return Ok(&self.gamma[j]);
                }
            }
        }
        match name {
            "sigma1" if !self.variant.is_binary() => Ok(&self.sigma1),
            "rho" => Ok(&self.rho),
            "nu" => Ok(&self.nu),
            _ => Err(Error::UnknownParameter(name.into())),
        }
    }

    fn push(
        &mut self,
        iter: usize,
        delta: &[f64],
        sigma1: Option<f64>,
        rho: f64,
        nu: f64,
    ) -> Result<()> {
        let finite = delta.iter().all(|v| v.is_finite())
            && sigma1.map_or(true, |s| s.is_finite())
            && rho.is_finite()
            && (nu.is_finite() || !self.variant.is_t());
        if !finite {
            return Err(Error::NonFinite("retained draw"));
        }
        for (j, col) in self.beta.iter_mut().enumerate() {
            col.push(delta[j]);
        }
        for (j, col) in self.gamma.iter_mut().enumerate() {
            col.push(delta[self.k + j]);
        }
        if let Some(s) = sigma1 {
            self.sigma1.push(s);
        }
        self.rho.push(rho);
        self.nu.push(nu);
        self.kept_iters.push(iter);
        Ok(())
    }
}

/// Expansion-scale draw from its prior `b / chisq(c)`; the normal variants
/// pin the scale at one.
pub fn impute_alpha_prior<R: Rng + ?Sized>(
    prior: &PriorSpec,
    variant: ModelVariant,
    rng: &mut R,
) -> Result<f64> {
    if !variant.is_t() {
        return Ok(1.0);
    }
    sample_scaled_inv_chisq(prior.c, prior.b, rng)
}

/// Prior redraw of the expansion scale together with the weight rescale that
/// keeps every `q_i / alpha` ratio fixed. The complete-data density depends
/// on `(alpha, q)` only through that ratio, so the scale redraw is a move
/// along the unidentified direction and must leave the ratios untouched.
fn refresh_alpha<R: Rng + ?Sized>(
    latent: &mut LatentState,
    prior: &PriorSpec,
    variant: ModelVariant,
    rng: &mut R,
) -> Result<()> {
    let next = impute_alpha_prior(prior, variant, rng)?;
    let scale = next / latent.alpha;
    for q in &mut latent.q {
        *q *= scale;
    }
    latent.alpha = next;
    Ok(())
}

/// Mixture-weight draw per record:
/// `q_i ~ alpha * chisq(nu + 2) / (d_i + nu)` with `d_i` the `Omega^{-1}`
/// quadratic form of the latent residual.
pub fn impute_q<R: Rng + ?Sized>(
    records: &[ObservedRecord],
    latent: &mut LatentState,
    delta: &[f64],
    omega: Spd2,
    nu: f64,
    rng: &mut R,
) -> Result<()> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::InvalidParameter(format!("nu = {nu}")));
    }
    for (i, rec) in records.iter().enumerate() {
        let (xb, wg) = linear_predictors(rec, delta);
        let d = omega.inv_quad(latent.ystar[i] - xb, latent.ustar[i] - wg);
        latent.q[i] = latent.alpha * crate::distributions::sample_chisq(nu + 2.0, rng)? / (d + nu);
    }
    Ok(())
}

/// Expansion-scale posterior draw:
/// `alpha ~ [b + sum q_i (d_i + nu)] / chisq(c + 2N + N nu)`.
pub fn post_alpha<R: Rng + ?Sized>(
    records: &[ObservedRecord],
    latent: &LatentState,
    delta: &[f64],
    omega: Spd2,
    prior: &PriorSpec,
    nu: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::InvalidParameter(format!("nu = {nu}")));
    }
    let mut num = prior.b;
    for (i, rec) in records.iter().enumerate() {
        let (xb, wg) = linear_predictors(rec, delta);
        let d = omega.inv_quad(latent.ystar[i] - xb, latent.ustar[i] - wg);
        num += latent.q[i] * (d + nu);
    }
    let n = records.len() as f64;
    sample_scaled_inv_chisq(prior.c + 2.0 * n + n * nu, num, rng)
}

/// Coefficient draw from the weighted-least-squares posterior
/// `N(Sigma_hat rhs, Sigma_hat)` with
/// `Sigma_hat^{-1} = sum q_i V_i' Omega^{-1} V_i / alpha + Sigma0^{-1}` and
/// `rhs = sum q_i V_i' Omega^{-1} Z_i / alpha + Sigma0^{-1} mu0`.
/// With no records this is exactly the prior.
pub fn post_delta<R: Rng + ?Sized>(
    records: &[ObservedRecord],
    latent: &LatentState,
    omega: Spd2,
    prior: &PriorSpec,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let dim = prior.mu0.len();
    let chol0 = prior.sigma0.clone().cholesky().ok_or(Error::NotSpd)?;
    let mut a = chol0.inverse();
    let mut rhs = &a * &prior.mu0;
    let oinv = omega.inverse();

    for (i, rec) in records.iter().enumerate() {
        let (k, l) = (rec.x.len(), rec.w.len());
        if k + l != dim {
            return Err(Error::DimensionMismatch(format!(
                "record {i} has {} covariates, prior is sized for {dim}",
                k + l
            )));
        }
        let wq = latent.q[i] / latent.alpha;
        let (c11, c12, c22) = (wq * oinv.a11, wq * oinv.a12, wq * oinv.a22);
        let (z1, z2) = (latent.ystar[i], latent.ustar[i]);
        for p in 0..k {
            let xp = rec.x[p];
            for r in 0..k {
                a[(p, r)] += c11 * xp * rec.x[r];
            }
            for s in 0..l {
                let cross = c12 * xp * rec.w[s];
                a[(p, k + s)] += cross;
                a[(k + s, p)] += cross;
            }
            rhs[p] += xp * (c11 * z1 + c12 * z2);
        }
        for s in 0..l {
            let ws = rec.w[s];
            for t in 0..l {
                a[(k + s, k + t)] += c22 * ws * rec.w[t];
            }
            rhs[k + s] += ws * (c12 * z1 + c22 * z2);
        }
    }

    let chol = a.cholesky().ok_or(Error::NotSpd)?;
    let mean = chol.solve(&rhs);
    let z = DVector::from_fn(dim, |_, _| sample_std_normal(rng));
    // L' t = z gives t with covariance (L L')^{-1}.
    let noise = chol.l().tr_solve_lower_triangular(&z).ok_or(Error::NotSpd)?;
    Ok((mean + noise).iter().copied().collect())
}

/// Degrees-of-freedom step: statistic, matched Gamma proposal, one
/// Metropolized independence update. Returns the new value and the
/// acceptance flag.
fn update_nu<R: Rng + ?Sized>(
    latent: &LatentState,
    prior: &PriorSpec,
    nu: f64,
    rng: &mut R,
) -> Result<(f64, bool)> {
    let xi = xi_stat(&latent.q, latent.alpha, prior.beta0)?;
    let proposal = gamma_approx(latent.q.len(), xi, prior.alpha0, nu)?;
    mis_update(nu, proposal, latent.q.len(), xi, prior.alpha0, rng)
}

/// Smallest positive value imputed latents are nudged away from zero by, so
/// the sign pattern stays strict.
const SIGN_EPS: f64 = f64::MIN_POSITIVE;

fn positive(z: f64) -> f64 {
    z.max(SIGN_EPS)
}

fn negative(z: f64) -> f64 {
    z.min(-SIGN_EPS)
}

fn chain_setup(
    records: &[ObservedRecord],
    prior: &PriorSpec,
    config: &ChainConfig,
    binary: bool,
) -> Result<(usize, usize, RandomSource, Vec<String>)> {
    config.validate()?;
    let (k, l) = crate::model::validate_records(records, binary)?;
    prior.validate(k + l)?;
    let n_selected = records.iter().filter(|r| r.u).count();
    let mut warnings = Vec::new();
    if n_selected == 0 || n_selected == records.len() {
        warnings.push(format!(
            "all {} records share the same selection indicator; the selection equation is \
             unidentified by the data",
            records.len()
        ));
    }
    Ok((k, l, source(config.seed), warnings))
}

fn initial_latents(records: &[ObservedRecord], binary: bool) -> LatentState {
    let n = records.len();
    let mut ystar = Vec::with_capacity(n);
    let mut ustar = Vec::with_capacity(n);
    for rec in records {
        ustar.push(if rec.u { 0.5 } else { -0.5 });
        ystar.push(match rec.y {
            Some(y) if binary => {
                if y > 0.0 {
                    0.5
                } else {
                    -0.5
                }
            }
            Some(y) => y,
            // x'beta with the zero initial coefficients.
            None => 0.0,
        });
    }
    LatentState { ystar, ustar, q: vec![1.0; n], alpha: 1.0 }
}

/// Sample variance of the observed outcomes; 1 when fewer than two or
/// degenerate.
fn initial_sigma1_sq(records: &[ObservedRecord]) -> f64 {
    let ys: Vec<f64> = records.iter().filter_map(|r| r.y).collect();
    if ys.len() < 2 {
        return 1.0;
    }
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let var = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / (ys.len() - 1) as f64;
    if var > 0.0 {
        var
    } else {
        1.0
    }
}

const INITIAL_NU: f64 = 10.0;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CorrMatrix, ObservedRecord};
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};

    fn rec(u: bool, y: Option<f64>, x: Vec<f64>, w: Vec<f64>) -> ObservedRecord {
        ObservedRecord { u, y, x, w }
    }

    #[test]
    fn config_validation() {
        let mut cfg = ChainConfig::new(100, 1, ModelVariant::SelectionT);
        assert_eq!(cfg.burnin, 20);
        assert!(cfg.validate().is_ok());
        cfg.burnin = 100;
        assert!(cfg.validate().is_err());
        cfg.burnin = 10;
        cfg.thin = 0;
        assert!(cfg.validate().is_err());
        cfg.thin = 1;
        cfg.iterations = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn retention_schedule() {
        let cfg = ChainConfig { iterations: 10, burnin: 4, thin: 3, seed: 0, variant: ModelVariant::SelectionNormal };
        let kept: Vec<usize> = (0..10).filter(|&i| cfg.keep(i)).collect();
        assert_eq!(kept, vec![4, 7]);
    }

    #[test]
    fn draw_columns_and_names() {
        let mut d = ChainDraws::new(ModelVariant::SelectionT, 2, 1, 4);
        d.push(5, &[0.1, 0.2, 0.3], Some(1.5), 0.2, 8.0).unwrap();
        d.push(6, &[0.4, 0.5, 0.6], Some(1.4), 0.1, 9.0).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(
            d.parameter_names(),
            vec!["beta_0", "beta_1", "gamma_0", "sigma1", "rho", "nu"]
        );
        assert_eq!(d.series("beta_1").unwrap(), &[0.2, 0.5]);
        assert_eq!(d.series("gamma_0").unwrap(), &[0.3, 0.6]);
        assert_eq!(d.series("sigma1").unwrap(), &[1.5, 1.4]);
        assert!(d.series("beta_7").is_err());
        assert!(d.series("theta").is_err());
        assert!(d.push(7, &[f64::NAN, 0.0, 0.0], Some(1.0), 0.0, 8.0).is_err());

        let b = ChainDraws::new(ModelVariant::SelectionProbit, 1, 1, 0);
        assert_eq!(b.parameter_names(), vec!["beta_0", "gamma_0", "rho", "nu"]);
        assert!(b.series("sigma1").is_err());
    }

    #[test]
    fn alpha_prior_is_one_for_normal_variants() {
        let prior = PriorSpec::default_for(2);
        let mut rng = source(41);
        for variant in [ModelVariant::SelectionNormal, ModelVariant::SelectionProbit] {
            assert_eq!(impute_alpha_prior(&prior, variant, &mut rng).unwrap(), 1.0);
        }
        let a = impute_alpha_prior(&prior, ModelVariant::SelectionT, &mut rng).unwrap();
        assert!(a > 0.0 && a.is_finite());
    }

    #[test]
    fn post_delta_with_no_records_is_the_prior() {
        let mut prior = PriorSpec::default_for(2);
        prior.mu0 = DVector::from_vec(vec![1.0, -1.0]);
        prior.sigma0 = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let latent = LatentState { ystar: vec![], ustar: vec![], q: vec![], alpha: 1.0 };
        let omega = CorrMatrix::new(0.0).unwrap().omega();
        let mut rng = source(42);
        let n = 40_000;
        let (mut m1, mut m2, mut c11, mut c12, mut c22) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let d = post_delta(&[], &latent, omega, &prior, &mut rng).unwrap();
            m1 += d[0];
            m2 += d[1];
            c11 += (d[0] - 1.0) * (d[0] - 1.0);
            c12 += (d[0] - 1.0) * (d[1] + 1.0);
            c22 += (d[1] + 1.0) * (d[1] + 1.0);
        }
        let nf = n as f64;
        assert_abs_diff_eq!(m1 / nf, 1.0, epsilon = 0.03);
        assert_abs_diff_eq!(m2 / nf, -1.0, epsilon = 0.03);
        assert_abs_diff_eq!(c11 / nf, 2.0, epsilon = 0.05);
        assert_abs_diff_eq!(c12 / nf, 0.3, epsilon = 0.04);
        assert_abs_diff_eq!(c22 / nf, 1.0, epsilon = 0.03);
    }

    #[test]
    fn impute_q_has_the_right_conditional_mean() {
        // One record with residual quadratic form d: E[q] = alpha (nu + 2) / (d + nu).
        let records = vec![rec(true, Some(2.0), vec![0.0], vec![0.0])];
        let omega = CorrMatrix::new(0.0).unwrap().omega();
        let (nu, alpha) = (5.0, 1.3);
        let mut latent =
            LatentState { ystar: vec![2.0], ustar: vec![1.0], q: vec![1.0], alpha };
        let d = omega.inv_quad(2.0, 1.0);
        let mut rng = source(43);
        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            impute_q(&records, &mut latent, &[0.0, 0.0], omega, nu, &mut rng).unwrap();
            assert!(latent.q[0] > 0.0);
            acc += latent.q[0];
        }
        assert_abs_diff_eq!(acc / n as f64, alpha * (nu + 2.0) / (d + nu), epsilon = 0.02);
    }

    #[test]
    fn post_alpha_reduces_to_prior_without_records() {
        // b + 0 over chisq(c): matches scaled inverse chi-square of the prior.
        let prior = PriorSpec::default_for(2);
        let latent = LatentState { ystar: vec![], ustar: vec![], q: vec![], alpha: 1.0 };
        let omega = CorrMatrix::new(0.0).unwrap().omega();
        let mut a = source(44);
        let mut b = source(44);
        for _ in 0..200 {
            let lhs = post_alpha(&[], &latent, &[], omega, &prior, 4.0, &mut a).unwrap();
            let rhs = sample_scaled_inv_chisq(prior.c, prior.b, &mut b).unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
        }
    }
}
