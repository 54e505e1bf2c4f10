//! Posterior summaries, convergence diagnostics, and figure-ready reductions
//! of retained draws.

use crate::error::Error;
use crate::gibbs::ChainDraws;
use crate::Result;

/// Location and spread of one parameter's retained draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSummary {
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
}

/// Quantile by linear interpolation of order statistics: rank `(n - 1) p`
/// split into its integer and fractional parts.
pub fn quantile(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptyChain);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("quantile level {p}")));
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 == sorted.len() {
        return Ok(sorted[lo]);
    }
    Ok(sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]))
}

/// Mean, median, standard deviation, and equal-tailed credible interval of
/// one series at the given level.
pub fn summarize_series(series: &[f64], ci_level: f64) -> Result<ParamSummary> {
    if series.is_empty() {
        return Err(Error::EmptyChain);
    }
    if !(ci_level > 0.0 && ci_level < 1.0) {
        return Err(Error::InvalidParameter(format!("interval level {ci_level}")));
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let sd = if series.len() == 1 {
        0.0
    } else {
        (series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
    let tail = (1.0 - ci_level) / 2.0;
    Ok(ParamSummary {
        mean,
        median: quantile(&sorted, 0.5)?,
        sd,
        ci_lower: quantile(&sorted, tail)?,
        ci_upper: quantile(&sorted, 1.0 - tail)?,
    })
}

/// Per-parameter summaries in draw-column order. The degrees-of-freedom
/// column is reported only for the heavy-tailed variants; the normal
/// variants hold it at infinity.
pub fn summarize(draws: &ChainDraws, ci_level: f64) -> Result<Vec<(String, ParamSummary)>> {
    let mut out = Vec::new();
    for name in draws.parameter_names() {
        if name == "nu" && !draws.variant.is_t() {
            continue;
        }
        out.push((name.clone(), summarize_series(draws.series(&name)?, ci_level)?));
    }
    Ok(out)
}

/// Potential-scale-reduction factor `sqrt((n-1)/n + B/(nW))` for one
/// parameter across chains, with `B` the between-chain and `W` the
/// within-chain variance. `split` halves every chain first, which exposes
/// trends the whole-chain comparison averages away.
pub fn gelman_rubin(chains: &[ChainDraws], parameter: &str, split: bool) -> Result<f64> {
    if chains.len() < 2 {
        return Err(Error::TooFewChains);
    }
    let len = chains[0].len();
    let mut sequences: Vec<&[f64]> = Vec::new();
    for chain in chains {
        let series = chain.series(parameter)?;
        if series.len() != len {
            return Err(Error::ChainLengthMismatch);
        }
        if split {
            let half = len / 2;
            if half == 0 {
                return Err(Error::EmptyChain);
            }
            sequences.push(&series[..half]);
            sequences.push(&series[len - half..]);
        } else {
            sequences.push(series);
        }
    }
    let n = sequences[0].len();
    if n == 0 {
        return Err(Error::EmptyChain);
    }
    let m = sequences.len() as f64;
    let nf = n as f64;

    let means: Vec<f64> = sequences.iter().map(|s| s.iter().sum::<f64>() / nf).collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = nf / (m - 1.0) * means.iter().map(|x| (x - grand) * (x - grand)).sum::<f64>();
    let w = sequences
        .iter()
        .zip(&means)
        .map(|(s, mu)| s.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (nf - 1.0))
        .sum::<f64>()
        / m;
    if w == 0.0 {
        return Err(Error::ZeroWithinVariance(parameter.into()));
    }
    Ok(((nf - 1.0) / nf + b / (nf * w)).sqrt())
}

/// Fraction of accepted degrees-of-freedom proposals over post-burn-in
/// sweeps.
pub fn acceptance_rate(draws: &ChainDraws) -> Result<f64> {
    if !draws.variant.is_t() || draws.nu_proposed == 0 {
        return Err(Error::NuNotSampled);
    }
    Ok(draws.nu_accepted as f64 / draws.nu_proposed as f64)
}

/// Boxplot five-number summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// One equal-width histogram cell over `[lower, upper)`; the last cell
/// closes at the maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

/// Figure-ready reduction of one parameter's draws.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureSeries {
    pub parameter: String,
    pub five_number: FiveNumber,
    pub bins: Vec<HistogramBin>,
}

/// Five-number summaries and histogram counts per parameter, enough to
/// redraw boxplots and density sketches externally. A constant series
/// collapses to a single cell holding every draw.
pub fn figure_data(draws: &ChainDraws, bin_count: usize) -> Result<Vec<FigureSeries>> {
    if bin_count == 0 {
        return Err(Error::InvalidParameter("bin count = 0".into()));
    }
    let mut out = Vec::new();
    for name in draws.parameter_names() {
        if name == "nu" && !draws.variant.is_t() {
            continue;
        }
        let series = draws.series(&name)?;
        if series.is_empty() {
            return Err(Error::EmptyChain);
        }
        let mut sorted = series.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
        let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
        let five = FiveNumber {
            min,
            q1: quantile(&sorted, 0.25)?,
            median: quantile(&sorted, 0.5)?,
            q3: quantile(&sorted, 0.75)?,
            max,
        };
        let bins = if min == max {
            vec![HistogramBin { lower: min, upper: max, count: series.len() }]
        } else {
            let width = (max - min) / bin_count as f64;
            let mut bins: Vec<HistogramBin> = (0..bin_count)
                .map(|i| HistogramBin {
                    lower: min + i as f64 * width,
                    upper: if i + 1 == bin_count { max } else { min + (i + 1) as f64 * width },
                    count: 0,
                })
                .collect();
            for &v in series {
                let idx = (((v - min) / width) as usize).min(bin_count - 1);
                bins[idx].count += 1;
            }
            bins
        };
        out.push(FigureSeries { parameter: name, five_number: five, bins });
    }
    Ok(out)
}

/// Pooled draws of several chains of the same shape: columns concatenated
/// in chain order, proposal counts summed, warnings merged.
pub fn concat(chains: &[ChainDraws]) -> Result<ChainDraws> {
    let first = chains.first().ok_or(Error::TooFewChains)?;
    let mut pooled = first.clone();
    for chain in &chains[1..] {
        if chain.variant != first.variant || chain.k != first.k || chain.l != first.l {
            return Err(Error::DimensionMismatch(
                "chains with different variants or coefficient counts".into(),
            ));
        }
        for (col, more) in pooled.beta.iter_mut().zip(&chain.beta) {
            col.extend_from_slice(more);
        }
        for (col, more) in pooled.gamma.iter_mut().zip(&chain.gamma) {
            col.extend_from_slice(more);
        }
        pooled.sigma1.extend_from_slice(&chain.sigma1);
        pooled.rho.extend_from_slice(&chain.rho);
        pooled.nu.extend_from_slice(&chain.nu);
        pooled.kept_iters.extend_from_slice(&chain.kept_iters);
        pooled.nu_proposed += chain.nu_proposed;
        pooled.nu_accepted += chain.nu_accepted;
        pooled.warnings.extend(chain.warnings.iter().cloned());
    }
    Ok(pooled)
}
