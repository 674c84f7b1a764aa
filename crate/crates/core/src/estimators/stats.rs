use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

/// A Monte-Carlo point estimate with a two-sided interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalEstimate {
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
    pub confidence: f64,
}

/// Percentile-bootstrap settings; the resamples are drawn from counter-based
/// streams keyed by `seed`, so intervals are reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bootstrap {
    pub resamples: usize,
    pub seed: u64,
}

impl Bootstrap {
    pub const DEFAULT_RESAMPLES: usize = 2000;

    pub fn new(seed: u64) -> Self {
        Self {
            resamples: Self::DEFAULT_RESAMPLES,
            seed,
        }
    }
}

/// Sum by recursive halving; the split points depend only on the length, so
/// the result is reproducible and the rounding error grows like `log n`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let (l, r) = xs.split_at(xs.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// `max_j |x_j|`, the grid approximation of `sup_t |X_t|`.
pub fn path_supremum(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn check_confidence(confidence: f64) -> Result<()> {
    if confidence > 0.0 && confidence < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("confidence must lie in (0, 1), got {confidence}")))
    }
}

fn check_nonempty(xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::Precondition("no samples".into()));
    }
    if let Some(x) = xs.iter().find(|x| !x.is_finite()) {
        return Err(Error::Precondition(format!("non-finite sample {x}")));
    }
    Ok(())
}

/// Exact binomial interval for `k` successes in `n` trials.
pub fn clopper_pearson(k: usize, n: usize, confidence: f64) -> Result<(f64, f64)> {
    check_confidence(confidence)?;
    if n == 0 || k > n {
        return Err(Error::domain(format!("need 0 <= k <= n, n >= 1; got k = {k}, n = {n}")));
    }
    let tail = 0.5 * (1.0 - confidence);
    let (k, n) = (k as f64, n as f64);
    let lo = if k == 0.0 { 0.0 } else { beta_quantile(tail, k, n - k + 1.0) };
    let hi = if k == n { 1.0 } else { beta_quantile(1.0 - tail, k + 1.0, n - k) };
    Ok((lo, hi))
}

/// Inverse of the regularized incomplete beta function by bisection.
fn beta_quantile(prob: f64, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_reg(a, b, mid) < prob {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Fraction of samples `>= lambda` with a Clopper–Pearson interval.
pub fn empirical_tail(samples: &[f64], lambda: f64, confidence: f64) -> Result<EmpiricalEstimate> {
    check_nonempty(samples)?;
    let n = samples.len();
    let k = samples.iter().filter(|&&x| x >= lambda).count();
    let (ci_low, ci_high) = clopper_pearson(k, n, confidence)?;
    Ok(EmpiricalEstimate {
        point: k as f64 / n as f64,
        ci_low,
        ci_high,
        n,
        confidence,
    })
}

/// Sample mean with a percentile-bootstrap interval.
pub fn bootstrap_mean(samples: &[f64], confidence: f64, boot: &Bootstrap) -> Result<EmpiricalEstimate> {
    bootstrap_transformed_mean(samples, confidence, boot, |m| m)
}

/// `g(mean)` for a monotone increasing `g`, with the bootstrap interval of the
/// mean mapped through `g`.
fn bootstrap_transformed_mean(
    samples: &[f64],
    confidence: f64,
    boot: &Bootstrap,
    g: impl Fn(f64) -> f64,
) -> Result<EmpiricalEstimate> {
    check_nonempty(samples)?;
    check_confidence(confidence)?;
    if boot.resamples == 0 {
        return Err(Error::domain("bootstrap needs at least one resample"));
    }
    let n = samples.len();
    let point = g(mean(samples));
    let mut stats: Vec<f64> = (0..boot.resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(boot.seed, Purpose::Bootstrap, r as u64);
            let draw: Vec<f64> = (0..n).map(|_| samples[rng.random_range(0..n)]).collect();
            mean(&draw)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - confidence);
    // the percentile interval need not contain the point estimate; widen it
    // so that `ci_low <= point <= ci_high` always holds
    Ok(EmpiricalEstimate {
        point,
        ci_low: g(quantile_sorted(&stats, tail)).min(point),
        ci_high: g(quantile_sorted(&stats, 1.0 - tail)).max(point),
        n,
        confidence,
    })
}

/// Linear interpolation between order statistics.
fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let pos = prob * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    match sorted.get(i + 1) {
        Some(next) if frac > 0.0 => sorted[i] + frac * (next - sorted[i]),
        _ => sorted[i],
    }
}

/// `(mean x^q)^{1/q}` with a percentile-bootstrap interval.
pub fn empirical_lq_norm(samples: &[f64], q: f64, confidence: f64, boot: &Bootstrap) -> Result<EmpiricalEstimate> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::domain(format!("q must be >= 1, got {q}")));
    }
    if let Some(x) = samples.iter().find(|&&x| x < 0.0) {
        return Err(Error::Precondition(format!("L^q samples must be nonnegative, got {x}")));
    }
    let powered: Vec<f64> = samples.iter().map(|x| x.powf(q)).collect();
    bootstrap_transformed_mean(&powered, confidence, boot, |m| m.powf(q.recip()))
}
