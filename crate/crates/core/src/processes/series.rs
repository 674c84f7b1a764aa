use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{PathGenerator, TimeGrid};
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

pub(super) const GENERATOR_ID: &str = "rademacher_cosine_series";

/// Relative truncation budget: the neglected tail of `σ²` must stay below
/// this fraction of the retained part.
pub const TRUNCATION_TOLERANCE: f64 = 1e-6;

const MAX_TERMS: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesFamily {
    /// `f_k(t) = cos(2πkt)`.
    Cosine,
}

/// Truncated Rademacher series `X_t = Σ_{k<=k_max} a_k ξ_k f_k(t)` with
/// `a_k = scale · k^{-γ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSpec {
    pub coeff_gamma: f64,
    pub k_max: usize,
    pub family: SeriesFamily,
    pub holder_h: f64,
    pub scale: f64,
}

impl SeriesSpec {
    pub fn new(coeff_gamma: f64, k_max: usize, holder_h: f64) -> Result<Self> {
        if !(holder_h > 0.0 && holder_h < 1.0) {
            return Err(Error::domain(format!("Hoelder index must lie in (0, 1), got {holder_h}")));
        }
        if !(coeff_gamma.is_finite() && 2.0 * coeff_gamma - 2.0 * holder_h > 1.0) {
            return Err(Error::domain(format!(
                "need 2*gamma - 2*h > 1 for a summable series, got gamma = {coeff_gamma}, h = {holder_h}"
            )));
        }
        if k_max == 0 || k_max > MAX_TERMS {
            return Err(Error::domain(format!("k_max must lie in [1, {MAX_TERMS}], got {k_max}")));
        }
        Ok(Self {
            coeff_gamma,
            k_max,
            family: SeriesFamily::Cosine,
            holder_h,
            scale: 1.0,
        })
    }

    /// Spec whose `k_max` is the smallest truncation meeting
    /// [`TRUNCATION_TOLERANCE`].
    pub fn auto(coeff_gamma: f64, holder_h: f64) -> Result<Self> {
        Self::new(coeff_gamma, 1, holder_h)?;
        Self::new(coeff_gamma, required_k_max(coeff_gamma, holder_h)?, holder_h)
    }

    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::domain(format!("coefficient scale must be positive, got {scale}")));
        }
        self.scale = scale;
        Ok(self)
    }

    pub fn coefficient(&self, k: usize) -> f64 {
        self.scale * (k as f64).powf(-self.coeff_gamma)
    }

    /// `Σ a_k² L_k²` over the retained terms.
    pub fn weight_sum(&self) -> f64 {
        (1..=self.k_max)
            .rev()
            .map(|k| (self.coefficient(k) * cosine_holder_constant(k, self.holder_h)).powi(2))
            .sum()
    }

    /// `Σ a_k L_k`, a pathwise Hölder constant of every realisation.
    pub fn holder_bound(&self) -> f64 {
        (1..=self.k_max)
            .rev()
            .map(|k| self.coefficient(k) * cosine_holder_constant(k, self.holder_h))
            .sum()
    }
}

/// `L_k = 2^{1-h} (2πk)^h`, from `|cos x - cos y| <= min(2, |x - y|)`.
pub fn cosine_holder_constant(k: usize, h: f64) -> f64 {
    2f64.powf(1.0 - h) * (2.0 * PI * k as f64).powf(h)
}

/// `σ² = Σ_{k<=k_max} a_k² (f_k(0)² + L_k²)`; `f_k(0) = 1` for the cosine family.
pub fn series_sigma_sq(spec: &SeriesSpec) -> f64 {
    (1..=spec.k_max)
        .rev()
        .map(|k| {
            let a = spec.coefficient(k);
            let l = cosine_holder_constant(k, spec.holder_h);
            a * a * (1.0 + l * l)
        })
        .sum()
}

/// Integral bound on the neglected tail `Σ_{k>K} a_k²(1 + L_k²)`, using
/// `Σ_{k>K} k^{-s} <= (K+1)^{-s} + (K+1)^{1-s}/(s-1)`.
pub fn truncation_tail_bound(coeff_gamma: f64, holder_h: f64, scale: f64, k_max: usize) -> f64 {
    let next = k_max as f64 + 1.0;
    let power_tail = |s: f64| next.powf(-s) + next.powf(1.0 - s) / (s - 1.0);
    let c = 4f64.powf(1.0 - holder_h) * (2.0 * PI).powf(2.0 * holder_h);
    scale * scale
        * (power_tail(2.0 * coeff_gamma) + c * power_tail(2.0 * coeff_gamma - 2.0 * holder_h))
}

/// Smallest `k_max` whose tail bound is below `TRUNCATION_TOLERANCE · σ²`.
pub fn required_k_max(coeff_gamma: f64, holder_h: f64) -> Result<usize> {
    let probe = SeriesSpec::new(coeff_gamma, 1, holder_h)?;
    let term = |k: usize| {
        let a = probe.coefficient(k);
        let l = cosine_holder_constant(k, holder_h);
        a * a * (1.0 + l * l)
    };
    let ok = |k: usize, sigma_sq: f64| {
        truncation_tail_bound(coeff_gamma, holder_h, 1.0, k) < TRUNCATION_TOLERANCE * sigma_sq
    };
    // prefix[k-1] = σ²(k)
    let mut prefix = vec![term(1)];
    let mut hi = 1usize;
    while !ok(hi, prefix[hi - 1]) {
        hi *= 2;
        if hi > MAX_TERMS {
            return Err(Error::Config(format!(
                "series with gamma = {coeff_gamma}, h = {holder_h} needs more than {MAX_TERMS} terms"
            )));
        }
        for k in prefix.len() + 1..=hi {
            let last = prefix[k - 2];
            prefix.push(last + term(k));
        }
    }
    let mut lo = hi / 2;
    if lo == 0 {
        return Ok(1);
    }
    // invariant: !ok(lo), ok(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid, prefix[mid - 1]) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Paths of the truncated series on a grid. Each path draws `k_max` signs
/// from its own stream; values are `Ξ · Φᵀ` with `Φ_{jk} = a_k cos(2πk t_j)`.
#[derive(Debug, Clone)]
pub struct RademacherSeriesGenerator {
    spec: SeriesSpec,
    grid: TimeGrid,
    sigma_sq: f64,
    /// Row-major `(N+1) × k_max`.
    basis: Vec<f64>,
}

impl RademacherSeriesGenerator {
    /// Fails with [`Error::Config`] naming the required `k_max` when the
    /// truncation tail exceeds the budget.
    pub fn new(spec: SeriesSpec, grid: TimeGrid) -> Result<Self> {
        SeriesSpec::new(spec.coeff_gamma, spec.k_max, spec.holder_h)?;
        let sigma_sq = series_sigma_sq(&spec);
        let tail = truncation_tail_bound(spec.coeff_gamma, spec.holder_h, spec.scale, spec.k_max);
        if !(tail < TRUNCATION_TOLERANCE * sigma_sq) {
            let needed = required_k_max(spec.coeff_gamma, spec.holder_h)?;
            return Err(Error::Config(format!(
                "k_max = {} leaves a truncation tail bound of {tail:.3e} > {TRUNCATION_TOLERANCE:e} * sigma^2; \
                 use k_max >= {needed}",
                spec.k_max
            )));
        }
        let k_max = spec.k_max;
        let mut basis = Vec::with_capacity(grid.len() * k_max);
        for &t in grid.points() {
            for k in 1..=k_max {
                basis.push(spec.coefficient(k) * (2.0 * PI * k as f64 * t).cos());
            }
        }
        Ok(Self {
            spec,
            grid,
            sigma_sq,
            basis,
        })
    }

    pub fn spec(&self) -> &SeriesSpec {
        &self.spec
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }
}

impl PathGenerator for RademacherSeriesGenerator {
    fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn generator_id(&self) -> &'static str {
        GENERATOR_ID
    }

    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("gamma".to_string(), self.spec.coeff_gamma),
            ("k_max".to_string(), self.spec.k_max as f64),
            ("h".to_string(), self.spec.holder_h),
            ("scale".to_string(), self.spec.scale),
            ("sigma_sq".to_string(), self.sigma_sq),
        ])
    }

    fn fill(&self, seed: u64, first: u64, out: &mut [f64]) {
        let width = self.grid.len();
        let k = self.spec.k_max;
        let rows = out.len() / width;
        let mut signs = vec![0.0; rows * k];
        for (r, row) in signs.chunks_exact_mut(k).enumerate() {
            let mut rng = rng::stream(seed, Purpose::Paths, first + r as u64);
            for s in row.iter_mut() {
                *s = if rng.random::<bool>() { 1.0 } else { -1.0 };
            }
        }
        // out = Ξ · Φᵀ
        unsafe {
            matrixmultiply::dgemm(
                rows,
                k,
                width,
                1.0,
                signs.as_ptr(),
                k as isize,
                1,
                self.basis.as_ptr(),
                1,
                k as isize,
                0.0,
                out.as_mut_ptr(),
                width as isize,
                1,
            );
        }
    }
}
