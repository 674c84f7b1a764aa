//! Theorem-level bounds as [`BoundReport`]s.
//!
//! Every report records its inputs in `params`, enough for
//! [`BoundReport::recompute`] to rebuild the value bit-for-bit, and derived
//! by-products (the optimal block count, traced constants, …) in `derived`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{
    a_p_fbm, a_ph_series, c_ph_theta, gamma, k_delta, k_q_alpha, k_theorem, ln_c_times_a, HolderSpec,
    TailDecaySpec,
};
use crate::error::{Error, Result};
use crate::estimators::CrossingBand;
use crate::format::sig17;
use crate::processes::{series_sigma_sq, SeriesSpec};

pub const UNSPECIFIED_CONSTANT_NOTE: &str = "universal constant unspecified; conservative default used";

/// Default prefactor of the marginal sub-Gaussian tail of a Rademacher series.
pub const SERIES_MARGINAL_K: f64 = 2.0;
/// Default rate: `P(|X_t| >= λ) <= 2 exp(-λ²/(2σ²))`.
pub const SERIES_MARGINAL_RATE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub value: f64,
    /// `min(value, 1)` for bounds on probabilities.
    pub clamped: Option<f64>,
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub derived: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl BoundReport {
    fn new(name: &str, value: f64, params: &[(&str, f64)]) -> Result<Self> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::Range(format!("{name} evaluated to {value}")));
        }
        Ok(Self {
            name: name.to_string(),
            value,
            clamped: None,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            derived: BTreeMap::new(),
            notes: Vec::new(),
        })
    }

    fn probability(mut self) -> Self {
        self.clamped = Some(self.value.min(1.0));
        if self.value >= 1.0 {
            self.notes.push("vacuous: bound >= 1".into());
        }
        self
    }

    fn derive(mut self, key: &str, v: f64) -> Self {
        self.derived.insert(key.to_string(), v);
        self
    }

    pub(crate) fn note(mut self, note: &str) -> Self {
        self.notes.push(note.to_string());
        self
    }

    pub fn is_vacuous(&self) -> bool {
        self.clamped.is_some() && self.value >= 1.0
    }

    /// `name,value,k=v,…` with 17 significant digits.
    pub fn to_csv_row(&self) -> String {
        let mut row = format!("{},{}", self.name, sig17(self.value));
        for (k, v) in &self.params {
            row.push_str(&format!(",{k}={}", sig17(*v)));
        }
        row
    }

    /// Re-evaluates the bound from `name` and `params`.
    pub fn recompute(&self) -> Result<BoundReport> {
        let get = |key: &str| {
            self.params
                .get(key)
                .copied()
                .ok_or_else(|| Error::Config(format!("bound '{}' is missing parameter '{key}'", self.name)))
        };
        let holder = || HolderSpec::new(get("p")?, get("h")?, get("a_ph")?);
        let tail = || TailDecaySpec::new(get("tail_alpha")?, get("tail_c")?, get("tail_d")?, get("delta0")?);
        match self.name.as_str() {
            "lemma1_sup_moment" => lemma1_sup_moment_bound(&holder()?, get("theta")?, get("s0")?, get("t0")?),
            "prop1_lq" => prop1_lq_bound(
                &holder()?,
                get("theta")?,
                get("q")?,
                get("s0")?,
                get("t0")?,
                get("terminal_lq")?,
            ),
            "marginal_moment" => marginal_moment_bound(&tail()?, get("q")?),
            "theorem_tail" => theorem_tail_bound(&holder()?, &tail()?, get("theta")?, get("t_horizon")?, get("lambda")?),
            "fbm_marginal_tail" => fbm_marginal_tail(get("h")?, get("t")?, get("lambda")?),
            "fbm_sup" => fbm_sup_bound(get("h")?, get("t_horizon")?, get("lambda")?),
            "fbm_traced_sup" => fbm_traced_sup_bound(get("h")?, get("p")?, get("theta")?, get("lambda")?),
            "series_tail" => {
                let k_max = get("k_max")?;
                if !(k_max >= 1.0 && k_max.fract() == 0.0) {
                    return Err(Error::Config(format!("k_max must be a positive integer, got {k_max}")));
                }
                let spec = SeriesSpec::new(get("gamma")?, k_max as usize, get("h")?)?.with_scale(get("scale")?)?;
                series_tail_bounds(&spec, get("lambda")?, get("prefactor_k")?, get("rate_d")?)
            }
            "upcross_random_time" => upcross_random_time_bound(
                &holder()?,
                get("theta")?,
                get("q")?,
                get("alpha")?,
                get("t_horizon")?,
                get("time_gap_moment")?,
            ),
            "upcross_moment" => upcross_moment_bound(
                &holder()?,
                get("theta")?,
                get("delta")?,
                CrossingBand::new(get("a")?, get("b")?)?,
                get("t_horizon")?,
                get("q")?,
                get("alpha")?,
            ),
            other => Err(Error::Config(format!("unknown bound '{other}'"))),
        }
        .map(|mut r| {
            // keep annotations that were attached by callers
            for n in &self.notes {
                if !r.notes.contains(n) {
                    r.notes.push(n.clone());
                }
            }
            r
        })
    }
}

fn holder_params(spec: &HolderSpec) -> [(&'static str, f64); 3] {
    [("p", spec.p()), ("h", spec.h()), ("a_ph", spec.a_ph())]
}

fn tail_params(tail: &TailDecaySpec) -> [(&'static str, f64); 4] {
    [
        ("tail_alpha", tail.alpha()),
        ("tail_c", tail.c()),
        ("tail_d", tail.d()),
        ("delta0", tail.delta0()),
    ]
}

fn check_interval(s0: f64, t0: f64) -> Result<()> {
    if s0.is_finite() && t0.is_finite() && s0 < t0 {
        Ok(())
    } else {
        Err(Error::domain(format!("need s0 < t0, got [{s0}, {t0}]")))
    }
}

fn check_positive(x: f64, what: &str) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} must be finite and > 0, got {x}")))
    }
}

fn check_hurst(h: f64) -> Result<()> {
    if h > 0.0 && h < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("Hurst index must lie in (0, 1), got {h}")))
    }
}

/// `E sup_{s0<=s<=t<=t0} |E(X_t|F_s) - X_s|^p <= C_{p,h,θ} A_{p,h} (t0-s0)^{ph}`.
pub fn lemma1_sup_moment_bound(spec: &HolderSpec, theta: f64, s0: f64, t0: f64) -> Result<BoundReport> {
    check_interval(s0, t0)?;
    let value = c_ph_theta(spec, theta)? * spec.a_ph() * (t0 - s0).powf(spec.ph());
    let mut params = holder_params(spec).to_vec();
    params.extend([("theta", theta), ("s0", s0), ("t0", t0)]);
    BoundReport::new("lemma1_sup_moment", value, &params)
}

/// `‖X*‖_q <= q/(q-1) [ (C A)^{1/p} (t0-s0)^h + ‖X_{t0}‖_q ]` for `1 < q <= p`.
pub fn prop1_lq_bound(
    spec: &HolderSpec,
    theta: f64,
    q: f64,
    s0: f64,
    t0: f64,
    terminal_lq: f64,
) -> Result<BoundReport> {
    check_interval(s0, t0)?;
    if !(q > 1.0 && q <= spec.p()) {
        return Err(Error::domain(format!("need 1 < q <= p = {}, got q = {q}", spec.p())));
    }
    if !(terminal_lq.is_finite() && terminal_lq >= 0.0) {
        return Err(Error::domain(format!("terminal L^q norm must be >= 0, got {terminal_lq}")));
    }
    let correction = match ln_c_times_a(spec, theta)? {
        Some(ln_ca) => (ln_ca / spec.p()).exp() * (t0 - s0).powf(spec.h()),
        None => 0.0,
    };
    let value = q / (q - 1.0) * (correction + terminal_lq);
    let mut params = holder_params(spec).to_vec();
    params.extend([("theta", theta), ("q", q), ("s0", s0), ("t0", t0), ("terminal_lq", terminal_lq)]);
    BoundReport::new("prop1_lq", value, &params)
}

/// `E|X_t|^q <= C D^{-q/α} Γ(q/α + 1)` under uniform α-exponential decay.
pub fn marginal_moment_bound(tail: &TailDecaySpec, q: f64) -> Result<BoundReport> {
    check_positive(q, "q")?;
    let r = q / tail.alpha();
    let value = tail.c() * tail.d().powf(-r) * gamma(r + 1.0)?;
    let mut params = tail_params(tail).to_vec();
    params.push(("q", q));
    BoundReport::new("marginal_moment", value, &params)
}

/// `lead · T · [C A]^{1/(ph)} · λ^{-1/h} · marginal^{1-1/(ph)}`: the shape
/// shared by the general supremum tail bound (lead 4, marginal
/// `[1 + C(p/(p-1))^p] e^{-Dλ^α}`) and its Gaussian specialisation (lead 2,
/// marginal `φ(λ)`).
pub fn sup_tail_envelope(
    spec: &HolderSpec,
    theta: f64,
    t_horizon: f64,
    lambda: f64,
    lead: f64,
    marginal: f64,
) -> Result<f64> {
    check_positive(t_horizon, "horizon")?;
    check_positive(lambda, "lambda")?;
    if !(marginal.is_finite() && marginal >= 0.0) {
        return Err(Error::domain(format!("marginal factor must be >= 0, got {marginal}")));
    }
    let Some(ln_ca) = ln_c_times_a(spec, theta)? else {
        return Ok(0.0);
    };
    let ph = spec.ph();
    Ok(lead * t_horizon * (ln_ca / ph).exp() * lambda.powf(-1.0 / spec.h()) * marginal.powf(1.0 - 1.0 / ph))
}

/// `P(sup_{[0,T]}|X| >= 2λ) <= K λ^{-1/h} exp[-(1-1/(ph)) D λ^α]`, valid for
/// `λ >= δ₀`.
pub fn theorem_tail_bound(
    spec: &HolderSpec,
    tail: &TailDecaySpec,
    theta: f64,
    t_horizon: f64,
    lambda: f64,
) -> Result<BoundReport> {
    check_positive(lambda, "lambda")?;
    if lambda < tail.delta0() {
        return Err(Error::OutOfRegime(format!(
            "lambda = {lambda} is below the decay threshold delta0 = {}",
            tail.delta0()
        )));
    }
    let k = k_theorem(spec, tail, theta, t_horizon)?;
    let ph = spec.ph();
    let decay = tail.d() * lambda.powf(tail.alpha());
    let value = k * lambda.powf(-1.0 / spec.h()) * (-(1.0 - 1.0 / ph) * decay).exp();
    let mut params = holder_params(spec).to_vec();
    params.extend(tail_params(tail));
    params.extend([("theta", theta), ("t_horizon", t_horizon), ("lambda", lambda)]);
    let mut report = BoundReport::new("theorem_tail", value, &params)?.probability().derive("k", k);
    // N = ⌊[C A T^{ph} λ^{-p} e^{Dλ^α}]^{1/(ph)}⌋
    let ln_n = ln_c_times_a(spec, theta)?
        .map(|ln_ca| (ln_ca + ph * t_horizon.ln() - spec.p() * lambda.ln() + decay) / ph);
    match ln_n {
        None => report = report.derive("n_opt", 0.0),
        Some(ln_n) if ln_n.exp().is_finite() => report = report.derive("n_opt", ln_n.exp().floor()),
        Some(ln_n) => {
            report = report
                .derive("ln_n_opt", ln_n)
                .note("optimal block count exceeds f64 range; ln recorded")
        }
    }
    Ok(report)
}

/// `φ(λ) = e^{-λ²}/(2√π λ)`.
pub fn phi(lambda: f64) -> f64 {
    (-lambda * lambda).exp() / (2.0 * PI.sqrt() * lambda)
}

/// `P(|B_t| >= λ) <= t^h/(2√π λ) exp(-λ²/t^{2h})`, as displayed; this is the
/// Mills-ratio bound for one tail only. The two-sided probability is
/// `erfc(λ/t^h)`, which exceeds it for `λ ≳ 0.45 t^h`.
pub fn fbm_marginal_tail(h: f64, t: f64, lambda: f64) -> Result<BoundReport> {
    check_hurst(h)?;
    check_positive(t, "t")?;
    check_positive(lambda, "lambda")?;
    let th = t.powf(h);
    let value = th / (2.0 * PI.sqrt() * lambda) * (-(lambda / th).powi(2)).exp();
    let mut report = BoundReport::new("fbm_marginal_tail", value, &[("h", h), ("t", t), ("lambda", lambda)])?
        .probability()
        .note("one-sided Gaussian tail factor as displayed; the two-sided tail carries twice the prefactor");
    if t <= 1.0 {
        report = report.derive("phi", phi(lambda));
    }
    Ok(report)
}

/// `C_h = 2 [C_{p,h,θ} A_p]^{1/(ph)} (2√π)^{-(1-1/(ph))}` with `p = 2/h`,
/// `θ = p/(p-1)`.
pub fn fbm_sup_constant(h: f64) -> Result<f64> {
    check_hurst(h)?;
    let p = 2.0 / h;
    let spec = HolderSpec::fbm(p, h)?;
    let ln_ca = ln_c_times_a(&spec, spec.default_theta())?.expect("A_p > 0");
    let ph = spec.ph();
    Ok(2.0 * (ln_ca / ph).exp() * (2.0 * PI.sqrt()).powf(-(1.0 - 1.0 / ph)))
}

/// `P(sup_{[0,T]}|B| >= 2λ) <= C_h T^h/λ · exp(-λ²/(2T^{2h}))`.
///
/// The traced form at `T = 1` is `C_h λ^{-1/h-1/2} e^{-λ²/2}`, which this
/// dominates for `λ >= 1`; below that the bound is vacuous anyway.
pub fn fbm_sup_bound(h: f64, t_horizon: f64, lambda: f64) -> Result<BoundReport> {
    check_positive(t_horizon, "horizon")?;
    check_positive(lambda, "lambda")?;
    let c_h = fbm_sup_constant(h)?;
    let th = t_horizon.powf(h);
    let value = c_h * th / lambda * (-lambda * lambda / (2.0 * th * th)).exp();
    Ok(
        BoundReport::new("fbm_sup", value, &[("h", h), ("t_horizon", t_horizon), ("lambda", lambda)])?
            .probability()
            .derive("c_h", c_h)
            .derive("p", 2.0 / h),
    )
}

/// `P(sup_{[0,1]}|B| >= 2λ) <= 2 [C_{p,h,θ} A_p]^{1/(ph)} λ^{-1/h} φ(λ)^{1-1/(ph)}`
/// for any `p > 1/h`, `θ > 1`.
pub fn fbm_traced_sup_bound(h: f64, p: f64, theta: f64, lambda: f64) -> Result<BoundReport> {
    check_hurst(h)?;
    check_positive(lambda, "lambda")?;
    let spec = HolderSpec::fbm(p, h)?;
    let c = c_ph_theta(&spec, theta)?;
    let a = a_p_fbm(p)?;
    let ph = spec.ph();
    let value = 2.0 * (c * a).powf(1.0 / ph) * lambda.powf(-1.0 / h) * phi(lambda).powf(1.0 - 1.0 / ph);
    Ok(BoundReport::new(
        "fbm_traced_sup",
        value,
        &[("h", h), ("p", p), ("theta", theta), ("lambda", lambda)],
    )?
    .probability())
}

/// `prefactor · exp(-rate · λ²/σ²)` with `σ² = series_sigma_sq(spec)`; covers
/// both the marginal tail (defaults [`SERIES_MARGINAL_K`],
/// [`SERIES_MARGINAL_RATE`]) and the supremum tail at level `2λ` (defaults from
/// [`series_sup_constants`]).
pub fn series_tail_bounds(spec: &SeriesSpec, lambda: f64, prefactor_k: f64, rate_d: f64) -> Result<BoundReport> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::domain(format!("lambda must be >= 0, got {lambda}")));
    }
    check_positive(prefactor_k, "prefactor")?;
    check_positive(rate_d, "rate")?;
    let sigma_sq = series_sigma_sq(spec);
    let value = prefactor_k * (-rate_d * lambda * lambda / sigma_sq).exp();
    Ok(BoundReport::new(
        "series_tail",
        value,
        &[
            ("gamma", spec.coeff_gamma),
            ("k_max", spec.k_max as f64),
            ("h", spec.holder_h),
            ("scale", spec.scale),
            ("lambda", lambda),
            ("prefactor_k", prefactor_k),
            ("rate_d", rate_d),
        ],
    )?
    .probability()
    .derive("sigma_sq", sigma_sq))
}

/// `(C_h, D_h)` for the supremum tail of a series on `[0, T]`.
///
/// `X/σ` has marginal tail `2e^{-μ²/2}` and increment constant at most
/// `A_{p,h}` of a unit weight sum, so the general supremum bound with
/// `α = 2, C = 2, D = 1/2`, `p = 2/h`, `θ = p/(p-1)` applies to it:
/// `P(sup|X| >= 2λ) <= K (λ/σ)^{-1/h} exp(-(1-1/(ph)) λ²/(2σ²))`.
/// Hence `C_h = K` (valid once `λ >= σ`; below that `C_h e^{-D_h} > 1`)
/// and `D_h = (1-1/(ph))/2 = 1/4`.
pub fn series_sup_constants(h: f64, t_horizon: f64) -> Result<(f64, f64)> {
    check_hurst(h)?;
    let p = 2.0 / h;
    let spec = HolderSpec::new(p, h, a_ph_series(p, 1.0)?)?;
    let tail = TailDecaySpec::new(2.0, SERIES_MARGINAL_K, SERIES_MARGINAL_RATE, 0.0)?;
    let c_h = k_theorem(&spec, &tail, spec.default_theta(), t_horizon)?;
    let d_h = (1.0 - 1.0 / spec.ph()) * SERIES_MARGINAL_RATE;
    Ok((c_h, d_h))
}

/// Marginal tail of a series with the default constants.
pub fn series_marginal_tail(spec: &SeriesSpec, lambda: f64) -> Result<BoundReport> {
    Ok(series_tail_bounds(spec, lambda, SERIES_MARGINAL_K, SERIES_MARGINAL_RATE)?.note(UNSPECIFIED_CONSTANT_NOTE))
}

/// Supremum tail `P(sup|X| >= 2λ)` of a series with the default constants.
pub fn series_sup_tail(spec: &SeriesSpec, t_horizon: f64, lambda: f64) -> Result<BoundReport> {
    let (c_h, d_h) = series_sup_constants(spec.holder_h, t_horizon)?;
    Ok(series_tail_bounds(spec, lambda, c_h, d_h)?
        .note(UNSPECIFIED_CONSTANT_NOTE)
        .derive("t_horizon", t_horizon))
}

/// `E|X_τ - X_σ|^q <= K_{q,α} (C A)^{q/p} T^{qh} [E((τ-σ)/T)^α]^{1-q/p}`.
pub fn upcross_random_time_bound(
    spec: &HolderSpec,
    theta: f64,
    q: f64,
    alpha: f64,
    t_horizon: f64,
    time_gap_moment: f64,
) -> Result<BoundReport> {
    check_positive(t_horizon, "horizon")?;
    if !(0.0..=1.0).contains(&time_gap_moment) {
        return Err(Error::domain(format!(
            "E((tau-sigma)/T)^alpha must lie in [0, 1], got {time_gap_moment}"
        )));
    }
    let kqa = k_q_alpha(q, alpha, spec)?;
    let p = spec.p();
    let value = match ln_c_times_a(spec, theta)? {
        Some(ln_ca) => {
            kqa * (ln_ca * q / p).exp() * t_horizon.powf(q * spec.h()) * time_gap_moment.powf(1.0 - q / p)
        }
        None => 0.0,
    };
    let mut params = holder_params(spec).to_vec();
    params.extend([
        ("theta", theta),
        ("q", q),
        ("alpha", alpha),
        ("t_horizon", t_horizon),
        ("time_gap_moment", time_gap_moment),
    ]);
    Ok(BoundReport::new("upcross_random_time", value, &params)?.derive("k_q_alpha", kqa))
}

/// `E(U_a^b(D)^δ) < K_δ T^h/(b-a)`.
pub fn upcross_moment_bound(
    spec: &HolderSpec,
    theta: f64,
    delta: f64,
    band: CrossingBand,
    t_horizon: f64,
    q: f64,
    alpha: f64,
) -> Result<BoundReport> {
    check_positive(t_horizon, "horizon")?;
    let k = k_delta(delta, spec, theta, q, alpha)?;
    let value = k * t_horizon.powf(spec.h()) / band.width();
    let mut params = holder_params(spec).to_vec();
    params.extend([
        ("theta", theta),
        ("delta", delta),
        ("a", band.a()),
        ("b", band.b()),
        ("t_horizon", t_horizon),
        ("q", q),
        ("alpha", alpha),
    ]);
    Ok(BoundReport::new("upcross_moment", value, &params)?.derive("k_delta", k))
}
