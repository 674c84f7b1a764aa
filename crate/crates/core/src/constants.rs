//! Special functions and the closed-form constants of the maximal, tail and
//! up-crossing bounds.
//!
//! Every composite constant is assembled in log space and exponentiated once,
//! so intermediate factors such as `Γ(θ(p-1)+1)` may be huge while the final
//! value is still representable. A result that does not fit in an `f64` is a
//! [`Error::Range`], never a silent infinity.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Increment-control triple `(p, h, A_{p,h})`:
/// `E|X_t - X_s|^p <= A_{p,h} |t-s|^{ph}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHolderSpec")]
pub struct HolderSpec {
    p: f64,
    h: f64,
    a_ph: f64,
}

#[derive(Deserialize)]
struct RawHolderSpec {
    p: f64,
    h: f64,
    a_ph: f64,
}

impl TryFrom<RawHolderSpec> for HolderSpec {
    type Error = Error;

    fn try_from(raw: RawHolderSpec) -> Result<Self> {
        HolderSpec::new(raw.p, raw.h, raw.a_ph)
    }
}

impl HolderSpec {
    pub fn new(p: f64, h: f64, a_ph: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::domain(format!("p must be a finite number > 1, got {p}")));
        }
        if !(h > 0.0 && h <= 1.0) {
            return Err(Error::domain(format!("h must lie in (0, 1], got {h}")));
        }
        if p * h <= 1.0 {
            return Err(Error::domain(format!("p*h must exceed 1, got {}", p * h)));
        }
        if !(a_ph.is_finite() && a_ph >= 0.0) {
            return Err(Error::domain(format!("A_(p,h) must be finite and >= 0, got {a_ph}")));
        }
        Ok(Self { p, h, a_ph })
    }

    /// Spec for a standard fBm with Hurst index `h`, using `A_p` from
    /// [`a_p_fbm`].
    pub fn fbm(p: f64, h: f64) -> Result<Self> {
        Self::new(p, h, a_p_fbm(p)?)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn a_ph(&self) -> f64 {
        self.a_ph
    }

    pub fn ph(&self) -> f64 {
        self.p * self.h
    }

    /// `θ = p/(p-1)`, the value used whenever no θ is given.
    pub fn default_theta(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn with_a_ph(&self, a_ph: f64) -> Result<Self> {
        Self::new(self.p, self.h, a_ph)
    }
}

/// Uniform α-exponential decay of the marginals:
/// `P(|X_t| >= λ) <= C exp(-D λ^α)` for all `t`, valid for `λ >= δ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTailDecaySpec")]
pub struct TailDecaySpec {
    alpha: f64,
    c: f64,
    d: f64,
    delta0: f64,
}

#[derive(Deserialize)]
struct RawTailDecaySpec {
    alpha: f64,
    c: f64,
    d: f64,
    delta0: f64,
}

impl TryFrom<RawTailDecaySpec> for TailDecaySpec {
    type Error = Error;

    fn try_from(raw: RawTailDecaySpec) -> Result<Self> {
        TailDecaySpec::new(raw.alpha, raw.c, raw.d, raw.delta0)
    }
}

impl TailDecaySpec {
    pub fn new(alpha: f64, c: f64, d: f64, delta0: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("C", c), ("D", d)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !(delta0.is_finite() && delta0 >= 0.0) {
            return Err(Error::domain(format!("delta0 must be finite and >= 0, got {delta0}")));
        }
        Ok(Self { alpha, c, d, delta0 })
    }

    /// Marginal decay of a standard fBm on `[0, T]` with `T <= 1`:
    /// `B_t ~ N(0, t^{2h}/2)` gives `P(|B_t| >= λ) = erfc(λ/t^h) <= exp(-λ²)`.
    pub fn fbm_unit_horizon() -> Self {
        Self {
            alpha: 2.0,
            c: 1.0,
            d: 1.0,
            delta0: 0.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Largest argument for which Γ is representable.
const GAMMA_MAX_ARG: f64 = 171.624_376_956_302_7;

fn lanczos_series(xm1: f64) -> f64 {
    LANCZOS_COEFFS[1..]
        .iter()
        .enumerate()
        .fold(LANCZOS_COEFFS[0], |acc, (i, c)| acc + c / (xm1 + (i + 1) as f64))
}

fn check_positive(x: f64, what: &str) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} requires a finite positive argument, got {x}")))
    }
}

/// Γ(x) for `x > 0` via the Lanczos approximation (g = 7, 9 terms).
pub fn gamma(x: f64) -> Result<f64> {
    check_positive(x, "gamma")?;
    if x > GAMMA_MAX_ARG {
        return Err(Error::Range(format!("gamma({x}) overflows f64")));
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma_unchecked(1.0 - x));
    }
    let xm1 = x - 1.0;
    let t = xm1 + LANCZOS_G + 0.5;
    // t^(x-1/2) is split in two halves so that it does not overflow before e^-t
    // brings it back down.
    let half = t.powf(0.5 * (xm1 + 0.5));
    (2.0 * PI).sqrt() * lanczos_series(xm1) * half * (half * (-t).exp())
}

/// ln Γ(x) for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    check_positive(x, "ln_gamma")?;
    Ok(ln_gamma_unchecked(x))
}

fn ln_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma_unchecked(1.0 - x);
    }
    let xm1 = x - 1.0;
    let t = xm1 + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (xm1 + 0.5) * t.ln() - t + lanczos_series(xm1).ln()
}

/// B_{2j} for j = 1..=10.
const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Riemann ζ(θ) for real `θ > 1`.
///
/// Sums the first 15 terms exactly and closes the tail with the
/// Euler–Maclaurin formula (integral, half-term and ten Bernoulli
/// corrections). For `θ >= 64` the series is summed directly.
pub fn zeta(theta: f64) -> Result<f64> {
    if theta.is_nan() || theta <= 1.0 {
        return Err(Error::domain(format!(
            "zeta(theta) diverges for theta <= 1, got {theta}"
        )));
    }
    if theta.is_infinite() {
        return Ok(1.0);
    }
    if theta >= 64.0 {
        let mut sum = 1.0;
        let mut k = 2.0_f64;
        loop {
            let term = k.powf(-theta);
            sum += term;
            if term < 1e-18 {
                return Ok(sum);
            }
            k += 1.0;
        }
    }

    const CUT: usize = 16;
    let n = CUT as f64;
    let head: f64 = (1..CUT).rev().map(|k| (k as f64).powf(-theta)).sum();
    let mut tail = n.powf(1.0 - theta) / (theta - 1.0) + 0.5 * n.powf(-theta);
    let mut rising = theta;
    let mut npow = n.powf(-theta - 1.0);
    let mut factorial = 2.0;
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        let two_j = 2.0 * (j as f64 + 1.0);
        tail += b / factorial * rising * npow;
        rising *= (theta + two_j - 1.0) * (theta + two_j);
        npow /= n * n;
        factorial *= (two_j + 1.0) * (two_j + 2.0);
    }
    Ok(head + tail)
}

fn exp_checked(log_value: f64, what: &str) -> Result<f64> {
    let v = log_value.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Range(format!(
            "{what} = exp({log_value:.6}) is not representable in f64"
        )))
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && theta > 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("theta must be finite and > 1, got {theta}")))
    }
}

fn ln_c_ph_theta(spec: &HolderSpec, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let p = spec.p;
    let ph = spec.ph();
    if ph <= 1.0 {
        return Err(Error::domain(format!("p*h must exceed 1, got {ph}")));
    }
    let e = theta * (p - 1.0) + 1.0;
    Ok((p - 1.0) * (2.0 * zeta(theta)?).ln()
        + p * (p / (p - 1.0)).ln()
        + e * (4.0 / (ph - 1.0)).ln()
        + ln_gamma(e)?)
}

/// The chaining constant
/// `C_{p,h,θ} = [2ζ(θ)]^{p-1} (p/(p-1))^p (4/(ph-1))^{θ(p-1)+1} Γ(θ(p-1)+1)`.
pub fn c_ph_theta(spec: &HolderSpec, theta: f64) -> Result<f64> {
    exp_checked(ln_c_ph_theta(spec, theta)?, "C_(p,h,theta)")
}

/// `ln(C_{p,h,θ} A_{p,h})`, or `None` when `A_{p,h} = 0`.
pub(crate) fn ln_c_times_a(spec: &HolderSpec, theta: f64) -> Result<Option<f64>> {
    let ln_c = ln_c_ph_theta(spec, theta)?;
    Ok((spec.a_ph > 0.0).then(|| ln_c + spec.a_ph.ln()))
}

/// `K = 4T [C_{p,h,θ} A_{p,h}]^{1/(ph)} [1 + C (p/(p-1))^p]^{1-1/(ph)}`,
/// the prefactor of the supremum tail bound.
pub fn k_theorem(
    spec: &HolderSpec,
    tail: &TailDecaySpec,
    theta: f64,
    t_horizon: f64,
) -> Result<f64> {
    check_positive(t_horizon, "k_theorem horizon")?;
    let Some(ln_ca) = ln_c_times_a(spec, theta)? else {
        return Ok(0.0);
    };
    let p = spec.p;
    let ph = spec.ph();
    let ln_k = (4.0 * t_horizon).ln()
        + ln_ca / ph
        + (1.0 - 1.0 / ph) * (tail.c * (p / (p - 1.0)).powf(p)).ln_1p();
    exp_checked(ln_k, "K")
}

/// Upper end of the admissible α range for `q < p`: `(h - 1/p)/(1/q - 1/p)`.
pub fn alpha_upper(q: f64, spec: &HolderSpec) -> f64 {
    (spec.h - 1.0 / spec.p) / (1.0 / q - 1.0 / spec.p)
}

/// `K_{q,α} = 4^q [1 - 2^{-q(h-1/p) + (1-q/p)α}]^{-1}`.
///
/// For `q = p` the exponent no longer involves α and the constant is
/// `4^p [1 - 2^{1-ph}]^{-1}` for every `α > 0`.
pub fn k_q_alpha(q: f64, alpha: f64, spec: &HolderSpec) -> Result<f64> {
    let p = spec.p;
    if !(q > 0.0 && q <= p) {
        return Err(Error::domain(format!("q must lie in (0, p] = (0, {p}], got {q}")));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::domain(format!("alpha must be finite and > 0, got {alpha}")));
    }
    let exponent = if q == p {
        1.0 - spec.ph()
    } else {
        -q * (spec.h - 1.0 / p) + (1.0 - q / p) * alpha
    };
    if exponent >= 0.0 {
        return Err(Error::domain(format!(
            "alpha = {alpha} is not below the admissible upper endpoint (h-1/p)/(1/q-1/p) = {}",
            alpha_upper(q, spec)
        )));
    }
    let denom = -(exponent * LN_2).exp_m1();
    let k = 4f64.powf(q) / denom;
    if k.is_finite() {
        Ok(k)
    } else {
        Err(Error::Range(format!("K_(q,alpha) overflows for q = {q}, alpha = {alpha}")))
    }
}

/// Checks the parameter chain `0 < δ < 1 - 1/(ph)`, `δ/(h-1/p) < q < 1/h`,
/// `δ/(1-q/p) < α < (h-1/p)/(1/q-1/p)`.
pub fn check_upcross_chain(delta: f64, spec: &HolderSpec, q: f64, alpha: f64) -> Result<()> {
    let p = spec.p;
    let h = spec.h;
    let delta_max = 1.0 - 1.0 / spec.ph();
    if !(delta > 0.0 && delta < delta_max) {
        return Err(Error::domain(format!(
            "violated 0 < delta < 1 - 1/(ph): delta = {delta}, 1 - 1/(ph) = {delta_max}"
        )));
    }
    let q_low = delta / (h - 1.0 / p);
    if !(q > q_low) {
        return Err(Error::domain(format!(
            "violated delta/(h-1/p) < q: q = {q}, delta/(h-1/p) = {q_low}"
        )));
    }
    if !(q < 1.0 / h) {
        return Err(Error::domain(format!("violated q < 1/h: q = {q}, 1/h = {}", 1.0 / h)));
    }
    let alpha_low = delta / (1.0 - q / p);
    if !(alpha > alpha_low) {
        return Err(Error::domain(format!(
            "violated delta/(1-q/p) < alpha: alpha = {alpha}, delta/(1-q/p) = {alpha_low}"
        )));
    }
    let upper = alpha_upper(q, spec);
    // the endpoint itself can round either way; the sign of the exponent of 2
    // in K_{q,α} is the quantity that must be negative
    let exponent = -q * (h - 1.0 / p) + (1.0 - q / p) * alpha;
    if !(alpha < upper && exponent < 0.0) {
        return Err(Error::domain(format!(
            "violated alpha < (h-1/p)/(1/q-1/p): alpha = {alpha}, upper endpoint = {upper}, \
             exponent -q(h-1/p)+(1-q/p)alpha = {exponent:e} is not negative"
        )));
    }
    Ok(())
}

/// A feasible `(q, α)` for the up-crossing moment bound at level `δ`: the
/// midpoint of the admissible `q` interval, then the midpoint of the
/// admissible `α` interval for that `q`.
pub fn feasible_q_alpha(delta: f64, spec: &HolderSpec) -> Option<(f64, f64)> {
    let p = spec.p;
    let h = spec.h;
    if !(delta > 0.0 && delta < 1.0 - 1.0 / spec.ph()) {
        return None;
    }
    let q = 0.5 * (delta / (h - 1.0 / p) + 1.0 / h);
    let alpha = 0.5 * (delta / (1.0 - q / p) + alpha_upper(q, spec));
    check_upcross_chain(delta, spec, q, alpha).ok()?;
    k_q_alpha(q, alpha, spec).ok()?;
    Some((q, alpha))
}

/// The up-crossing constant
/// `K_δ = 2(C^{1/p}A^{1/p} + K_{q,α} ζ((1-δ)/r)^r C^{q/p}A^{q/p})`
/// with `r = 1 - α(1 - q/p)` and `C = C_{p,h,θ}`, `A = A_{p,h}`.
pub fn k_delta(delta: f64, spec: &HolderSpec, theta: f64, q: f64, alpha: f64) -> Result<f64> {
    check_upcross_chain(delta, spec, q, alpha)?;
    let kqa = k_q_alpha(q, alpha, spec)?;
    let p = spec.p;
    let r = 1.0 - alpha * (1.0 - q / p);
    let zeta_arg = (1.0 - delta) / r;
    if !(zeta_arg > 1.0) {
        return Err(Error::domain(format!(
            "zeta argument (1-delta)/(1-alpha(1-q/p)) = {zeta_arg} must exceed 1"
        )));
    }
    let z = zeta(zeta_arg)?;
    let Some(ln_ca) = ln_c_times_a(spec, theta)? else {
        return Ok(0.0);
    };
    let first = exp_checked(ln_ca / p, "(C A)^(1/p)")?;
    let second = exp_checked(kqa.ln() + r * z.ln() + ln_ca * q / p, "K_delta second term")?;
    let k = 2.0 * (first + second);
    if k.is_finite() {
        Ok(k)
    } else {
        Err(Error::Range("K_delta overflows f64".into()))
    }
}

/// `A_p = Γ((p+1)/2)/√π`, so that `E|B_t - B_s|^p = A_p |t-s|^{ph}` when
/// `B_t - B_s ~ N(0, |t-s|^{2h}/2)`.
pub fn a_p_fbm(p: f64) -> Result<f64> {
    check_positive(p, "a_p_fbm")?;
    Ok(gamma(0.5 * (p + 1.0))? / PI.sqrt())
}

/// Khintchine constant `C_p = max(√(2^p/π) Γ((p+1)/2), 1)`.
pub fn c_p_khintchine(p: f64) -> Result<f64> {
    check_positive(p, "c_p_khintchine")?;
    let v = (2f64.powf(p) / PI).sqrt() * gamma(0.5 * (p + 1.0))?;
    if !v.is_finite() {
        return Err(Error::Range(format!("Khintchine constant overflows for p = {p}")));
    }
    Ok(v.max(1.0))
}

/// `A_{p,h} = (2^p/√π) Γ((p+1)/2) [Σ a_k² L_k²]^{p/2}` for a Rademacher
/// series, given the weight sum `Σ a_k² L_k²`.
pub fn a_ph_series(p: f64, weight_sum: f64) -> Result<f64> {
    check_positive(p, "a_ph_series")?;
    if !(weight_sum.is_finite() && weight_sum >= 0.0) {
        return Err(Error::domain(format!(
            "weight sum must be finite and >= 0, got {weight_sum}"
        )));
    }
    if weight_sum == 0.0 {
        return Ok(0.0);
    }
    let ln_v = p * LN_2 - 0.5 * PI.ln() + ln_gamma(0.5 * (p + 1.0))? + 0.5 * p * weight_sum.ln();
    exp_checked(ln_v, "A_(p,h)")
}
