//! End-to-end experiments: simulate, estimate, bound, compare.
//!
//! A [`Verdict`] passes exactly when the upper confidence limit of the
//! empirical quantity is at most the bound; point estimates are never
//! compared directly.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::bounds::{
    fbm_marginal_tail, fbm_sup_bound, prop1_lq_bound, series_sup_tail, series_tail_bounds, upcross_moment_bound,
    upcross_random_time_bound, BoundReport, UNSPECIFIED_CONSTANT_NOTE,
};
use crate::constants::{a_p_fbm, a_ph_series, check_upcross_chain, feasible_q_alpha, HolderSpec};
use crate::error::{Error, Result};
use crate::estimators::{
    bootstrap_mean, count_upcrossings, decompose_mesh, dyadic_decompose, empirical_lq_norm, empirical_tail,
    lemma3_holds, mean, path_supremum, upcrossings_by_definition, Bootstrap, CrossingBand, DyadicInterval,
    EmpiricalEstimate, UpcrossingReport,
};
use crate::format::sig17;
use crate::processes::{
    map_paths, map_paths_indexed, FbmGenerator, PathGenerator, RademacherSeriesGenerator, RandomWalkGenerator,
    SeriesSpec, TimeGrid,
};
use crate::rng::{self, Purpose};

pub const DEFAULT_SEED: u64 = 0xC0FFEE;
pub const DEFAULT_CONFIDENCE: f64 = 0.99;
pub const DEFAULT_PATHS: usize = 10_000;
pub const DEFAULT_STEPS: usize = 512;
pub const DEFAULT_SUITE_CASES: usize = 10_000;
pub const MIN_PATHS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    DoobLq,
    SupTailFbm,
    SupTailSeries,
    MarginalTailFbm,
    Upcross,
    RandomTimes,
    Lemma3Suite,
    DyadicSuite,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::DoobLq,
        ExperimentKind::SupTailFbm,
        ExperimentKind::SupTailSeries,
        ExperimentKind::MarginalTailFbm,
        ExperimentKind::Upcross,
        ExperimentKind::RandomTimes,
        ExperimentKind::Lemma3Suite,
        ExperimentKind::DyadicSuite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::DoobLq => "doob_lq",
            ExperimentKind::SupTailFbm => "sup_tail_fbm",
            ExperimentKind::SupTailSeries => "sup_tail_series",
            ExperimentKind::MarginalTailFbm => "marginal_tail_fbm",
            ExperimentKind::Upcross => "upcross",
            ExperimentKind::RandomTimes => "random_times",
            ExperimentKind::Lemma3Suite => "lemma3_suite",
            ExperimentKind::DyadicSuite => "dyadic_suite",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn is_suite(self) -> bool {
        matches!(self, ExperimentKind::Lemma3Suite | ExperimentKind::DyadicSuite)
    }
}

/// Which process an experiment simulates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessConfig {
    Fbm {
        h: f64,
    },
    RandomWalk,
    Series {
        gamma: f64,
        h: f64,
        /// Smallest admissible truncation when absent.
        k_max: Option<usize>,
        scale: f64,
    },
}

impl ProcessConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ProcessConfig::Fbm { .. } => "fbm",
            ProcessConfig::RandomWalk => "random_walk",
            ProcessConfig::Series { .. } => "series",
        }
    }

    pub fn series_spec(&self) -> Result<Option<SeriesSpec>> {
        let ProcessConfig::Series { gamma, h, k_max, scale } = *self else {
            return Ok(None);
        };
        let spec = match k_max {
            Some(k) => SeriesSpec::new(gamma, k, h)?,
            None => SeriesSpec::auto(gamma, h)?,
        };
        Ok(Some(spec.with_scale(scale)?))
    }

    pub fn generator(&self, grid: &TimeGrid) -> Result<Box<dyn PathGenerator>> {
        Ok(match self {
            ProcessConfig::Fbm { h } => Box::new(FbmGenerator::new(*h, grid.clone())?),
            ProcessConfig::RandomWalk => Box::new(RandomWalkGenerator::new(grid.clone())),
            ProcessConfig::Series { .. } => Box::new(RademacherSeriesGenerator::new(
                self.series_spec()?.expect("series process"),
                grid.clone(),
            )?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub process: ProcessConfig,
    pub horizon: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub confidence: f64,
    /// Levels λ; tail experiments compare at `2λ` for suprema, `λ` for marginals.
    pub lambdas: Vec<f64>,
    pub band: Option<CrossingBand>,
    /// Exponent of the increment condition; `2/h` when absent.
    pub p: Option<f64>,
    /// `p/(p-1)` when absent.
    pub theta: Option<f64>,
    pub q: Option<f64>,
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    /// Time of the marginal in `marginal_tail_fbm`; the horizon when absent.
    pub t_marginal: Option<f64>,
    pub resamples: usize,
    /// Random cases per property suite.
    pub suite_cases: usize,
    /// `(C_h, D_h)` of the series supremum tail; [`crate::bounds::series_sup_constants`]
    /// when absent.
    #[serde(default)]
    pub series_constants: Option<(f64, f64)>,
}

impl ExperimentConfig {
    /// The configuration used by the default suite.
    pub fn default_for(experiment: ExperimentKind) -> Self {
        let base = Self {
            experiment,
            process: ProcessConfig::Fbm { h: 0.5 },
            horizon: 1.0,
            n_steps: DEFAULT_STEPS,
            n_paths: DEFAULT_PATHS,
            seed: DEFAULT_SEED,
            confidence: DEFAULT_CONFIDENCE,
            lambdas: Vec::new(),
            band: None,
            p: None,
            theta: None,
            q: None,
            alpha: None,
            delta: None,
            t_marginal: None,
            resamples: Bootstrap::DEFAULT_RESAMPLES,
            suite_cases: DEFAULT_SUITE_CASES,
            series_constants: None,
        };
        match experiment {
            ExperimentKind::DoobLq => Self {
                process: ProcessConfig::RandomWalk,
                q: Some(2.0),
                ..base
            },
            ExperimentKind::SupTailFbm => Self {
                lambdas: vec![1.5, 2.0, 2.5, 3.0],
                ..base
            },
            ExperimentKind::SupTailSeries => Self {
                process: ProcessConfig::Series {
                    gamma: 2.0,
                    h: 0.5,
                    k_max: None,
                    scale: 1.0,
                },
                lambdas: vec![10.0, 20.0, 30.0],
                ..base
            },
            ExperimentKind::MarginalTailFbm => Self {
                lambdas: vec![0.25, 0.5, 1.0, 2.0],
                ..base
            },
            ExperimentKind::Upcross => Self {
                band: Some(CrossingBand::new(-0.1, 0.1).expect("valid band")),
                p: Some(4.0),
                delta: Some(0.25),
                q: Some(1.5),
                alpha: Some(0.5),
                ..base
            },
            ExperimentKind::RandomTimes => Self {
                p: Some(4.0),
                q: Some(1.0),
                alpha: Some(0.2),
                ..base
            },
            ExperimentKind::Lemma3Suite | ExperimentKind::DyadicSuite => Self {
                process: ProcessConfig::RandomWalk,
                ..base
            },
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < MIN_PATHS {
            return Err(Error::Config(format!("n_paths must be at least {MIN_PATHS}, got {}", self.n_paths)));
        }
        if !(self.confidence > 0.5 && self.confidence < 1.0) {
            return Err(Error::Config(format!("confidence must lie in (0.5, 1), got {}", self.confidence)));
        }
        if self.n_steps == 0 {
            return Err(Error::Config("n_steps must be at least 1".into()));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Config(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.resamples == 0 {
            return Err(Error::Config("bootstrap resamples must be at least 1".into()));
        }
        if let Some(x) = self.lambdas.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::Config(format!("lambda values must be positive, got {x}")));
        }
        let expected: &[&str] = match self.experiment {
            ExperimentKind::DoobLq => &["random_walk"],
            ExperimentKind::SupTailFbm | ExperimentKind::MarginalTailFbm | ExperimentKind::RandomTimes => &["fbm"],
            ExperimentKind::SupTailSeries => &["series"],
            ExperimentKind::Upcross => &["fbm", "series"],
            ExperimentKind::Lemma3Suite | ExperimentKind::DyadicSuite => return Ok(()),
        };
        if !expected.contains(&self.process.name()) {
            return Err(Error::Config(format!(
                "experiment {} needs process {}, got {}",
                self.experiment.name(),
                expected.join(" or "),
                self.process.name()
            )));
        }
        if matches!(self.experiment, ExperimentKind::SupTailFbm | ExperimentKind::SupTailSeries | ExperimentKind::MarginalTailFbm)
            && self.lambdas.is_empty()
        {
            return Err(Error::Config(format!("experiment {} needs a lambda grid", self.experiment.name())));
        }
        Ok(())
    }

    fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::uniform(self.horizon, self.n_steps)
    }

    fn bootstrap(&self) -> Bootstrap {
        Bootstrap {
            resamples: self.resamples,
            seed: self.seed,
        }
    }

    fn hurst(&self) -> f64 {
        match self.process {
            ProcessConfig::Fbm { h } | ProcessConfig::Series { h, .. } => h,
            ProcessConfig::RandomWalk => 0.5,
        }
    }

    /// The `(p, h, A_{p,h})` governing the configured process.
    pub fn holder_spec(&self) -> Result<HolderSpec> {
        let h = self.hurst();
        let p = self.p.unwrap_or(2.0 / h);
        match &self.process {
            ProcessConfig::Fbm { .. } => HolderSpec::fbm(p, h),
            ProcessConfig::RandomWalk => HolderSpec::new(p, h, 0.0),
            ProcessConfig::Series { .. } => {
                let spec = self.process.series_spec()?.expect("series process");
                HolderSpec::new(p, h, a_ph_series(p, spec.weight_sum())?)
            }
        }
    }

    fn theta_for(&self, spec: &HolderSpec) -> f64 {
        self.theta.unwrap_or_else(|| spec.default_theta())
    }

    fn require(&self, v: Option<f64>, name: &str) -> Result<f64> {
        v.ok_or_else(|| Error::Config(format!("experiment {} needs '{name}'", self.experiment.name())))
    }
}

/// The default suite: every experiment at its default configuration.
pub fn default_suite(seed: u64) -> Vec<ExperimentConfig> {
    ExperimentKind::ALL
        .into_iter()
        .map(|k| ExperimentConfig::default_for(k).with_seed(seed))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub experiment: String,
    pub lambda: Option<f64>,
    pub seed: u64,
    pub empirical: EmpiricalEstimate,
    pub bound: BoundReport,
    pub pass: bool,
    /// `bound.value - empirical.ci_high`.
    pub margin: f64,
    /// The bound is a probability bound `>= 1`.
    pub vacuous: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Verdict {
    pub fn new(experiment: ExperimentKind, lambda: Option<f64>, seed: u64, empirical: EmpiricalEstimate, bound: BoundReport) -> Self {
        let pass = empirical.ci_high <= bound.value;
        Self {
            experiment: experiment.name().to_string(),
            lambda,
            seed,
            margin: bound.value - empirical.ci_high,
            vacuous: bound.is_vacuous(),
            empirical,
            bound,
            pass,
            notes: Vec::new(),
        }
    }

    fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// `experiment,lambda,empirical,ci_high,bound,pass,margin`.
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.experiment,
            self.lambda.map(sig17).unwrap_or_default(),
            sig17(self.empirical.point),
            sig17(self.empirical.ci_high),
            sig17(self.bound.value),
            self.pass,
            sig17(self.margin)
        )
    }
}

pub const CSV_HEADER: &str = "experiment,lambda,empirical,ci_high,bound,pass,margin";

fn ensure(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if cfg.experiment != kind {
        return Err(Error::Config(format!(
            "runner for {} got a config for {}",
            kind.name(),
            cfg.experiment.name()
        )));
    }
    cfg.validate()
}

/// Doob's `L^q` inequality for the random-walk martingale: the empirical
/// `‖max_j |M_{t_j}|‖_q` against `q/(q-1) ‖M_T‖_q`.
pub fn run_doob_lq(cfg: &ExperimentConfig) -> Result<Verdict> {
    ensure(cfg, ExperimentKind::DoobLq)?;
    let q = cfg.require(cfg.q, "q")?;
    let grid = cfg.grid()?;
    let gen = cfg.process.generator(&grid)?;
    let pairs = map_paths(gen.as_ref(), cfg.n_paths, cfg.seed, |p| (path_supremum(p), p[p.len() - 1].abs()));
    let (maxima, terminal): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    doob_verdict(cfg, q, &maxima, &terminal)
}

fn doob_verdict(cfg: &ExperimentConfig, q: f64, maxima: &[f64], terminal: &[f64]) -> Result<Verdict> {
    if !(q > 1.0) {
        return Err(Error::Config(format!("Doob's inequality needs q > 1, got {q}")));
    }
    let empirical = empirical_lq_norm(maxima, q, cfg.confidence, &cfg.bootstrap())?;
    let powered: Vec<f64> = terminal.iter().map(|x| x.powf(q)).collect();
    let terminal_lq = mean(&powered).powf(q.recip());
    // martingale: conditional increments vanish, any admissible (p, h) works
    let spec = HolderSpec::new(q.max(4.0), 0.5, 0.0)?;
    let bound = prop1_lq_bound(&spec, spec.default_theta(), q, 0.0, cfg.horizon, terminal_lq)?;
    Ok(Verdict::new(ExperimentKind::DoobLq, None, cfg.seed, empirical, bound)
        .note("terminal L^q norm is the sample value"))
}

fn suprema(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    let grid = cfg.grid()?;
    let gen = cfg.process.generator(&grid)?;
    Ok(map_paths(gen.as_ref(), cfg.n_paths, cfg.seed, path_supremum))
}

/// `P(max_j |B_{t_j}| >= 2λ)` against the fBm supremum bound, per λ.
pub fn run_sup_tail_fbm(cfg: &ExperimentConfig) -> Result<Vec<Verdict>> {
    ensure(cfg, ExperimentKind::SupTailFbm)?;
    let h = cfg.hurst();
    let sups = suprema(cfg)?;
    cfg.lambdas
        .iter()
        .map(|&lambda| {
            let empirical = empirical_tail(&sups, 2.0 * lambda, cfg.confidence)?;
            let bound = fbm_sup_bound(h, cfg.horizon, lambda)?;
            Ok(annotate_vacuous(Verdict::new(
                ExperimentKind::SupTailFbm,
                Some(lambda),
                cfg.seed,
                empirical,
                bound,
            )))
        })
        .collect()
}

fn annotate_vacuous(v: Verdict) -> Verdict {
    if v.vacuous {
        v.note("vacuous")
    } else {
        v
    }
}

/// `P(max_j |X_{t_j}| >= 2λ)` for a Rademacher series against the default
/// supremum-tail constants.
pub fn run_sup_tail_series(cfg: &ExperimentConfig) -> Result<Vec<Verdict>> {
    ensure(cfg, ExperimentKind::SupTailSeries)?;
    let spec = cfg.process.series_spec()?.expect("series process");
    let sups = suprema(cfg)?;
    cfg.lambdas
        .iter()
        .map(|&lambda| {
            let empirical = empirical_tail(&sups, 2.0 * lambda, cfg.confidence)?;
            let (bound, caveat) = match cfg.series_constants {
                Some((c_h, d_h)) => (
                    series_tail_bounds(&spec, lambda, c_h, d_h)?.note(UNSPECIFIED_CONSTANT_NOTE),
                    "C_h, D_h set by the configuration",
                ),
                None => (series_sup_tail(&spec, cfg.horizon, lambda)?, "C_h, D_h are artifact defaults"),
            };
            Ok(annotate_vacuous(
                Verdict::new(ExperimentKind::SupTailSeries, Some(lambda), cfg.seed, empirical, bound)
                    .note(format!("{caveat}: {UNSPECIFIED_CONSTANT_NOTE}")),
            ))
        })
        .collect()
}

/// Exact two-sided tail `P(|B_t| >= λ) = erfc(λ/t^h)` under
/// `B_t ~ N(0, t^{2h}/2)`.
pub fn fbm_exact_marginal_tail(h: f64, t: f64, lambda: f64) -> f64 {
    erfc(lambda / t.powf(h))
}

/// `P(|B_t| >= λ)` at a grid time against the displayed marginal bound.
pub fn run_marginal_tail_fbm(cfg: &ExperimentConfig) -> Result<Vec<Verdict>> {
    ensure(cfg, ExperimentKind::MarginalTailFbm)?;
    let h = cfg.hurst();
    let grid = cfg.grid()?;
    let target = cfg.t_marginal.unwrap_or(cfg.horizon);
    let j = grid.nearest_index(target);
    if j == 0 {
        return Err(Error::Config(format!("marginal time {target} rounds to t = 0")));
    }
    let t = grid.points()[j];
    let gen = cfg.process.generator(&grid)?;
    let values = map_paths(gen.as_ref(), cfg.n_paths, cfg.seed, |p| p[j].abs());
    cfg.lambdas
        .iter()
        .map(|&lambda| {
            let empirical = empirical_tail(&values, lambda, cfg.confidence)?;
            let bound = fbm_marginal_tail(h, t, lambda)?;
            let exact = fbm_exact_marginal_tail(h, t, lambda);
            Ok(annotate_vacuous(
                Verdict::new(ExperimentKind::MarginalTailFbm, Some(lambda), cfg.seed, empirical, bound)
                    .note(format!("t = {t}; exact two-sided tail erfc(lambda/t^h) = {}", sig17(exact))),
            ))
        })
        .collect()
}

/// `E[U^δ]` over the band against the up-crossing moment bound. Every path
/// is also checked against the pathwise inequality behind it, for all
/// `k <= U + 2`; a violation is an [`Error::Invariant`].
pub fn run_upcross(cfg: &ExperimentConfig) -> Result<Verdict> {
    ensure(cfg, ExperimentKind::Upcross)?;
    let band = cfg
        .band
        .ok_or_else(|| Error::Config("experiment upcross needs a [band]".into()))?;
    let spec = cfg.holder_spec()?;
    let theta = cfg.theta_for(&spec);
    let delta = cfg.require(cfg.delta, "delta")?;
    let q = cfg.require(cfg.q, "q")?;
    let alpha = cfg.require(cfg.alpha, "alpha")?;
    if let Err(e) = check_upcross_chain(delta, &spec, q, alpha) {
        let hint = match feasible_q_alpha(delta, &spec) {
            Some((fq, fa)) => format!("; a feasible choice is q = {fq}, alpha = {fa}"),
            None => format!("; no (q, alpha) is feasible for delta = {delta} with p*h = {}", spec.ph()),
        };
        return Err(Error::Config(format!("infeasible up-crossing parameters: {e}{hint}")));
    }
    let bound = upcross_moment_bound(&spec, theta, delta, band, cfg.horizon, q, alpha)?;
    let grid = cfg.grid()?;
    let gen = cfg.process.generator(&grid)?;
    let per_path = map_paths_indexed(gen.as_ref(), cfg.n_paths, cfg.seed, |i, p| {
        let report = count_upcrossings(p, band);
        let bad_k = (1..=report.count + 2).find(|&k| !lemma3_holds(p, &report, k));
        ((report.count as f64).powf(delta), bad_k.map(|k| (i, k)))
    });
    if let Some((i, k)) = per_path.iter().find_map(|(_, bad)| *bad) {
        return Err(Error::Invariant(format!(
            "pathwise up-crossing inequality fails on path {i}, k = {k} (seed {})",
            cfg.seed
        )));
    }
    let samples: Vec<f64> = per_path.into_iter().map(|(u, _)| u).collect();
    let empirical = bootstrap_mean(&samples, cfg.confidence, &cfg.bootstrap())?;
    Ok(Verdict::new(ExperimentKind::Upcross, None, cfg.seed, empirical, bound)
        .note(format!("pathwise inequality checked on {} paths", cfg.n_paths)))
}

/// Uniform random times on the grid: `σ = T U₁`, `τ = σ + (T - σ) U₂`, each
/// snapped to the nearest grid point. Returns grid indices.
pub fn random_time_pair(grid: &TimeGrid, seed: u64, path: usize) -> (usize, usize) {
    let mut rng = rng::stream(seed, Purpose::RandomTimes, path as u64);
    let t = grid.horizon();
    let (u1, u2): (f64, f64) = (rng.random(), rng.random());
    let sigma = t * u1;
    let tau = sigma + (t - sigma) * u2;
    (grid.nearest_index(sigma), grid.nearest_index(tau))
}

/// `E|X_τ - X_σ|^q` at random times against the random-time moment bound,
/// with `E((τ-σ)/T)^α` measured on the same sampled times.
pub fn run_random_times(cfg: &ExperimentConfig) -> Result<Verdict> {
    ensure(cfg, ExperimentKind::RandomTimes)?;
    let grid = cfg.grid()?;
    let gen = cfg.process.generator(&grid)?;
    let q = cfg.require(cfg.q, "q")?;
    let alpha = cfg.require(cfg.alpha, "alpha")?;
    let t = grid.points().to_vec();
    let horizon = grid.horizon();
    let pairs = map_paths_indexed(gen.as_ref(), cfg.n_paths, cfg.seed, |i, p| {
        let (s, u) = random_time_pair(&grid, cfg.seed, i);
        ((p[u] - p[s]).abs().powf(q), ((t[u] - t[s]) / horizon).powf(alpha))
    });
    let (moments, gaps): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    random_times_verdict(cfg, q, alpha, &moments, &gaps)
}

fn random_times_verdict(
    cfg: &ExperimentConfig,
    q: f64,
    alpha: f64,
    moments: &[f64],
    gaps: &[f64],
) -> Result<Verdict> {
    let spec = cfg.holder_spec()?;
    let theta = cfg.theta_for(&spec);
    let gap_moment = mean(gaps).clamp(0.0, 1.0);
    let bound = upcross_random_time_bound(&spec, theta, q, alpha, cfg.horizon, gap_moment)?;
    let empirical = bootstrap_mean(moments, cfg.confidence, &cfg.bootstrap())?;
    Ok(Verdict::new(ExperimentKind::RandomTimes, None, cfg.seed, empirical, bound)
        .note(format!("E((tau-sigma)/T)^alpha = {} measured on the sampled times", sig17(gap_moment))))
}

/// One failed property-suite case, with what is needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteFailure {
    pub suite: String,
    pub case: usize,
    pub seed: u64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub suite: String,
    pub seed: u64,
    pub cases: usize,
    pub checks: usize,
    pub failure_count: usize,
    /// The first few failures.
    pub failures: Vec<SuiteFailure>,
}

const MAX_REPORTED_FAILURES: usize = 20;

impl SuiteSummary {
    fn new(suite: ExperimentKind, seed: u64, cases: usize) -> Self {
        Self {
            suite: suite.name().to_string(),
            seed,
            cases,
            checks: 0,
            failure_count: 0,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, case: usize, detail: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failure_count += 1;
            if self.failures.len() < MAX_REPORTED_FAILURES {
                self.failures.push(SuiteFailure {
                    suite: self.suite.clone(),
                    case,
                    seed: self.seed,
                    detail: detail(),
                });
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failure_count == 0
    }
}

/// A crossing counter under test; [`count_upcrossings`] in production.
pub type Counter<'a> = &'a dyn Fn(&[f64], CrossingBand) -> UpcrossingReport;

/// Random integer path of length `1..=50` with values in `[-3, 3]`, a band
/// with integer or half-integer levels, and a `k`; case `i` of the
/// up-crossing suite under `seed`.
pub fn lemma3_case(seed: u64, case: usize, counter: Counter<'_>) -> (Vec<f64>, CrossingBand, usize) {
    let mut rng = rng::stream(seed, Purpose::Suite, case as u64);
    let len = rng.random_range(1..=50);
    let values: Vec<f64> = (0..len).map(|_| rng.random_range(-3i32..=3) as f64).collect();
    let a = rng.random_range(-6i32..=5) as f64 * 0.5;
    let b = a + rng.random_range(1i32..=6) as f64 * 0.5;
    let band = CrossingBand::new(a, b).expect("a < b");
    let u = counter(&values, band).count;
    let k = rng.random_range(1..=u + 2);
    (values, band, k)
}

/// Crossing-counter and pathwise-inequality suite: per case, the counter must
/// reproduce the literal definition (count and every crossing time), and the
/// pathwise inequality must hold at the drawn `k`.
pub fn run_lemma3_suite(cfg: &ExperimentConfig, counter: Counter<'_>) -> SuiteSummary {
    let mut summary = SuiteSummary::new(ExperimentKind::Lemma3Suite, cfg.seed, cfg.suite_cases);
    for case in 0..cfg.suite_cases {
        let (values, band, k) = lemma3_case(cfg.seed, case, counter);
        let got = counter(&values, band);
        let want = upcrossings_by_definition(&values, band);
        summary.check(got == want, case, || {
            format!(
                "counter gives U = {} at {:?}, definition gives U = {} at {:?}",
                got.count, got.crossing_indices, want.count, want.crossing_indices
            )
        });
        summary.check(lemma3_holds(&values, &got, k), case, || {
            format!("pathwise inequality fails for k = {k}, band ({}, {})", band.a(), band.b())
        });
    }
    summary
}

/// Dyadic-cover suite: random mesh-aligned `[s, t] ⊂ [s0, t0]`; the cover
/// must be contiguous with disjoint interiors, use at most two intervals per
/// level, agree with an independent top-down split, and have total length
/// `t - s` within 1e-12.
pub fn run_dyadic_suite(cfg: &ExperimentConfig) -> SuiteSummary {
    let mut summary = SuiteSummary::new(ExperimentKind::DyadicSuite, cfg.seed, cfg.suite_cases);
    for case in 0..cfg.suite_cases {
        let mut rng = rng::stream(cfg.seed, Purpose::Suite, (1u64 << 40) + case as u64);
        let level: u32 = rng.random_range(1..=20);
        let cells = 1u64 << level;
        let s0: f64 = rng.random_range(-10.0..10.0);
        let width: f64 = rng.random_range(0.1..10.0);
        let t0 = s0 + width;
        let i = rng.random_range(0..cells);
        let j = rng.random_range(i + 1..=cells);
        let at = |k: u64| s0 + width * (k as f64 / cells as f64);
        let (s, t) = (at(i), at(j));
        match dyadic_decompose(s, t, s0, t0, level) {
            Ok(cover) => check_cover(&mut summary, case, &cover, (s, t), (i, j, level)),
            Err(e) => summary.check(false, case, || format!("[{s}, {t}] in [{s0}, {t0}]: {e}")),
        }
    }
    summary
}

fn check_cover(summary: &mut SuiteSummary, case: usize, cover: &[DyadicInterval], (s, t): (f64, f64), (i, j, level): (u64, u64, u32)) {
    let mut per_level: BTreeMap<u32, usize> = BTreeMap::new();
    for d in cover {
        *per_level.entry(d.level).or_default() += 1;
    }
    summary.check(per_level.values().all(|&c| c <= 2), case, || format!("more than two intervals on a level: {per_level:?}"));
    let tol = 1e-12;
    let contiguous = cover.windows(2).all(|w| (w[0].endpoints.1 - w[1].endpoints.0).abs() <= tol)
        && (cover[0].endpoints.0 - s).abs() <= tol
        && (cover[cover.len() - 1].endpoints.1 - t).abs() <= tol;
    summary.check(contiguous, case, || format!("cover of [{s}, {t}] is not contiguous: {cover:?}"));
    let total: f64 = cover.iter().map(DyadicInterval::length).sum();
    summary.check((total - (t - s)).abs() <= tol, case, || format!("total length {total} vs {}", t - s));
    let mut expect = Vec::new();
    top_down_split(0, 1 << level, 0, i, j, &mut expect);
    let mut got = decompose_mesh(i, j, level);
    got.sort_unstable();
    expect.sort_unstable();
    summary.check(got == expect, case, || format!("greedy {got:?} vs top-down {expect:?}"));
}

fn top_down_split(lo: u64, hi: u64, level: u32, i: u64, j: u64, out: &mut Vec<(u32, u64)>) {
    if j <= lo || hi <= i {
        return;
    }
    if i <= lo && hi <= j {
        out.push((level, lo / (hi - lo) + 1));
        return;
    }
    let mid = (lo + hi) / 2;
    top_down_split(lo, mid, level + 1, i, j, out);
    top_down_split(mid, hi, level + 1, i, j, out);
}

/// Runs the property suites selected by `configs` (both when none is), with
/// `counter` as the crossing counter.
pub fn run_suites_with(configs: &[ExperimentConfig], counter: Counter<'_>) -> Vec<SuiteSummary> {
    let mut out = Vec::new();
    let defaults;
    let configs = if configs.iter().any(|c| c.experiment.is_suite()) {
        configs
    } else {
        defaults = [
            ExperimentConfig::default_for(ExperimentKind::DyadicSuite),
            ExperimentConfig::default_for(ExperimentKind::Lemma3Suite),
        ];
        &defaults[..]
    };
    for cfg in configs {
        match cfg.experiment {
            ExperimentKind::DyadicSuite => out.push(run_dyadic_suite(cfg)),
            ExperimentKind::Lemma3Suite => out.push(run_lemma3_suite(cfg, counter)),
            _ => {}
        }
    }
    out
}

pub fn run_suites(configs: &[ExperimentConfig]) -> Vec<SuiteSummary> {
    run_suites_with(configs, &count_upcrossings)
}

/// Everything one `verify` run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub verdicts: Vec<Verdict>,
    pub suites: Vec<SuiteSummary>,
}

impl VerifyReport {
    pub fn failed_verdicts(&self) -> usize {
        self.verdicts.iter().filter(|v| !v.pass).count()
    }

    pub fn suite_failures(&self) -> usize {
        self.suites.iter().map(|s| s.failure_count).sum()
    }

    pub fn all_passed(&self) -> bool {
        self.failed_verdicts() == 0 && self.suite_failures() == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values are finite") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.to_string()))
    }

    /// Header plus one row per verdict, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for v in &self.verdicts {
            out.push_str(&v.to_csv_row());
            out.push('\n');
        }
        out
    }
}

/// Runs one experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(Vec<Verdict>, Vec<SuiteSummary>)> {
    Ok(match cfg.experiment {
        ExperimentKind::DoobLq => (vec![run_doob_lq(cfg)?], vec![]),
        ExperimentKind::SupTailFbm => (run_sup_tail_fbm(cfg)?, vec![]),
        ExperimentKind::SupTailSeries => (run_sup_tail_series(cfg)?, vec![]),
        ExperimentKind::MarginalTailFbm => (run_marginal_tail_fbm(cfg)?, vec![]),
        ExperimentKind::Upcross => (vec![run_upcross(cfg)?], vec![]),
        ExperimentKind::RandomTimes => (vec![run_random_times(cfg)?], vec![]),
        ExperimentKind::Lemma3Suite => (vec![], vec![run_lemma3_suite(cfg, &count_upcrossings)]),
        ExperimentKind::DyadicSuite => (vec![], vec![run_dyadic_suite(cfg)]),
    })
}

/// Runs every configured experiment in order.
pub fn run_all(configs: &[ExperimentConfig], seed: u64) -> Result<VerifyReport> {
    let mut report = VerifyReport {
        seed,
        verdicts: Vec::new(),
        suites: Vec::new(),
    };
    for cfg in configs {
        let (verdicts, suites) = run_experiment(cfg)?;
        report.verdicts.extend(verdicts);
        report.suites.extend(suites);
    }
    Ok(report)
}

/// Mean of `p` ratio `|B_t - B_s|^p / |t-s|^{ph}` averaged over all grid pairs,
/// for one path; its expectation is `A_p` for fBm.
pub fn pooled_increment_ratio(path: &[f64], grid: &TimeGrid, p: f64, h: f64) -> f64 {
    let t = grid.points();
    let mut acc = Vec::with_capacity(t.len() * (t.len() - 1) / 2);
    for i in 0..t.len() {
        for j in i + 1..t.len() {
            acc.push((path[j] - path[i]).abs().powf(p) / (t[j] - t[i]).powf(p * h));
        }
    }
    mean(&acc)
}

/// `A_p` for fBm, re-exported for the acceptance fixtures.
pub fn fbm_increment_constant(p: f64) -> Result<f64> {
    a_p_fbm(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small(kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig {
            n_paths: 2_000,
            n_steps: 64,
            resamples: 200,
            suite_cases: 500,
            ..ExperimentConfig::default_for(kind)
        }
        .with_seed(7)
    }

    #[test]
    fn config_validation() {
        let mut c = small(ExperimentKind::DoobLq);
        c.n_paths = 99;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = small(ExperimentKind::DoobLq);
        c.confidence = 0.5;
        assert!(c.validate().is_err());
        let mut c = small(ExperimentKind::DoobLq);
        c.process = ProcessConfig::Fbm { h: 0.5 };
        assert!(c.validate().is_err());
        let mut c = small(ExperimentKind::SupTailFbm);
        c.lambdas.clear();
        assert!(c.validate().is_err());
        assert!(run_doob_lq(&small(ExperimentKind::SupTailFbm)).is_err());
    }

    #[test]
    fn verdict_pass_is_ci_high_below_bound() {
        let c = small(ExperimentKind::SupTailFbm);
        for v in run_sup_tail_fbm(&c).unwrap() {
            assert_eq!(v.pass, v.empirical.ci_high <= v.bound.value);
            assert_eq!(v.margin, v.bound.value - v.empirical.ci_high);
        }
    }

    #[test]
    fn doob_passes_and_zero_martingale_is_trivial() {
        for q in [2.0, 1.1] {
            let mut c = small(ExperimentKind::DoobLq);
            c.q = Some(q);
            let v = run_doob_lq(&c).unwrap();
            assert!(v.pass && v.margin > 0.0, "{v:?}");
        }
        let c = small(ExperimentKind::DoobLq);
        let v = doob_verdict(&c, 2.0, &[0.0; 200], &[0.0; 200]).unwrap();
        assert_eq!((v.empirical.ci_high, v.bound.value), (0.0, 0.0));
        assert!(v.pass);
    }

    #[test]
    fn small_lambda_is_vacuous() {
        let mut c = small(ExperimentKind::SupTailFbm);
        c.lambdas = vec![0.1];
        let v = &run_sup_tail_fbm(&c).unwrap()[0];
        assert!(v.pass && v.vacuous);
        assert!(v.notes.iter().any(|n| n == "vacuous"));
    }

    #[test]
    fn series_experiment_runs_and_rises_with_scale() {
        let c = small(ExperimentKind::SupTailSeries);
        let base = run_sup_tail_series(&c).unwrap();
        assert!(base.iter().all(|v| v.pass));
        let mut scaled = c.clone();
        scaled.process = ProcessConfig::Series {
            gamma: 2.0,
            h: 0.5,
            k_max: None,
            scale: 2f64.sqrt(),
        };
        scaled.lambdas = vec![3.0];
        let mut plain = c.clone();
        plain.lambdas = vec![3.0];
        let (a, b) = (&run_sup_tail_series(&plain).unwrap()[0], &run_sup_tail_series(&scaled).unwrap()[0]);
        assert!(b.empirical.point >= a.empirical.point);
        assert!(b.bound.value >= a.bound.value);
    }

    #[test]
    fn degenerate_single_term_series() {
        let mut c = small(ExperimentKind::SupTailSeries);
        c.process = ProcessConfig::Series {
            gamma: 20.0,
            h: 0.5,
            k_max: Some(1),
            scale: 1.0,
        };
        c.lambdas = vec![0.25, 0.5, 1.0];
        let v = run_sup_tail_series(&c).unwrap();
        // |X| = |cos| reaches 1 at t = 0: the tail is 1 below level 1, 0 above
        assert_eq!(v[0].empirical.point, 1.0);
        assert_eq!(v[2].empirical.point, 0.0);
        assert!(v.iter().all(|v| v.pass));
    }

    #[test]
    fn marginal_tail_matches_exact_law_but_not_the_displayed_bound() {
        let mut c = small(ExperimentKind::MarginalTailFbm);
        c.n_paths = 20_000;
        c.lambdas = vec![0.25, 1.0, 2.0, 50.0];
        let v = run_marginal_tail_fbm(&c).unwrap();
        for x in &v {
            let exact = fbm_exact_marginal_tail(0.5, 1.0, x.lambda.unwrap());
            assert!(x.empirical.ci_low <= exact && exact <= x.empirical.ci_high, "{x:?}");
        }
        assert!(v[0].pass && v[0].vacuous);
        assert!(!v[1].pass && !v[2].pass, "the displayed one-sided bound is exceeded");
        // far in the tail the bound sits below the Monte-Carlo resolution
        // 1 - (tail)^{1/M} of the upper confidence limit
        assert_eq!(v[3].empirical.point, 0.0);
        assert!(v[3].bound.value < v[3].empirical.ci_high && !v[3].pass);
    }

    #[test]
    fn upcross_runs_and_checks_feasibility() {
        let mut c = small(ExperimentKind::Upcross);
        c.n_steps = 256;
        let v = run_upcross(&c).unwrap();
        assert!(v.pass, "{v:?}");
        c.alpha = Some(0.6);
        match run_upcross(&c) {
            Err(Error::Config(msg)) => assert!(msg.contains("q = 1.5, alpha = 0.5"), "{msg}"),
            other => panic!("{other:?}"),
        }
        let mut wide = small(ExperimentKind::Upcross);
        wide.band = Some(CrossingBand::new(-2.0, 2.0).unwrap());
        let v = run_upcross(&wide).unwrap();
        assert!(v.pass && v.empirical.point < 0.05);
    }

    #[test]
    fn random_times_pass_and_equal_times_are_trivial() {
        let c = small(ExperimentKind::RandomTimes);
        assert!(run_random_times(&c).unwrap().pass);
        let v = random_times_verdict(&c, 1.0, 0.2, &[0.0; 300], &[0.0; 300]).unwrap();
        assert_eq!(v.bound.value, 0.0);
        assert!(v.pass);
        let mut same = small(ExperimentKind::RandomTimes);
        same.q = Some(4.0);
        assert!(run_random_times(&same).unwrap().pass);
    }

    #[test]
    fn random_times_are_ordered_on_the_grid() {
        let grid = TimeGrid::uniform(2.0, 16).unwrap();
        for i in 0..500 {
            let (s, t) = random_time_pair(&grid, 3, i);
            assert!(s <= t && t <= 16);
        }
    }

    #[test]
    fn suites_pass_with_the_real_counter() {
        let suites = run_suites(&[small(ExperimentKind::DyadicSuite), small(ExperimentKind::Lemma3Suite)]);
        assert_eq!(suites.len(), 2);
        for s in &suites {
            assert!(s.passed(), "{s:?}");
            assert!(s.checks >= s.cases);
        }
    }

    /// Mutation fixture: a counter that triggers on the levels themselves.
    fn non_strict_counter(values: &[f64], band: CrossingBand) -> UpcrossingReport {
        let mut idx = Vec::new();
        let mut below = true;
        for (i, &y) in values.iter().enumerate() {
            if (below && y <= band.a()) || (!below && y >= band.b()) {
                idx.push(i);
                below = !below;
            }
        }
        UpcrossingReport {
            band,
            count: idx.len() / 2,
            crossing_times: idx.iter().map(|&i| i as f64).collect(),
            crossing_indices: idx,
        }
    }

    #[test]
    fn faulty_counter_is_detected() {
        let cfg = small(ExperimentKind::Lemma3Suite);
        let s = &run_suites_with(&[cfg], &non_strict_counter)[0];
        assert!(s.failure_count >= 1);
        assert_eq!(s.failures[0].seed, 7);
        assert!(s.failures[0].detail.contains("definition"), "{:?}", s.failures[0]);
    }

    #[test]
    fn empty_suite_selection_runs_defaults() {
        let suites = run_suites_with(&[], &|v, b| count_upcrossings(v, b));
        assert_eq!(suites.len(), 2);
        assert_eq!(suites[0].cases, DEFAULT_SUITE_CASES);
    }

    #[test]
    fn csv_summary_shape() {
        let c = small(ExperimentKind::SupTailFbm);
        let report = run_all(std::slice::from_ref(&c), c.seed).unwrap();
        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.count(), 4);
        assert_eq!(VerifyReport::from_json(&report.to_json()).unwrap(), report);
    }

    #[test]
    fn experiments_are_reproducible() {
        let c = small(ExperimentKind::Upcross);
        let a = serde_json::to_string(&run_upcross(&c).unwrap()).unwrap();
        let b = serde_json::to_string(&run_upcross(&c).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn pass_is_exactly_upper_limit_below_bound(lo in 0.0f64..1.0, w in 0.0f64..1.0, bound in 0.0f64..3.0) {
            let empirical = EmpiricalEstimate { point: lo, ci_low: lo, ci_high: lo + w, n: 100, confidence: 0.99 };
            let b = crate::bounds::fbm_marginal_tail(0.5, 1.0, 1.0).unwrap();
            let b = BoundReport { value: bound, clamped: Some(bound.min(1.0)), ..b };
            let v = Verdict::new(ExperimentKind::MarginalTailFbm, Some(1.0), 0, empirical, b);
            prop_assert_eq!(v.pass, lo + w <= bound);
            prop_assert_eq!(v.margin, bound - (lo + w));
            prop_assert_eq!(v.vacuous, bound >= 1.0);
        }
    }
}
