//! The flat sectioned configuration file.
//!
//! ```text
//! # comment
//! [process]
//! kind = fbm            # fbm | random_walk | series
//! h = 0.5
//!
//! [experiment]
//! kind = upcross        # omit to run the whole default suite
//! n_paths = 10000
//! seed = 42
//!
//! [band]
//! a = -0.1
//! b = 0.1
//!
//! [lambda_grid]
//! values = 1.5, 2, 2.5, 3
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use crate::constants::{feasible_q_alpha, HolderSpec, TailDecaySpec};
use crate::error::{Error, Result};
use crate::estimators::CrossingBand;
use crate::verify::{default_suite, ExperimentConfig, ExperimentKind, ProcessConfig, DEFAULT_SEED};

const SECTIONS: &[(&str, &[&str])] = &[
    ("process", &["kind", "h", "gamma", "k_max", "scale"]),
    (
        "spec",
        &[
            "p",
            "a_ph",
            "theta",
            "q",
            "alpha",
            "delta",
            "tail_alpha",
            "tail_c",
            "tail_d",
            "delta0",
            "terminal_lq",
            "time_gap_moment",
            "series_c_h",
            "series_d_h",
        ],
    ),
    (
        "experiment",
        &[
            "kind",
            "horizon",
            "n_steps",
            "n_paths",
            "seed",
            "confidence",
            "resamples",
            "suite_cases",
            "t_marginal",
        ],
    ),
    ("band", &["a", "b"]),
    ("lambda_grid", &["values"]),
];

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

/// A parsed configuration file. Every field is optional; absent values fall
/// back to the per-experiment defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<(String, String), Entry>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section: Option<&str> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::parse(line_no, format!("unterminated section header '{line}'")))?
                    .trim();
                let known = SECTIONS
                    .iter()
                    .find(|(s, _)| *s == name)
                    .ok_or_else(|| Error::parse(line_no, format!("unknown section [{name}]")))?;
                section = Some(known.0);
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(line_no, format!("expected 'key = value', got '{line}'")))?;
            let key = key.trim();
            let sec = section.ok_or_else(|| Error::parse(line_no, format!("key '{key}' outside any section")))?;
            let keys = SECTIONS.iter().find(|(s, _)| *s == sec).expect("known section").1;
            if !keys.contains(&key) {
                return Err(Error::parse(line_no, format!("unknown key '{key}' in [{sec}]")));
            }
            let value = value.trim();
            if value.is_empty() {
                return Err(Error::parse(line_no, format!("empty value for '{key}'")));
            }
            let prev = entries.insert(
                (sec.to_string(), key.to_string()),
                Entry {
                    value: value.to_string(),
                    line: line_no,
                },
            );
            if let Some(prev) = prev {
                return Err(Error::parse(line_no, format!("'{key}' in [{sec}] already set on line {}", prev.line)));
            }
        }
        let cfg = Self { entries };
        cfg.check_values()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Type-checks every value up front so that later lookups cannot fail on
    /// syntax, and errors point at the offending line.
    fn check_values(&self) -> Result<()> {
        for ((sec, key), e) in &self.entries {
            match (sec.as_str(), key.as_str()) {
                ("process", "kind") => {
                    if !["fbm", "random_walk", "series"].contains(&e.value.as_str()) {
                        return Err(Error::parse(e.line, format!("unknown process kind '{}'", e.value)));
                    }
                }
                ("experiment", "kind") => {
                    ExperimentKind::from_name(&e.value)
                        .ok_or_else(|| Error::parse(e.line, format!("unknown experiment kind '{}'", e.value)))?;
                }
                ("experiment", "seed") => {
                    parse_seed(&e.value).ok_or_else(|| Error::parse(e.line, format!("invalid seed '{}'", e.value)))?;
                }
                ("process", "k_max") | ("experiment", "n_steps" | "n_paths" | "resamples" | "suite_cases") => {
                    e.value
                        .parse::<usize>()
                        .map_err(|_| Error::parse(e.line, format!("'{key}' must be a nonnegative integer, got '{}'", e.value)))?;
                }
                ("lambda_grid", "values") => {
                    parse_list(&e.value).ok_or_else(|| Error::parse(e.line, format!("invalid number list '{}'", e.value)))?;
                }
                _ => {
                    parse_real(&e.value)
                        .ok_or_else(|| Error::parse(e.line, format!("'{key}' must be a finite number, got '{}'", e.value)))?;
                }
            }
        }
        Ok(())
    }

    fn raw(&self, sec: &str, key: &str) -> Option<&str> {
        self.entries.get(&(sec.to_string(), key.to_string())).map(|e| e.value.as_str())
    }

    fn real(&self, sec: &str, key: &str) -> Option<f64> {
        self.raw(sec, key).and_then(parse_real)
    }

    fn count(&self, sec: &str, key: &str) -> Option<usize> {
        self.raw(sec, key).and_then(|v| v.parse().ok())
    }

    pub fn has_section(&self, sec: &str) -> bool {
        self.entries.keys().any(|(s, _)| s == sec)
    }

    pub fn seed(&self) -> Option<u64> {
        self.raw("experiment", "seed").and_then(parse_seed)
    }

    /// CLI flag, then file, then [`DEFAULT_SEED`].
    pub fn resolve_seed(&self, cli: Option<u64>) -> u64 {
        cli.or(self.seed()).unwrap_or(DEFAULT_SEED)
    }

    pub fn experiment(&self) -> Option<ExperimentKind> {
        self.raw("experiment", "kind").and_then(ExperimentKind::from_name)
    }

    /// The configured process, if `[process]` names one.
    pub fn process(&self) -> Result<Option<ProcessConfig>> {
        let Some(kind) = self.raw("process", "kind") else {
            if self.has_section("process") {
                return Err(Error::Config("[process] needs 'kind'".into()));
            }
            return Ok(None);
        };
        let h = self.real("process", "h");
        Ok(Some(match kind {
            "fbm" => ProcessConfig::Fbm { h: h.unwrap_or(0.5) },
            "random_walk" => ProcessConfig::RandomWalk,
            _ => ProcessConfig::Series {
                gamma: self.real("process", "gamma").unwrap_or(2.0),
                h: h.unwrap_or(0.5),
                k_max: self.count("process", "k_max"),
                scale: self.real("process", "scale").unwrap_or(1.0),
            },
        }))
    }

    pub fn band(&self) -> Result<Option<CrossingBand>> {
        match (self.real("band", "a"), self.real("band", "b")) {
            (None, None) => Ok(None),
            (Some(a), Some(b)) => Ok(Some(CrossingBand::new(a, b)?)),
            _ => Err(Error::Config("[band] needs both 'a' and 'b'".into())),
        }
    }

    pub fn lambdas(&self) -> Option<Vec<f64>> {
        self.raw("lambda_grid", "values").and_then(parse_list)
    }

    pub fn spec_value(&self, key: &str) -> Option<f64> {
        self.real("spec", key)
    }

    pub fn series_constants(&self) -> Result<Option<(f64, f64)>> {
        match (self.spec_value("series_c_h"), self.spec_value("series_d_h")) {
            (None, None) => Ok(None),
            (Some(c), Some(d)) if c > 0.0 && d > 0.0 => Ok(Some((c, d))),
            (Some(_), Some(_)) => Err(Error::Config("series_c_h and series_d_h must be positive".into())),
            _ => Err(Error::Config("set both series_c_h and series_d_h, or neither".into())),
        }
    }

    /// Marginal decay of the bounds table: from `[spec]` when given, else the
    /// standard Gaussian choice `C = 1, D = 1, α = 2`.
    pub fn tail_spec(&self) -> Result<TailDecaySpec> {
        let keys = ["tail_alpha", "tail_c", "tail_d", "delta0"];
        if keys.iter().all(|k| self.spec_value(k).is_none()) {
            return Ok(TailDecaySpec::fbm_unit_horizon());
        }
        let d = TailDecaySpec::fbm_unit_horizon();
        TailDecaySpec::new(
            self.spec_value("tail_alpha").unwrap_or(d.alpha()),
            self.spec_value("tail_c").unwrap_or(d.c()),
            self.spec_value("tail_d").unwrap_or(d.d()),
            self.spec_value("delta0").unwrap_or(d.delta0()),
        )
    }

    /// `(p, h, A_{p,h})` for the configured process: `p` defaults to `2/h`,
    /// `A` to the process' own constant unless `a_ph` is given.
    pub fn holder_spec(&self) -> Result<HolderSpec> {
        let process = self.process()?.unwrap_or(ProcessConfig::Fbm { h: 0.5 });
        let probe = ExperimentConfig {
            process,
            p: self.spec_value("p"),
            ..ExperimentConfig::default_for(ExperimentKind::Upcross)
        };
        let spec = probe.holder_spec()?;
        match self.spec_value("a_ph") {
            Some(a) => spec.with_a_ph(a),
            None => Ok(spec),
        }
    }

    /// `(q, α)` for up-crossing bounds: configured, else a feasible pair.
    pub fn upcross_q_alpha(&self, spec: &HolderSpec, delta: f64) -> Option<(f64, f64)> {
        match (self.spec_value("q"), self.spec_value("alpha")) {
            (Some(q), Some(a)) => Some((q, a)),
            _ => feasible_q_alpha(delta, spec),
        }
    }

    /// The experiments a `verify` run executes under `seed`.
    ///
    /// With `[experiment] kind` the single experiment, built from its
    /// defaults and every override in the file. Without it the default
    /// suite, where only the run-size keys of `[experiment]` apply.
    pub fn experiments(&self, seed: u64) -> Result<Vec<ExperimentConfig>> {
        let configs = match self.experiment() {
            Some(kind) => vec![self.overlay(ExperimentConfig::default_for(kind).with_seed(seed))?],
            None => {
                for sec in ["process", "spec", "band", "lambda_grid"] {
                    if self.has_section(sec) {
                        return Err(Error::Config(format!(
                            "[{sec}] applies to a single experiment; set [experiment] kind"
                        )));
                    }
                }
                default_suite(seed)
                    .into_iter()
                    .map(|c| self.run_sizes(c))
                    .collect()
            }
        };
        for c in &configs {
            c.validate()?;
        }
        Ok(configs)
    }

    /// Applies the run-size keys of `[experiment]` to `c`.
    pub fn run_sizes(&self, mut c: ExperimentConfig) -> ExperimentConfig {
        let e = "experiment";
        if let Some(v) = self.real(e, "horizon") {
            c.horizon = v;
        }
        if let Some(v) = self.count(e, "n_steps") {
            c.n_steps = v;
        }
        if let Some(v) = self.count(e, "n_paths") {
            c.n_paths = v;
        }
        if let Some(v) = self.real(e, "confidence") {
            c.confidence = v;
        }
        if let Some(v) = self.count(e, "resamples") {
            c.resamples = v;
        }
        if let Some(v) = self.count(e, "suite_cases") {
            c.suite_cases = v;
        }
        if let Some(v) = self.real(e, "t_marginal") {
            c.t_marginal = Some(v);
        }
        c
    }

    /// `kind`'s defaults under every override in the file, not yet validated.
    pub fn experiment_config(&self, kind: ExperimentKind, seed: u64) -> Result<ExperimentConfig> {
        self.overlay(ExperimentConfig::default_for(kind).with_seed(seed))
    }

    fn overlay(&self, c: ExperimentConfig) -> Result<ExperimentConfig> {
        let mut c = self.run_sizes(c);
        if let Some(p) = self.process()? {
            c.process = p;
        }
        if let Some(b) = self.band()? {
            c.band = Some(b);
        }
        if let Some(l) = self.lambdas() {
            c.lambdas = l;
        }
        for (key, slot) in [
            ("p", &mut c.p),
            ("theta", &mut c.theta),
            ("q", &mut c.q),
            ("alpha", &mut c.alpha),
            ("delta", &mut c.delta),
        ] {
            if let Some(v) = self.spec_value(key) {
                *slot = Some(v);
            }
        }
        if let Some(sc) = self.series_constants()? {
            c.series_constants = Some(sc);
        }
        Ok(c)
    }
}

fn parse_real(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

fn parse_list(s: &str) -> Option<Vec<f64>> {
    s.split(',').map(parse_real).collect::<Option<Vec<_>>>().filter(|v| !v.is_empty())
}

/// Decimal or `0x`-prefixed hexadecimal.
pub fn parse_seed(s: &str) -> Option<u64> {
    let s = s.trim();
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => s.parse().ok(),
    }
}
