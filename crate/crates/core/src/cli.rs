//! The `maxbounds` command line.
//!
//! Exit codes: 0 success with every verdict passing, 1 a failed verdict or
//! property-suite failure, 2 a configuration, domain or usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bounds::{
    fbm_marginal_tail, fbm_sup_bound, fbm_traced_sup_bound, lemma1_sup_moment_bound, marginal_moment_bound,
    prop1_lq_bound, series_marginal_tail, series_sup_tail, series_tail_bounds, theorem_tail_bound,
    upcross_moment_bound, upcross_random_time_bound, BoundReport, UNSPECIFIED_CONSTANT_NOTE,
};
use crate::config::Config;
use crate::constants::a_p_fbm;
use crate::error::{Error, Result};
use crate::estimators::{bootstrap_mean, count_upcrossings_on_grid, Bootstrap, CrossingBand, UpcrossingReport};
use crate::processes::{generate, PathEnsemble};
use crate::verify::{run_all, ExperimentConfig, ExperimentKind, ProcessConfig, Verdict, VerifyReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.csv";

/// `MAXBOUNDS_THREADS` supplies `--threads` when the flag is absent.
pub const THREADS_ENV: &str = "MAXBOUNDS_THREADS";

const DEFAULT_LAMBDAS: [f64; 4] = [1.5, 2.0, 2.5, 3.0];

#[derive(Debug, Parser)]
#[command(name = "maxbounds", version, about = "Maximal-inequality bounds and their Monte-Carlo verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Bounds,
    Simulate,
    Verify,
    Upcross,
    Report,
}

#[derive(Debug, Subcommand)]
enum Command {
    #[command(about = "Tabulate every bound for the configured process")]
    Bounds(Common),
    #[command(about = "Simulate an ensemble and write it to the output directory")]
    Simulate(Common),
    #[command(about = "Run the configured experiment, or the default suite, and write a report")]
    Verify(Common),
    #[command(about = "Count up-crossings per path and compare E[U^delta] with its bound")]
    Upcross {
        #[command(flatten)]
        common: Common,
        /// Ensemble CSV or JSON to read instead of simulating.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    #[command(about = "Summarise a report written by `verify`")]
    Report(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct Common {
    /// Configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Seed; overrides the configuration file.
    #[arg(long, value_name = "N", value_parser = parse_seed_arg)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, value_name = "N", env = THREADS_ENV, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

fn parse_seed_arg(s: &str) -> std::result::Result<u64, String> {
    crate::config::parse_seed(s).ok_or_else(|| format!("invalid seed '{s}'"))
}

/// A parsed command line.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub command: CommandKind,
    pub config_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed_override: Option<u64>,
    pub threads: Option<usize>,
    pub format: Format,
    pub input: Option<PathBuf>,
}

impl CliConfig {
    pub fn parse_from<I, T>(argv: I) -> std::result::Result<Self, clap::Error>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        let cli = Cli::try_parse_from(argv)?;
        let (command, common, input) = match cli.command {
            Command::Bounds(c) => (CommandKind::Bounds, c, None),
            Command::Simulate(c) => (CommandKind::Simulate, c, None),
            Command::Verify(c) => (CommandKind::Verify, c, None),
            Command::Upcross { common, input } => (CommandKind::Upcross, common, input),
            Command::Report(c) => (CommandKind::Report, c, None),
        };
        Ok(Self {
            command,
            config_path: common.config,
            output_dir: common.out,
            seed_override: common.seed,
            threads: common.threads.map(usize::from),
            format: common.format,
            input,
        })
    }

    fn config(&self) -> Result<Config> {
        match &self.config_path {
            Some(p) => Config::load(p),
            None => Ok(Config::default()),
        }
    }
}

/// Runs the command line and returns the exit code.
pub fn main_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match CliConfig::parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code_for(&e)
        }
    }
}

/// Invariant violations are failed checks; everything else is a usage or
/// configuration problem.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Invariant(_) => EXIT_FAILED,
        _ => EXIT_USAGE,
    }
}

/// Runs a parsed command inside a pool of the requested size.
pub fn execute(cli: &CliConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cli.threads {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| Error::Config(format!("cannot start worker threads: {e}")))?
    };
    // the output sinks are not Send; compute inside the pool, write outside
    let outcome = pool.install(|| run_command(cli))?;
    out.write_all(outcome.stdout.as_bytes()).map_err(io_err)?;
    err.write_all(outcome.stderr.as_bytes()).map_err(io_err)?;
    Ok(outcome.code)
}

struct Outcome {
    stdout: String,
    stderr: String,
    code: i32,
}

fn io_err(e: std::io::Error) -> Error {
    Error::Config(format!("i/o error: {e}"))
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn run_command(cli: &CliConfig) -> Result<Outcome> {
    match cli.command {
        CommandKind::Bounds => cmd_bounds(cli),
        CommandKind::Simulate => cmd_simulate(cli),
        CommandKind::Verify => cmd_verify(cli),
        CommandKind::Upcross => cmd_upcross(cli),
        CommandKind::Report => cmd_report(cli),
    }
}

fn cmd_verify(cli: &CliConfig) -> Result<Outcome> {
    let cfg = cli.config()?;
    let seed = cfg.resolve_seed(cli.seed_override);
    let experiments = cfg.experiments(seed)?;
    let report = run_all(&experiments, seed)?;
    write_file(&cli.output_dir, REPORT_FILE, &report.to_json())?;
    write_file(&cli.output_dir, SUMMARY_FILE, &report.to_csv())?;
    Ok(summarise(&report, cli.format))
}

fn cmd_report(cli: &CliConfig) -> Result<Outcome> {
    let path = cli.output_dir.join(REPORT_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(summarise(&VerifyReport::from_json(&text)?, cli.format))
}

fn summarise(report: &VerifyReport, format: Format) -> Outcome {
    let stdout = match format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json(),
    };
    let mut stderr = String::new();
    for s in &report.suites {
        stderr.push_str(&format!(
            "suite {}: {} cases, {} checks, {} failures (seed {})\n",
            s.suite, s.cases, s.checks, s.failure_count, s.seed
        ));
        for f in &s.failures {
            stderr.push_str(&format!("  case {} (seed {}): {}\n", f.case, f.seed, f.detail));
        }
    }
    let failed = report.failed_verdicts();
    stderr.push_str(&format!(
        "seed {}: {} verdicts, {} failed, {} vacuous; {} suite failures\n",
        report.seed,
        report.verdicts.len(),
        failed,
        report.verdicts.iter().filter(|v| v.vacuous).count(),
        report.suite_failures()
    ));
    Outcome {
        stdout,
        stderr,
        code: if report.all_passed() { EXIT_OK } else { EXIT_FAILED },
    }
}

/// The single run behind `simulate` and `upcross`: the named experiment
/// when the file has one, else `kind`'s defaults under the file's overrides.
fn single_run(cfg: &Config, seed: u64, kind: ExperimentKind) -> Result<ExperimentConfig> {
    cfg.experiment_config(cfg.experiment().unwrap_or(kind), seed)
}

fn cmd_simulate(cli: &CliConfig) -> Result<Outcome> {
    let cfg = cli.config()?;
    let seed = cfg.resolve_seed(cli.seed_override);
    let ex = single_run(&cfg, seed, ExperimentKind::SupTailFbm)?;
    let ens = simulate(&ex)?;
    let (name, text) = match cli.format {
        Format::Csv => ("ensemble.csv", ens.to_csv()),
        Format::Json => ("ensemble.json", ens.to_json()),
    };
    write_file(&cli.output_dir, name, &text)?;
    Ok(Outcome {
        stdout: String::new(),
        stderr: format!(
            "wrote {} paths of {} ({} steps, seed {seed}) to {}\n",
            ens.n_paths(),
            ens.generator_id(),
            ens.grid().steps(),
            cli.output_dir.join(name).display()
        ),
        code: EXIT_OK,
    })
}

fn simulate(ex: &ExperimentConfig) -> Result<PathEnsemble> {
    if ex.n_paths == 0 || ex.n_steps == 0 {
        return Err(Error::Config("n_paths and n_steps must be positive".into()));
    }
    let grid = crate::processes::TimeGrid::uniform(ex.horizon, ex.n_steps)?;
    let generator = ex.process.generator(&grid)?;
    Ok(generate(generator.as_ref(), ex.n_paths, ex.seed))
}

fn read_ensemble(path: &Path) -> Result<PathEnsemble> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        PathEnsemble::from_json(&text)
    } else {
        PathEnsemble::from_csv(&text)
    }
}

fn cmd_upcross(cli: &CliConfig) -> Result<Outcome> {
    let cfg = cli.config()?;
    let seed = cfg.resolve_seed(cli.seed_override);
    let ex = single_run(&cfg, seed, ExperimentKind::Upcross)?;
    let band = ex
        .band
        .ok_or_else(|| Error::Config("up-crossings need a [band]".into()))?;
    let ens = match &cli.input {
        Some(p) => read_ensemble(p)?,
        None => simulate(&ex)?,
    };
    let reports: Vec<UpcrossingReport> = ens
        .paths()
        .map(|p| count_upcrossings_on_grid(p, ens.grid(), band))
        .collect::<Result<_>>()?;
    let (name, text) = match cli.format {
        Format::Csv => {
            let mut s = String::from("path,count\n");
            for (i, r) in reports.iter().enumerate() {
                s.push_str(&format!("{i},{}\n", r.count));
            }
            ("upcrossings.csv", s)
        }
        Format::Json => (
            "upcrossings.json",
            serde_json::to_string_pretty(&reports).expect("finite crossing times") + "\n",
        ),
    };
    write_file(&cli.output_dir, name, &text)?;

    let counts: Vec<f64> = reports.iter().map(|r| r.count as f64).collect();
    let mut stderr = format!(
        "{} paths, band ({}, {}): mean U = {}\n",
        counts.len(),
        band.a(),
        band.b(),
        crate::estimators::mean(&counts)
    );
    let mut code = EXIT_OK;
    if let Some(delta) = ex.delta {
        let samples: Vec<f64> = counts.iter().map(|u| u.powf(delta)).collect();
        let boot = Bootstrap {
            resamples: ex.resamples,
            seed,
        };
        let empirical = bootstrap_mean(&samples, ex.confidence, &boot)?;
        let spec = ex.holder_spec()?;
        let theta = ex.theta.unwrap_or_else(|| spec.default_theta());
        // configured (q, α), else a feasible pair for this (p, h, δ)
        let (q, alpha) = cfg
            .upcross_q_alpha(&spec, delta)
            .ok_or_else(|| Error::Config(format!("no feasible (q, alpha) for delta = {delta}")))?;
        crate::constants::check_upcross_chain(delta, &spec, q, alpha)?;
        let bound = upcross_moment_bound(&spec, theta, delta, band, ens.grid().horizon(), q, alpha)?;
        let v = Verdict::new(ExperimentKind::Upcross, None, seed, empirical, bound);
        stderr.push_str(&format!(
            "E[U^{delta}] = {} (upper {}) vs bound {}: {}\n",
            v.empirical.point,
            v.empirical.ci_high,
            v.bound.value,
            if v.pass { "pass" } else { "FAIL" }
        ));
        if !v.pass {
            code = EXIT_FAILED;
        }
    }
    Ok(Outcome {
        stdout: text,
        stderr,
        code,
    })
}

/// Every bound of the library evaluated for the configured process.
/// Bounds whose preconditions fail for this configuration are skipped with
/// the reason; an invalid process or spec is an error.
pub fn bounds_table(cfg: &Config) -> Result<(Vec<BoundReport>, Vec<String>)> {
    let process = cfg.process()?.unwrap_or(ProcessConfig::Fbm { h: 0.5 });
    let spec = cfg.holder_spec()?;
    let theta = cfg.spec_value("theta").unwrap_or_else(|| spec.default_theta());
    let t = cfg
        .run_sizes(ExperimentConfig::default_for(ExperimentKind::SupTailFbm))
        .horizon;
    let tail = cfg.tail_spec()?;
    let lambdas = cfg.lambdas().unwrap_or_else(|| DEFAULT_LAMBDAS.to_vec());
    let q_doob = cfg.spec_value("q").unwrap_or(2.0f64.min(spec.p()));

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut push = |name: &str, r: Result<BoundReport>| match r {
        Ok(r) => rows.push(r),
        Err(e) => skipped.push(format!("{name}: {e}")),
    };

    push("lemma1_sup_moment", lemma1_sup_moment_bound(&spec, theta, 0.0, t));
    let terminal = cfg.spec_value("terminal_lq").map(Ok).or_else(|| match process {
        // B_T ~ N(0, T^{2h}/2): ‖B_T‖_q = T^h A_q^{1/q}
        ProcessConfig::Fbm { h } => Some(a_p_fbm(q_doob).map(|a| t.powf(h) * a.powf(1.0 / q_doob))),
        ProcessConfig::RandomWalk if q_doob == 2.0 => Some(Ok(t.sqrt())),
        _ => None,
    });
    match terminal {
        Some(Ok(lq)) => push("prop1_lq", prop1_lq_bound(&spec, theta, q_doob, 0.0, t, lq)),
        Some(Err(e)) => push("prop1_lq", Err(e)),
        None => push("prop1_lq", Err(Error::Config("set [spec] terminal_lq".into()))),
    }
    push("marginal_moment", marginal_moment_bound(&tail, q_doob));
    for &lambda in &lambdas {
        push("theorem_tail", theorem_tail_bound(&spec, &tail, theta, t, lambda));
        match &process {
            ProcessConfig::Fbm { h } => {
                push("fbm_marginal_tail", fbm_marginal_tail(*h, t, lambda));
                push("fbm_sup", fbm_sup_bound(*h, t, lambda));
                push("fbm_traced_sup", fbm_traced_sup_bound(*h, spec.p(), theta, lambda));
            }
            ProcessConfig::Series { .. } => {
                let series = process.series_spec()?.expect("series process");
                push("series_tail", series_marginal_tail(&series, lambda));
                let sup = match cfg.series_constants()? {
                    Some((c, d)) => series_tail_bounds(&series, lambda, c, d).map(|r| r.note(UNSPECIFIED_CONSTANT_NOTE)),
                    None => series_sup_tail(&series, t, lambda),
                };
                push("series_tail", sup);
            }
            ProcessConfig::RandomWalk => {}
        }
    }
    let (q_rt, alpha_rt) = match (cfg.spec_value("q"), cfg.spec_value("alpha")) {
        (Some(q), Some(a)) => (q, a),
        _ => (1.0, 0.2),
    };
    // uniform random times: E((τ-σ)/T)^α = E(1-U₁)^α E U₂^α = (1+α)^{-2}
    let gap = cfg
        .spec_value("time_gap_moment")
        .unwrap_or(1.0 / ((1.0 + alpha_rt) * (1.0 + alpha_rt)));
    push(
        "upcross_random_time",
        upcross_random_time_bound(&spec, theta, q_rt, alpha_rt, t, gap),
    );
    let band = cfg.band()?.unwrap_or(CrossingBand::new(-0.1, 0.1)?);
    let delta = cfg.spec_value("delta").unwrap_or(0.25f64.min(0.5 * (1.0 - 1.0 / spec.ph())));
    match cfg.upcross_q_alpha(&spec, delta) {
        Some((q, alpha)) => push(
            "upcross_moment",
            upcross_moment_bound(&spec, theta, delta, band, t, q, alpha),
        ),
        None => push(
            "upcross_moment",
            Err(Error::Config(format!("no feasible (q, alpha) for delta = {delta}"))),
        ),
    }
    Ok((rows, skipped))
}

fn cmd_bounds(cli: &CliConfig) -> Result<Outcome> {
    let cfg = cli.config()?;
    let (rows, skipped) = bounds_table(&cfg)?;
    let (name, text) = match cli.format {
        Format::Csv => {
            let mut s = String::new();
            for r in &rows {
                s.push_str(&r.to_csv_row());
                s.push('\n');
            }
            ("bounds.csv", s)
        }
        Format::Json => (
            "bounds.json",
            serde_json::to_string_pretty(&rows).expect("bound values are finite") + "\n",
        ),
    };
    write_file(&cli.output_dir, name, &text)?;
    let stderr = skipped.iter().map(|s| format!("skipped {s}\n")).collect();
    Ok(Outcome {
        stdout: text,
        stderr,
        code: EXIT_OK,
    })
}
