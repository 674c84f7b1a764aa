//! Acceptance criteria 1–10, one PASS/FAIL line each.
//!
//! Criteria listed in `EXPECTED_FAILURES` are run in full and reported as
//! FAIL; the target exits nonzero on any other failure, and also if an
//! expected failure starts passing, so the list cannot go stale.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use maxbounds::bounds::{fbm_sup_bound, fbm_traced_sup_bound, phi, sup_tail_envelope};
use maxbounds::constants::{a_p_fbm, gamma, zeta, HolderSpec};
use maxbounds::estimators::{count_upcrossings, CrossingBand};
use maxbounds::processes::{map_paths, FbmGenerator, TimeGrid};
use maxbounds::verify::{
    default_suite, pooled_increment_ratio, run_all, run_doob_lq, run_dyadic_suite, run_lemma3_suite,
    run_random_times, run_sup_tail_fbm, run_upcross, ExperimentConfig, ExperimentKind, ProcessConfig,
};

/// Criterion 7 asks for α = 0.6 with p = 4, h = 0.5, q = 1.5, which sits
/// exactly on the endpoint of the strict constraint α < (h-1/p)/(1/q-1/p).
const EXPECTED_FAILURES: &[(u32, &str)] = &[(7, "alpha = 0.6 is the excluded endpoint of the parameter chain")];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn cfg(kind: ExperimentKind) -> ExperimentConfig {
    ExperimentConfig::default_for(kind)
}

fn special_functions() -> Outcome {
    let sp = PI.sqrt();
    let mut cases: Vec<(String, f64, f64)> = Vec::new();
    let mut fact = 1.0;
    for n in 1..=7u32 {
        cases.push((format!("Gamma({n})"), gamma(n as f64).unwrap(), fact));
        fact *= n as f64;
    }
    // Γ(n+½) = (2n)! √π / (4^n n!)
    let mut half = sp;
    for n in 0..7u32 {
        cases.push((format!("Gamma({n}.5)"), gamma(n as f64 + 0.5).unwrap(), half));
        half *= n as f64 + 0.5;
    }
    let zeta_even = [
        PI.powi(2) / 6.0,
        PI.powi(4) / 90.0,
        PI.powi(6) / 945.0,
        PI.powi(8) / 9450.0,
        PI.powi(10) / 93555.0,
        691.0 * PI.powi(12) / 638_512_875.0,
    ];
    for (k, want) in zeta_even.into_iter().enumerate() {
        let s = 2.0 * (k + 1) as f64;
        cases.push((format!("zeta({s})"), zeta(s).unwrap(), want));
    }
    let worst = cases
        .iter()
        .map(|(name, got, want)| (rel(*got, *want), name))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap();
    outcome(
        cases.len() == 20 && worst.0 <= 1e-10,
        format!("{} closed forms, worst relative error {:.2e} at {}", cases.len(), worst.0, worst.1),
    )
}

fn dyadic() -> Outcome {
    let s = run_dyadic_suite(&ExperimentConfig {
        suite_cases: 10_000,
        ..cfg(ExperimentKind::DyadicSuite)
    });
    let first = s.failures.first().map(|f| format!("; first: case {} {}", f.case, f.detail));
    outcome(
        s.failure_count == 0,
        format!("{} decompositions, {} checks, {} failures{}", s.cases, s.checks, s.failure_count, first.unwrap_or_default()),
    )
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Covariance per entry against ¼(t^{2h}+s^{2h}-|t-s|^{2h}) at 4 SE; for
/// p ∈ {2, 4} the per-path average over all grid pairs of
/// |B_t-B_s|^p/|t-s|^{ph}, whose mean is A_p, at 3 SE.
fn fbm_law() -> Outcome {
    let (m, n) = (100_000, 8);
    let grid = TimeGrid::uniform(1.0, n).unwrap();
    let t = grid.points().to_vec();
    let mut worst_cov = 0.0f64;
    let mut worst_inc = 0.0f64;
    let mut details = Vec::new();
    for (idx, h) in [0.3, 0.5, 0.75].into_iter().enumerate() {
        let gen = FbmGenerator::new(h, grid.clone()).unwrap();
        let seed = 1000 + idx as u64;
        let paths: Vec<Vec<f64>> = map_paths(&gen, m, seed, |p| p.to_vec());
        for i in 1..=n {
            for j in i..=n {
                let prods: Vec<f64> = paths.iter().map(|p| p[i] * p[j]).collect();
                let (est, se) = mean_se(&prods);
                let want = 0.25 * (t[i].powf(2.0 * h) + t[j].powf(2.0 * h) - (t[j] - t[i]).abs().powf(2.0 * h));
                worst_cov = worst_cov.max((est - want).abs() / se);
            }
        }
        for p in [2.0, 4.0] {
            let ratios: Vec<f64> = paths.iter().map(|path| pooled_increment_ratio(path, &grid, p, h)).collect();
            let (est, se) = mean_se(&ratios);
            let z = (est - a_p_fbm(p).unwrap()).abs() / se;
            worst_inc = worst_inc.max(z);
            details.push(format!("h={h} p={p}: {:.1} SE", z));
        }
    }
    outcome(
        worst_cov <= 4.0 && worst_inc <= 3.0,
        format!(
            "worst covariance deviation {worst_cov:.2} SE (limit 4), increment moments {} (limit 3)",
            details.join(", ")
        ),
    )
}

fn doob() -> Outcome {
    let mut lines = Vec::new();
    let mut all = true;
    for seed in 1..=5 {
        let v = run_doob_lq(&ExperimentConfig {
            n_paths: 100_000,
            n_steps: 256,
            q: Some(2.0),
            ..cfg(ExperimentKind::DoobLq).with_seed(seed)
        })
        .unwrap();
        all &= v.pass;
        lines.push(format!("{:.4}<={:.4}", v.empirical.ci_high, v.bound.value));
    }
    outcome(all, format!("upper CI of ||max|M|||_2 vs 2||M_T||_2 over 5 seeds: {}", lines.join(", ")))
}

fn sup_tail() -> Outcome {
    let mut all = true;
    let mut lines = Vec::new();
    for h in [0.5, 0.75] {
        let vs = run_sup_tail_fbm(&ExperimentConfig {
            process: ProcessConfig::Fbm { h },
            n_paths: 100_000,
            n_steps: 1024,
            lambdas: vec![1.5, 2.0, 2.5, 3.0],
            ..cfg(ExperimentKind::SupTailFbm).with_seed(2024)
        })
        .unwrap();
        for v in vs {
            all &= v.pass;
            lines.push(format!(
                "h={h} l={}: {:.2e}<={:.3e}",
                v.lambda.unwrap(),
                v.empirical.ci_high,
                v.bound.value
            ));
        }
    }
    outcome(all, lines.join(", "))
}

fn upcrossing_counter() -> Outcome {
    let s = run_lemma3_suite(
        &ExperimentConfig {
            suite_cases: 10_000,
            ..cfg(ExperimentKind::Lemma3Suite)
        },
        &count_upcrossings,
    );
    outcome(
        s.failure_count == 0,
        format!("{} sequences, {} checks (oracle agreement + pathwise inequality), {} failures", s.cases, s.checks, s.failure_count),
    )
}

fn upcross_config(alpha: f64) -> ExperimentConfig {
    ExperimentConfig {
        process: ProcessConfig::Fbm { h: 0.5 },
        p: Some(4.0),
        delta: Some(0.25),
        band: Some(CrossingBand::new(-0.1, 0.1).unwrap()),
        q: Some(1.5),
        alpha: Some(alpha),
        n_paths: 10_000,
        n_steps: 1024,
        ..cfg(ExperimentKind::Upcross).with_seed(77)
    }
}

fn upcross_moment() -> Outcome {
    let result = run_upcross(&upcross_config(0.6));
    // informational: the nearest feasible α
    let info = match run_upcross(&upcross_config(0.5)) {
        Ok(v) => format!(
            "; at alpha=0.5: E[U^d] upper {:.4} <= {:.4e}: {}",
            v.empirical.ci_high,
            v.bound.value,
            if v.pass { "pass" } else { "fail" }
        ),
        Err(e) => format!("; at alpha=0.5: {e}"),
    };
    match result {
        Ok(v) => outcome(v.pass, format!("E[U^d] upper {:.4} vs bound {:.4e}{info}", v.empirical.ci_high, v.bound.value)),
        Err(e) => outcome(false, format!("alpha=0.6 rejected: {e}{info}")),
    }
}

fn random_times() -> Outcome {
    let v = run_random_times(&ExperimentConfig {
        n_paths: 100_000,
        p: Some(4.0),
        q: Some(1.0),
        alpha: Some(0.2),
        ..cfg(ExperimentKind::RandomTimes).with_seed(8)
    })
    .unwrap();
    outcome(
        v.pass,
        format!("E|X_tau-X_sigma| upper {:.4} vs bound {:.4e}", v.empirical.ci_high, v.bound.value),
    )
}

fn reproducibility() -> Outcome {
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_all(&default_suite(42), 42).unwrap().to_json())
    };
    let (a, b) = (run(1), run(8));
    outcome(a == b, format!("default suite, seed 42: {} bytes (1 thread) vs {} bytes (8 threads), identical = {}", a.len(), b.len(), a == b))
}

/// The general envelope with the Gaussian marginal φ against the traced
/// closed form, evaluated independently.
fn consistency() -> Outcome {
    let mut worst = 0.0f64;
    for (h, p) in [(0.5, 4.0), (0.75, 2.0 / 0.75), (0.3, 5.0)] {
        let spec = HolderSpec::fbm(p, h).unwrap();
        let theta = spec.default_theta();
        for k in 0..20 {
            let lambda = 0.5 + 0.5 * k as f64;
            let env = sup_tail_envelope(&spec, theta, 1.0, lambda, 2.0, phi(lambda)).unwrap();
            let traced = fbm_traced_sup_bound(h, p, theta, lambda).unwrap().value;
            worst = worst.max(rel(env, traced));
        }
    }
    // the horizon-T bound at T = 1 stays above the traced form for λ >= 1
    let dominated = (2..=20).all(|k| {
        let l = 0.5 * k as f64;
        fbm_sup_bound(0.5, 1.0, l).unwrap().value >= fbm_traced_sup_bound(0.5, 4.0, 4.0 / 3.0, l).unwrap().value
    });
    outcome(
        worst <= 1e-9 && dominated,
        format!("20-point lambda grid x 3 (h, p): worst relative gap {worst:.2e}; horizon form dominates = {dominated}"),
    )
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "special functions", Duration::from_secs(1), special_functions),
        (2, "dyadic construction", Duration::from_secs(5), dyadic),
        (3, "fBm law", Duration::from_secs(60), fbm_law),
        (4, "Doob L^2 (martingale case)", Duration::from_secs(60), doob),
        (5, "supremum tail", Duration::from_secs(600), sup_tail),
        (6, "up-crossing counter", Duration::from_secs(30), upcrossing_counter),
        (7, "up-crossing moment", Duration::from_secs(300), upcross_moment),
        (8, "random-time moments", Duration::from_secs(120), random_times),
        (9, "reproducibility", Duration::from_secs(600), reproducibility),
        (10, "consistency fixture", Duration::from_secs(60), consistency),
    ];
    let mut unexpected = Vec::new();
    for (n, name, limit, f) in criteria {
        let start = Instant::now();
        let o = f();
        let elapsed = start.elapsed();
        let in_time = elapsed <= limit;
        let pass = o.pass && in_time;
        let timing = format!("{:.2}s of {}s", elapsed.as_secs_f64(), limit.as_secs());
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {n:>2} {verdict} {name}: {}{} [{timing}]",
            o.detail,
            if in_time { "" } else { " (over time limit)" }
        );
        let expected = EXPECTED_FAILURES.iter().find(|(k, _)| *k == n);
        match (pass, expected) {
            (false, Some((_, why))) => println!("             expected failure: {why}"),
            (false, None) => unexpected.push(format!("criterion {n} failed")),
            (true, Some(_)) => unexpected.push(format!("criterion {n} passed but is listed as an expected failure")),
            (true, None) => {}
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        for u in &unexpected {
            eprintln!("{u}");
        }
        ExitCode::FAILURE
    }
}
