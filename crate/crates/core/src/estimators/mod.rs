//! Pathwise and ensemble statistics.

mod dyadic;
mod stats;
mod upcrossing;

pub use dyadic::{dyadic_decompose, DyadicInterval, MAX_DYADIC_LEVEL};
pub use stats::{
    bootstrap_mean, clopper_pearson, empirical_lq_norm, empirical_tail, mean, pairwise_sum,
    path_supremum, Bootstrap, EmpiricalEstimate,
};
pub use upcrossing::{
    count_upcrossings, count_upcrossings_on_grid, lemma3_pathwise_check, upcrossings_by_definition,
    CrossingBand, UpcrossingReport,
};

pub(crate) use dyadic::decompose_mesh;
pub(crate) use upcrossing::lemma3_holds;

use crate::error::{Error, Result};
use crate::processes::PathEnsemble;

/// `max_{s<t} mean|X_t - X_s|^p / |t-s|^{ph}` over all grid pairs: the
/// smallest `A_{p,h}` consistent with the ensemble on the grid.
pub fn empirical_increment_coefficient(ensemble: &PathEnsemble, p: f64, h: f64) -> Result<f64> {
    if !(p > 0.0 && h > 0.0 && p * h > 1.0) {
        return Err(Error::domain(format!("need p, h > 0 and ph > 1, got p = {p}, h = {h}")));
    }
    let t = ensemble.grid().points();
    let n = t.len();
    let m = ensemble.n_paths() as f64;
    let mut sums = vec![0.0; n * n];
    for path in ensemble.paths() {
        for i in 0..n {
            for j in i + 1..n {
                sums[i * n + j] += (path[j] - path[i]).abs().powf(p);
            }
        }
    }
    let mut best = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            best = best.max(sums[i * n + j] / m / (t[j] - t[i]).powf(p * h));
        }
    }
    Ok(best)
}

/// `U^δ` for every path of the ensemble.
pub fn upcross_delta_samples(ensemble: &PathEnsemble, band: CrossingBand, delta: f64) -> Vec<f64> {
    ensemble
        .paths()
        .map(|p| (count_upcrossings(p, band).count as f64).powf(delta))
        .collect()
}

/// Sample mean of `U^δ` with a bootstrap interval.
pub fn empirical_upcross_delta_moment(
    ensemble: &PathEnsemble,
    band: CrossingBand,
    delta: f64,
    confidence: f64,
    boot: &Bootstrap,
) -> Result<EmpiricalEstimate> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    bootstrap_mean(&upcross_delta_samples(ensemble, band, delta), confidence, boot)
}
