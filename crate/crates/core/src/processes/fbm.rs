use std::collections::BTreeMap;

use rand_distr::{Distribution, StandardNormal};

use super::{PathGenerator, TimeGrid};
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

pub(super) const GENERATOR_ID: &str = "fbm";

const JITTER_SCALE: f64 = 1e-12;
const JITTER_RETRIES: usize = 3;

/// `Cov(B_t, B_s) = (t^{2h} + s^{2h} - |t-s|^{2h}) / 4`.
///
/// This is the normalisation under which `B_t - B_s ~ N(0, |t-s|^{2h}/2)`,
/// i.e. half the variance of the textbook standard fBm.
pub fn fbm_covariance(h: f64, t: f64, s: f64) -> f64 {
    let e = 2.0 * h;
    0.25 * (t.abs().powf(e) + s.abs().powf(e) - (t - s).abs().powf(e))
}

/// Exact fBm sampler: the covariance of `(B_{t_1}, …, B_{t_N})` is factored
/// once by dense Cholesky and every path is `L z` with `z` standard normal.
#[derive(Debug, Clone)]
pub struct FbmGenerator {
    h: f64,
    grid: TimeGrid,
    /// Lower-triangular factor, row-major `N × N` (upper part zero).
    factor: Vec<f64>,
}

impl FbmGenerator {
    pub fn new(h: f64, grid: TimeGrid) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::domain(format!("Hurst index must lie in (0, 1), got {h}")));
        }
        let times = &grid.points()[1..];
        let n = times.len();
        let mut cov = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let c = fbm_covariance(h, times[i], times[j]);
                cov[i * n + j] = c;
                cov[j * n + i] = c;
            }
        }
        let factor = cholesky_with_jitter(&cov, n)?;
        Ok(Self { h, grid, factor })
    }

    pub fn hurst(&self) -> f64 {
        self.h
    }

    pub fn factor(&self) -> &[f64] {
        &self.factor
    }
}

impl PathGenerator for FbmGenerator {
    fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn generator_id(&self) -> &'static str {
        GENERATOR_ID
    }

    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([("h".to_string(), self.h)])
    }

    fn fill(&self, seed: u64, first: u64, out: &mut [f64]) {
        let width = self.grid.len();
        let n = width - 1;
        let rows = out.len() / width;
        let mut z = vec![0.0; rows * n];
        for (r, row) in z.chunks_exact_mut(n).enumerate() {
            let mut rng = rng::stream(seed, Purpose::Paths, first + r as u64);
            for v in row.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
        }
        for row in out.chunks_exact_mut(width) {
            row[0] = 0.0;
        }
        // out[:, 1..] = Z · Lᵀ
        unsafe {
            matrixmultiply::dgemm(
                rows,
                n,
                n,
                1.0,
                z.as_ptr(),
                n as isize,
                1,
                self.factor.as_ptr(),
                1,
                n as isize,
                0.0,
                out.as_mut_ptr().add(1),
                width as isize,
                1,
            );
        }
    }
}

/// Outcome of one factorisation attempt: the factor, or the offending pivot.
fn cholesky(a: &[f64], n: usize, jitter: f64) -> std::result::Result<Vec<f64>, (usize, f64)> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let row_j = j * n;
        let d = a[row_j + j] + jitter - dot(&l[row_j..row_j + j], &l[row_j..row_j + j]);
        if !(d > 0.0) || !d.is_finite() {
            return Err((j, d));
        }
        let pivot = d.sqrt();
        l[row_j + j] = pivot;
        for i in j + 1..n {
            let row_i = i * n;
            let s = a[row_i + j] - dot(&l[row_i..row_i + j], &l[row_j..row_j + j]);
            l[row_i + j] = s / pivot;
        }
    }
    Ok(l)
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (xc, xr) = x.split_at(x.len() / 4 * 4);
    let (yc, yr) = y.split_at(xc.len());
    for (a, b) in xc.chunks_exact(4).zip(yc.chunks_exact(4)) {
        for k in 0..4 {
            acc[k] += a[k] * b[k];
        }
    }
    let tail: f64 = xr.iter().zip(yr).map(|(a, b)| a * b).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn cholesky_with_jitter(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let max_diag = (0..n).map(|i| a[i * n + i]).fold(0.0, f64::max);
    let mut jitter = 0.0;
    let mut last = (0, 0.0);
    for attempt in 0..=JITTER_RETRIES {
        match cholesky(a, n, jitter) {
            Ok(l) => return Ok(l),
            Err(fail) => last = fail,
        }
        jitter = if attempt == 0 {
            JITTER_SCALE * max_diag
        } else {
            jitter * 10.0
        };
    }
    Err(Error::Generation(format!(
        "fBm covariance is not numerically positive definite after {JITTER_RETRIES} jitter \
         retries: pivot {} became {:.3e} (minimum eigenvalue estimate)",
        last.0, last.1
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::{generate, simulate_fbm};

    #[test]
    fn brownian_covariance_on_two_steps() {
        // h = 1/2: Var(B_1) = 1/2, Cov(B_{1/2}, B_1) = 1/4
        assert!((fbm_covariance(0.5, 1.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((fbm_covariance(0.5, 0.5, 1.0) - 0.25).abs() < 1e-15);
        let gen = FbmGenerator::new(0.5, TimeGrid::uniform(1.0, 2).unwrap()).unwrap();
        let l = gen.factor();
        // L Lᵀ reproduces the covariance
        let c00 = l[0] * l[0];
        let c10 = l[2] * l[0];
        let c11 = l[2] * l[2] + l[3] * l[3];
        assert!((c00 - 0.25).abs() < 1e-15);
        assert!((c10 - 0.25).abs() < 1e-15);
        assert!((c11 - 0.5).abs() < 1e-15);
        assert_eq!(l[1], 0.0);
    }

    #[test]
    fn paths_start_at_zero() {
        let grid = TimeGrid::uniform(1.0, 8).unwrap();
        let ens = simulate_fbm(0.3, &grid, 100, 1).unwrap();
        assert!(ens.paths().all(|p| p[0] == 0.0));
    }

    #[test]
    fn rejects_bad_hurst() {
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        assert!(FbmGenerator::new(0.0, grid.clone()).is_err());
        assert!(FbmGenerator::new(1.0, grid).is_err());
    }

    #[test]
    fn singular_covariance_is_reported() {
        let a = [1.0, 2.0, 2.0, 1.0];
        match cholesky_with_jitter(&a, 2) {
            Err(Error::Generation(msg)) => assert!(msg.contains("eigenvalue")),
            other => panic!("{other:?}"),
        }
    }

    /// Monte Carlo against the closed-form variance: Var(B_1) = 1/2.
    #[test]
    fn terminal_variance_within_three_standard_errors() {
        let grid = TimeGrid::uniform(1.0, 2).unwrap();
        let gen = FbmGenerator::new(0.5, grid).unwrap();
        let m = 100_000;
        let ens = generate(&gen, m, 2024);
        let sq: Vec<f64> = ens.paths().map(|p| p[2] * p[2]).collect();
        let mean = sq.iter().sum::<f64>() / m as f64;
        let var = sq.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
        let se = (var / m as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * se, "mean {mean}, se {se}");
    }

    /// `E|B_t - B_s|^2 = A_2 |t-s|^{2h}` with `A_2 = 1/2`.
    #[test]
    fn second_moment_of_increments() {
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let h = 0.7;
        let m = 100_000;
        let ens = simulate_fbm(h, &grid, m, 77).unwrap();
        let t = grid.points();
        for (i, j) in [(0, 4), (1, 3), (2, 3)] {
            let ratio: Vec<f64> = ens
                .paths()
                .map(|p| (p[j] - p[i]).powi(2) / (t[j] - t[i]).powf(2.0 * h))
                .collect();
            let mean = ratio.iter().sum::<f64>() / m as f64;
            let var = ratio.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
            let se = (var / m as f64).sqrt();
            assert!((mean - 0.5).abs() < 4.0 * se, "({i},{j}): {mean} ± {se}");
        }
    }
}
