//! Path simulation on finite time grids.
//!
//! A [`PathGenerator`] produces path `i` from the random stream keyed by
//! `(seed, i)` alone, so ensembles are bit-identical under any thread count.
//! Paths are produced in fixed-size chunks; [`map_paths`] reduces each path to
//! a statistic without materialising the whole ensemble.

mod fbm;
mod io;
mod series;
mod walk;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use fbm::{fbm_covariance, FbmGenerator};
pub use series::{
    cosine_holder_constant, required_k_max, series_sigma_sq, truncation_tail_bound,
    RademacherSeriesGenerator, SeriesFamily, SeriesSpec, TRUNCATION_TOLERANCE,
};
pub use io::EXTERNAL_GENERATOR;
pub use walk::RandomWalkGenerator;

/// The finite sampling set `0 = t_0 < t_1 < … < t_N = T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct TimeGrid {
    horizon: f64,
    points: Vec<f64>,
}

#[derive(Deserialize)]
struct RawGrid {
    horizon: f64,
    points: Vec<f64>,
}

impl TryFrom<RawGrid> for TimeGrid {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        let grid = TimeGrid::from_points(raw.points)?;
        if grid.horizon != raw.horizon {
            return Err(Error::Precondition(format!(
                "grid horizon {} does not match last point {}",
                raw.horizon, grid.horizon
            )));
        }
        Ok(grid)
    }
}

impl TimeGrid {
    /// `n` equal steps on `[0, horizon]`.
    pub fn uniform(horizon: f64, n: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Precondition(format!("horizon must be positive, got {horizon}")));
        }
        if n == 0 {
            return Err(Error::Precondition("a grid needs at least one step".into()));
        }
        let mut points: Vec<f64> = (0..=n).map(|j| horizon * j as f64 / n as f64).collect();
        points[n] = horizon;
        Self::from_points(points)
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Precondition("a grid needs at least two points".into()));
        }
        if points[0] != 0.0 {
            return Err(Error::Precondition(format!("grid must start at 0, got {}", points[0])));
        }
        for w in points.windows(2) {
            if !(w[1].is_finite() && w[1] > w[0]) {
                return Err(Error::Precondition(format!(
                    "grid points must be finite and strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        let horizon = *points.last().unwrap();
        Ok(Self { horizon, points })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Number of steps `N`; the grid has `N + 1` points.
    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the grid point closest to `t`.
    pub fn nearest_index(&self, t: f64) -> usize {
        match self.points.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i >= self.points.len() => self.points.len() - 1,
            Err(i) => {
                if t - self.points[i - 1] <= self.points[i] - t {
                    i - 1
                } else {
                    i
                }
            }
        }
    }
}

/// Something that can synthesise paths on a grid from counter-based streams.
pub trait PathGenerator: Sync {
    fn grid(&self) -> &TimeGrid;

    fn generator_id(&self) -> &'static str;

    /// Numeric generation parameters, enough to rebuild the generator with
    /// [`generator_from_params`].
    fn params(&self) -> BTreeMap<String, f64>;

    /// Writes paths `first, first + 1, …` row-major into `out`, whose length is
    /// a multiple of `grid().len()`.
    fn fill(&self, seed: u64, first: u64, out: &mut [f64]);
}

/// Paths per work unit. Fixed, so the work split never depends on the pool.
pub const CHUNK_PATHS: usize = 64;

/// Applies `f` to every path and returns the results in path order.
pub fn map_paths<G, T, F>(generator: &G, n_paths: usize, seed: u64, f: F) -> Vec<T>
where
    G: PathGenerator + ?Sized,
    T: Send,
    F: Fn(&[f64]) -> T + Sync,
{
    map_paths_indexed(generator, n_paths, seed, |_, p| f(p))
}

/// As [`map_paths`], also passing the path index to `f`.
pub fn map_paths_indexed<G, T, F>(generator: &G, n_paths: usize, seed: u64, f: F) -> Vec<T>
where
    G: PathGenerator + ?Sized,
    T: Send,
    F: Fn(usize, &[f64]) -> T + Sync,
{
    let width = generator.grid().len();
    let chunks = n_paths.div_ceil(CHUNK_PATHS);
    let per_chunk: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let first = c * CHUNK_PATHS;
            let rows = CHUNK_PATHS.min(n_paths - first);
            let mut buf = vec![0.0; rows * width];
            generator.fill(seed, first as u64, &mut buf);
            buf.chunks_exact(width)
                .enumerate()
                .map(|(r, p)| f(first + r, p))
                .collect()
        })
        .collect();
    per_chunk.into_iter().flatten().collect()
}

/// M sampled paths on a shared grid together with their provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Envelope", into = "Envelope")]
pub struct PathEnsemble {
    grid: TimeGrid,
    values: Vec<f64>,
    n_paths: usize,
    seed: u64,
    generator_id: String,
    params: BTreeMap<String, f64>,
}

/// JSON form of an ensemble.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Envelope {
    generator_id: String,
    seed: u64,
    params: BTreeMap<String, f64>,
    grid: TimeGrid,
    values: Vec<Vec<f64>>,
}

impl TryFrom<Envelope> for PathEnsemble {
    type Error = Error;

    fn try_from(env: Envelope) -> Result<Self> {
        let width = env.grid.len();
        let n_paths = env.values.len();
        let mut values = Vec::with_capacity(n_paths * width);
        for (i, row) in env.values.into_iter().enumerate() {
            if row.len() != width {
                return Err(Error::Precondition(format!(
                    "path {i} has {} values, grid has {width} points",
                    row.len()
                )));
            }
            values.extend(row);
        }
        PathEnsemble::from_parts(env.grid, values, env.seed, env.generator_id, env.params)
    }
}

impl From<PathEnsemble> for Envelope {
    fn from(e: PathEnsemble) -> Self {
        let width = e.grid.len();
        Envelope {
            values: e.values.chunks_exact(width).map(<[f64]>::to_vec).collect(),
            generator_id: e.generator_id,
            seed: e.seed,
            params: e.params,
            grid: e.grid,
        }
    }
}

impl PathEnsemble {
    /// Builds an ensemble from row-major `values`; every value must be finite.
    pub fn from_parts(
        grid: TimeGrid,
        values: Vec<f64>,
        seed: u64,
        generator_id: String,
        params: BTreeMap<String, f64>,
    ) -> Result<Self> {
        let width = grid.len();
        if !values.len().is_multiple_of(width) {
            return Err(Error::Precondition(format!(
                "{} values do not form rows of width {width}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!(
                "non-finite value in path {} at grid index {}",
                pos / width,
                pos % width
            )));
        }
        Ok(Self {
            n_paths: values.len() / width,
            grid,
            values,
            seed,
            generator_id,
            params,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn generator_id(&self) -> &str {
        &self.generator_id
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn path(&self, i: usize) -> &[f64] {
        let w = self.grid.len();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn paths(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.values.chunks_exact(self.grid.len())
    }

    /// Row-major values, `n_paths × grid.len()`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Materialises `n_paths` paths of `generator`.
pub fn generate<G: PathGenerator + ?Sized>(generator: &G, n_paths: usize, seed: u64) -> PathEnsemble {
    let rows = map_paths(generator, n_paths, seed, <[f64]>::to_vec);
    PathEnsemble {
        grid: generator.grid().clone(),
        values: rows.into_iter().flatten().collect(),
        n_paths,
        seed,
        generator_id: generator.generator_id().to_string(),
        params: generator.params(),
    }
}

/// Simulates standard fBm with Hurst index `h`; see [`FbmGenerator`].
pub fn simulate_fbm(h: f64, grid: &TimeGrid, n_paths: usize, seed: u64) -> Result<PathEnsemble> {
    check_paths(n_paths)?;
    Ok(generate(&FbmGenerator::new(h, grid.clone())?, n_paths, seed))
}

/// Simulates the Rademacher random-walk martingale; see [`RandomWalkGenerator`].
pub fn simulate_random_walk_martingale(
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    check_paths(n_paths)?;
    Ok(generate(&RandomWalkGenerator::new(grid.clone()), n_paths, seed))
}

/// Simulates the truncated series `Σ a_k ξ_k f_k(t)`; see
/// [`RademacherSeriesGenerator`].
pub fn simulate_rademacher_series(
    spec: &SeriesSpec,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    check_paths(n_paths)?;
    Ok(generate(&RademacherSeriesGenerator::new(spec.clone(), grid.clone())?, n_paths, seed))
}

fn check_paths(n_paths: usize) -> Result<()> {
    if n_paths == 0 {
        Err(Error::Precondition("n_paths must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Rebuilds the generator that produced an ensemble from its recorded
/// `generator_id` and parameters.
pub fn generator_from_params(
    generator_id: &str,
    params: &BTreeMap<String, f64>,
    grid: &TimeGrid,
) -> Result<Box<dyn PathGenerator>> {
    let get = |key: &str| {
        params.get(key).copied().ok_or_else(|| {
            Error::Config(format!("generator '{generator_id}' is missing parameter '{key}'"))
        })
    };
    match generator_id {
        fbm::GENERATOR_ID => Ok(Box::new(FbmGenerator::new(get("h")?, grid.clone())?)),
        walk::GENERATOR_ID => Ok(Box::new(RandomWalkGenerator::new(grid.clone()))),
        series::GENERATOR_ID => {
            let k_max = get("k_max")?;
            if !(k_max >= 1.0 && k_max.fract() == 0.0 && k_max <= u32::MAX as f64) {
                return Err(Error::Config(format!("k_max must be a positive integer, got {k_max}")));
            }
            let spec = SeriesSpec::new(get("gamma")?, k_max as usize, get("h")?)?
                .with_scale(get("scale")?)?;
            Ok(Box::new(RademacherSeriesGenerator::new(spec, grid.clone())?))
        }
        other => Err(Error::Config(format!("unknown generator '{other}'"))),
    }
}

/// Regenerates an ensemble from its provenance; the result is bit-identical
/// to the original when nothing was altered.
pub fn regenerate(ensemble: &PathEnsemble) -> Result<PathEnsemble> {
    let generator = generator_from_params(&ensemble.generator_id, &ensemble.params, &ensemble.grid)?;
    Ok(generate(generator.as_ref(), ensemble.n_paths, ensemble.seed))
}
