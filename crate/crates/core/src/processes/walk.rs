use std::collections::BTreeMap;

use rand::Rng;

use super::{PathGenerator, TimeGrid};
use crate::rng::{self, Purpose};

pub(super) const GENERATOR_ID: &str = "random_walk";

/// `M_{t_j} = Σ_{i<=j} √(t_i - t_{i-1}) ξ_i` with i.i.d. Rademacher `ξ_i`.
///
/// A martingale on the grid with `E M_t² = t`; its conditional increments
/// vanish, so it satisfies the conditional increment condition with
/// `A_{p,h} = 0`.
#[derive(Debug, Clone)]
pub struct RandomWalkGenerator {
    grid: TimeGrid,
    step_scale: Vec<f64>,
}

impl RandomWalkGenerator {
    pub fn new(grid: TimeGrid) -> Self {
        let step_scale = grid.points().windows(2).map(|w| (w[1] - w[0]).sqrt()).collect();
        Self { grid, step_scale }
    }
}

impl PathGenerator for RandomWalkGenerator {
    fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn generator_id(&self) -> &'static str {
        GENERATOR_ID
    }

    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::new()
    }

    fn fill(&self, seed: u64, first: u64, out: &mut [f64]) {
        let width = self.grid.len();
        for (r, row) in out.chunks_exact_mut(width).enumerate() {
            let mut rng = rng::stream(seed, Purpose::Paths, first + r as u64);
            let mut level = 0.0;
            row[0] = 0.0;
            for (slot, scale) in row[1..].iter_mut().zip(&self.step_scale) {
                level += if rng.random::<bool>() { *scale } else { -scale };
                *slot = level;
            }
        }
    }
}
