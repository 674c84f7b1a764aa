use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::processes::TimeGrid;

/// Levels `a < b` of an up-crossing count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBand")]
pub struct CrossingBand {
    a: f64,
    b: f64,
}

#[derive(Deserialize)]
struct RawBand {
    a: f64,
    b: f64,
}

impl TryFrom<RawBand> for CrossingBand {
    type Error = Error;

    fn try_from(raw: RawBand) -> Result<Self> {
        CrossingBand::new(raw.a, raw.b)
    }
}

impl CrossingBand {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::domain(format!("crossing band needs finite a < b, got ({a}, {b})")));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }
}

/// Crossing times `T_0 < T_1 < …` of one path and the count
/// `U = #{k >= 1 : T_{2k-1} defined}`.
///
/// Even-indexed entries are visits strictly below `a`, odd-indexed entries
/// visits strictly above `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpcrossingReport {
    pub band: CrossingBand,
    pub crossing_indices: Vec<usize>,
    pub crossing_times: Vec<f64>,
    pub count: usize,
}

impl UpcrossingReport {
    fn from_indices(band: CrossingBand, crossing_indices: Vec<usize>, time: impl Fn(usize) -> f64) -> Self {
        Self {
            band,
            count: crossing_indices.len() / 2,
            crossing_times: crossing_indices.iter().map(|&i| time(i)).collect(),
            crossing_indices,
        }
    }

    /// Grid index of `T_j`, or `None` when `T_j = ∞`.
    pub fn index_of(&self, j: usize) -> Option<usize> {
        self.crossing_indices.get(j).copied()
    }
}

/// Counts up-crossings in one left-to-right scan. Times are the sample
/// indices; use [`count_upcrossings_on_grid`] for grid times.
pub fn count_upcrossings(values: &[f64], band: CrossingBand) -> UpcrossingReport {
    UpcrossingReport::from_indices(band, scan(values, band), |i| i as f64)
}

/// As [`count_upcrossings`], reporting crossing times from `grid`.
pub fn count_upcrossings_on_grid(values: &[f64], grid: &TimeGrid, band: CrossingBand) -> Result<UpcrossingReport> {
    check_len(values, grid)?;
    let t = grid.points();
    Ok(UpcrossingReport::from_indices(band, scan(values, band), |i| t[i]))
}

fn scan(values: &[f64], band: CrossingBand) -> Vec<usize> {
    let mut out = Vec::new();
    let mut below = true;
    for (i, &y) in values.iter().enumerate() {
        let hit = if below { y < band.a } else { y > band.b };
        if hit {
            out.push(i);
            below = !below;
        }
    }
    out
}

/// The definition read literally: `T_0 = inf{t : Y_t < a}`, and each later
/// `T_j` is found by a fresh scan from the start for the first time after
/// `T_{j-1}` meeting its condition. Quadratic; used as a test oracle.
pub fn upcrossings_by_definition(values: &[f64], band: CrossingBand) -> UpcrossingReport {
    let mut indices: Vec<usize> = Vec::new();
    loop {
        let j = indices.len();
        let prev = indices.last().copied();
        let found = (0..values.len()).find(|&t| {
            let after = prev.is_none_or(|p| t > p);
            let cond = if j.is_multiple_of(2) { values[t] < band.a } else { values[t] > band.b };
            after && cond
        });
        match found {
            Some(t) => indices.push(t),
            None => break,
        }
    }
    UpcrossingReport::from_indices(band, indices, |i| i as f64)
}

/// Checks, for one path and `k >= 1`,
///
/// `(b-a) 1{U >= k} <= -(Y_T - Y_{T_{2k-2}}) 1{T_{2k-2} <= T, T_{2k-1} = ∞}
///                   + Y_{T_{2k-1} ∧ T} - Y_{T_{2k-2} ∧ T}`,
///
/// where an undefined `T_j` is `∞` and `Y_{T_j ∧ T}` is then the terminal
/// value. The right side is formed exactly as displayed; the comparison
/// allows a few ulps for the cancellation in the middle case.
pub fn lemma3_pathwise_check(values: &[f64], grid: &TimeGrid, band: CrossingBand, k: usize) -> Result<bool> {
    check_len(values, grid)?;
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    let report = count_upcrossings(values, band);
    Ok(lemma3_holds(values, &report, k))
}

pub(crate) fn lemma3_holds(values: &[f64], report: &UpcrossingReport, k: usize) -> bool {
    let y_end = *values.last().expect("nonempty path");
    let lo = report.index_of(2 * (k - 1));
    let hi = report.index_of(2 * k - 1);
    let at = |idx: Option<usize>| idx.map_or(y_end, |i| values[i]);
    let lhs = if report.count >= k { report.band.width() } else { 0.0 };
    let stranded = if lo.is_some() && hi.is_none() {
        -(y_end - at(lo))
    } else {
        0.0
    };
    let rhs = stranded + at(hi) - at(lo);
    let slack = 4.0 * f64::EPSILON * (y_end.abs() + at(lo).abs() + at(hi).abs());
    lhs <= rhs + slack
}

fn check_len(values: &[f64], grid: &TimeGrid) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::Precondition(format!(
            "path has {} values, grid has {} points",
            values.len(),
            grid.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::simulate_fbm;
    use proptest::prelude::*;

    fn band(a: f64, b: f64) -> CrossingBand {
        CrossingBand::new(a, b).unwrap()
    }

    #[test]
    fn worked_example() {
        let r = count_upcrossings(&[0.0, -1.0, 2.0, -1.0, 2.0], band(-0.5, 1.0));
        assert_eq!(r.count, 2);
        assert_eq!(r.crossing_indices, [1, 2, 3, 4]);
        assert_eq!(r, upcrossings_by_definition(&[0.0, -1.0, 2.0, -1.0, 2.0], band(-0.5, 1.0)));
    }

    #[test]
    fn levels_themselves_do_not_trigger() {
        let r = count_upcrossings(&[-1.0, 1.0, -1.0, 1.0], band(-1.0, 1.0));
        assert_eq!(r.count, 0);
        assert!(r.crossing_indices.is_empty());
    }

    #[test]
    fn inside_band_has_no_crossings() {
        let r = count_upcrossings(&[0.1, 0.2, -0.3], band(-0.5, 0.5));
        assert_eq!(r.count, 0);
        assert!(r.crossing_times.is_empty());
    }

    #[test]
    fn monotone_path_crosses_at_most_once() {
        let v: Vec<f64> = (0..40).map(|i| i as f64 - 20.0).collect();
        assert_eq!(count_upcrossings(&v, band(-3.0, 5.0)).count, 1);
    }

    #[test]
    fn grid_times_are_reported() {
        let grid = TimeGrid::uniform(2.0, 4).unwrap();
        let r = count_upcrossings_on_grid(&[0.0, -1.0, 2.0, -1.0, 2.0], &grid, band(-0.5, 1.0)).unwrap();
        assert_eq!(r.crossing_times, [0.5, 1.0, 1.5, 2.0]);
        assert!(count_upcrossings_on_grid(&[0.0], &grid, band(0.0, 1.0)).is_err());
    }

    #[test]
    fn band_validation() {
        assert!(CrossingBand::new(1.0, 1.0).is_err());
        assert!(CrossingBand::new(f64::NAN, 1.0).is_err());
        assert!(serde_json::from_str::<CrossingBand>(r#"{"a":2.0,"b":1.0}"#).is_err());
    }

    #[test]
    fn lemma3_worked_cases() {
        let grid = TimeGrid::uniform(1.0, 2).unwrap();
        assert!(lemma3_pathwise_check(&[0.0, -1.0, 2.0], &grid, band(-0.5, 1.0), 1).unwrap());
        assert!(lemma3_pathwise_check(&[0.0, 0.3, 2.0], &grid, band(-0.5, 1.0), 1).unwrap());
        assert!(lemma3_pathwise_check(&[0.0, -1.0, 0.0], &grid, band(-0.5, 1.0), 1).unwrap());
        assert!(lemma3_pathwise_check(&[0.0], &grid, band(-0.5, 1.0), 1).is_err());
        assert!(lemma3_pathwise_check(&[0.0, -1.0, 2.0], &grid, band(-0.5, 1.0), 0).is_err());
    }

    #[test]
    fn lemma3_on_fbm_paths() {
        let grid = TimeGrid::uniform(1.0, 256).unwrap();
        let ens = simulate_fbm(0.5, &grid, 200, 17).unwrap();
        let b = band(-0.1, 0.1);
        for p in ens.paths() {
            let u = count_upcrossings(p, b).count;
            for k in 1..=u + 2 {
                assert!(lemma3_pathwise_check(p, &grid, b, k).unwrap());
            }
        }
    }

    fn int_path() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec((-3i32..=3).prop_map(f64::from), 1..=50)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn scan_matches_definition(v in int_path(), a in -3i32..3, w in 1i32..4) {
            let b = band(a as f64 - 0.5 * (w % 2) as f64, (a + w) as f64);
            prop_assert_eq!(count_upcrossings(&v, b), upcrossings_by_definition(&v, b));
        }

        #[test]
        fn count_is_half_the_crossing_times(v in int_path(), a in -3i32..3, w in 1i32..4) {
            let r = count_upcrossings(&v, band(a as f64, (a + w) as f64));
            prop_assert_eq!(r.count, r.crossing_indices.len() / 2);
            prop_assert!(r.crossing_indices.windows(2).all(|p| p[0] < p[1]));
        }

        #[test]
        fn widening_never_increases(v in int_path(), a in -3i32..3, w in 1i32..4, da in 0i32..3, db in 0i32..3) {
            let narrow = count_upcrossings(&v, band(a as f64, (a + w) as f64)).count;
            let wide = count_upcrossings(&v, band((a - da) as f64, (a + w + db) as f64)).count;
            prop_assert!(wide <= narrow);
        }

        #[test]
        fn subsampling_never_increases(v in int_path(), keep in prop::collection::vec(any::<bool>(), 50),
                                       a in -3i32..3, w in 1i32..4) {
            let b = band(a as f64, (a + w) as f64);
            let sub: Vec<f64> = v.iter().zip(&keep).filter(|(_, &k)| k).map(|(x, _)| *x).collect();
            prop_assert!(count_upcrossings(&sub, b).count <= count_upcrossings(&v, b).count);
        }

        #[test]
        fn lemma3_holds_on_integer_paths(v in int_path(), a in -3i32..3, w in 1i32..4, k in 1usize..30) {
            let grid = TimeGrid::uniform(1.0, v.len().max(2) - 1).unwrap();
            prop_assume!(grid.len() == v.len());
            prop_assert!(lemma3_pathwise_check(&v, &grid, band(a as f64, (a + w) as f64), k).unwrap());
        }
    }
}
