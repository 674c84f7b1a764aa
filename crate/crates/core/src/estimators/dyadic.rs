use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finest supported mesh; beyond this the integer positions lose exactness.
pub const MAX_DYADIC_LEVEL: u32 = 52;

/// `I^m_l = [s0 + (t0-s0)(l-1)2^{-m}, s0 + (t0-s0) l 2^{-m}]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicInterval {
    pub level: u32,
    /// One-based position `l ∈ [1, 2^m]`.
    pub index: u64,
    pub endpoints: (f64, f64),
}

impl DyadicInterval {
    pub fn new(level: u32, index: u64, s0: f64, t0: f64) -> Self {
        let scale = (t0 - s0) / 2f64.powi(level as i32);
        Self {
            level,
            index,
            endpoints: (s0 + scale * (index - 1) as f64, s0 + scale * index as f64),
        }
    }

    pub fn length(&self) -> f64 {
        self.endpoints.1 - self.endpoints.0
    }
}

/// Splits `[s, t]` into disjoint dyadic subintervals of `[s0, t0]`, using at
/// most two intervals of each length.
///
/// Both endpoints must lie on the level-`max_level` mesh. Working left to
/// right, each step takes the largest aligned dyadic block that starts at the
/// current point and fits before `t`; block sizes therefore rise and then
/// fall, each size appearing at most once on either side.
pub fn dyadic_decompose(s: f64, t: f64, s0: f64, t0: f64, max_level: u32) -> Result<Vec<DyadicInterval>> {
    if !(s0.is_finite() && t0.is_finite() && s0 < t0 && (t0 - s0).is_finite()) {
        return Err(Error::Precondition(format!("need s0 < t0, got [{s0}, {t0}]")));
    }
    if !(s0 <= s && s < t && t <= t0) {
        return Err(Error::Precondition(format!(
            "need s0 <= s < t <= t0, got s = {s}, t = {t} in [{s0}, {t0}]"
        )));
    }
    if max_level == 0 || max_level > MAX_DYADIC_LEVEL {
        return Err(Error::Precondition(format!(
            "max_level must lie in 1..={MAX_DYADIC_LEVEL}, got {max_level}"
        )));
    }
    let i = mesh_position(s, s0, t0, max_level)?;
    let j = mesh_position(t, s0, t0, max_level)?;
    Ok(decompose_mesh(i, j, max_level)
        .into_iter()
        .map(|(level, index)| DyadicInterval::new(level, index, s0, t0))
        .collect())
}

/// The greedy decomposition on integer mesh positions `[i, j]` of a mesh with
/// `2^max_level` cells, as `(level, index)` pairs.
pub(crate) fn decompose_mesh(mut i: u64, j: u64, max_level: u32) -> Vec<(u32, u64)> {
    let mut out = Vec::new();
    while i < j {
        let align = if i == 0 { max_level } else { i.trailing_zeros().min(max_level) };
        let fit = 63 - (j - i).leading_zeros();
        let k = align.min(fit);
        out.push((max_level - k, (i >> k) + 1));
        i += 1 << k;
    }
    out
}

fn mesh_position(x: f64, s0: f64, t0: f64, level: u32) -> Result<u64> {
    let cells = 2f64.powi(level as i32);
    let width = t0 - s0;
    // x carries a rounding error relative to the largest magnitude involved,
    // which is amplified by cells/width when measured in mesh cells
    let scale = x.abs().max(s0.abs()).max(t0.abs()).max(width);
    let tol = 1e-9f64.max(16.0 * f64::EPSILON * cells * scale / width);
    if tol >= 0.25 {
        return Err(Error::Precondition(format!(
            "the level-{level} dyadic mesh of [{s0}, {t0}] is finer than f64 resolves"
        )));
    }
    let u = (x - s0) / width * cells;
    let r = u.round();
    if (u - r).abs() > tol {
        return Err(Error::Precondition(format!(
            "{x} is not on the level-{level} dyadic mesh of [{s0}, {t0}]"
        )));
    }
    Ok(r as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent construction: split `[lo, hi)` top-down, keeping every
    /// block fully inside `[i, j)`.
    fn top_down(lo: u64, hi: u64, level: u32, i: u64, j: u64, out: &mut Vec<(u32, u64)>) {
        if j <= lo || hi <= i {
            return;
        }
        if i <= lo && hi <= j {
            out.push((level, lo / (hi - lo) + 1));
            return;
        }
        let mid = (lo + hi) / 2;
        top_down(lo, mid, level + 1, i, j, out);
        top_down(mid, hi, level + 1, i, j, out);
    }

    fn oracle(i: u64, j: u64, max_level: u32) -> Vec<(u32, u64)> {
        let mut out = Vec::new();
        top_down(0, 1 << max_level, 0, i, j, &mut out);
        out
    }

    fn levels(v: &[DyadicInterval]) -> Vec<u32> {
        v.iter().map(|d| d.level).collect()
    }

    #[test]
    fn whole_interval_is_level_zero() {
        let v = dyadic_decompose(0.0, 1.0, 0.0, 1.0, 4).unwrap();
        assert_eq!(v, vec![DyadicInterval::new(0, 1, 0.0, 1.0)]);
    }

    #[test]
    fn three_quarters() {
        let v = dyadic_decompose(0.0, 0.75, 0.0, 1.0, 2).unwrap();
        assert_eq!(levels(&v), [1, 2]);
        assert_eq!(v[0].endpoints, (0.0, 0.5));
        assert_eq!(v[1].endpoints, (0.5, 0.75));
    }

    #[test]
    fn quarter_to_seven_eighths() {
        let v = dyadic_decompose(0.25, 0.875, 0.0, 1.0, 3).unwrap();
        assert_eq!(levels(&v), [2, 2, 3]);
        let ends: Vec<_> = v.iter().map(|d| d.endpoints).collect();
        assert_eq!(ends, [(0.25, 0.5), (0.5, 0.75), (0.75, 0.875)]);
    }

    #[test]
    fn shifted_base_interval() {
        let v = dyadic_decompose(2.5, 4.0, 2.0, 6.0, 3).unwrap();
        let ends: Vec<_> = v.iter().map(|d| d.endpoints).collect();
        assert_eq!(ends, [(2.5, 3.0), (3.0, 4.0)]);
    }

    #[test]
    fn off_mesh_and_bad_ranges_rejected() {
        assert!(dyadic_decompose(0.3, 0.5, 0.0, 1.0, 3).is_err());
        assert!(dyadic_decompose(0.5, 0.5, 0.0, 1.0, 3).is_err());
        assert!(dyadic_decompose(-0.5, 0.5, 0.0, 1.0, 3).is_err());
        assert!(dyadic_decompose(0.0, 0.5, 0.0, 1.0, 0).is_err());
        assert!(dyadic_decompose(0.0, 0.5, 1.0, 0.0, 3).is_err());
    }

    /// Mesh points far from the origin relative to the interval width carry
    /// rounding of order `eps·|x|`, which must still be accepted.
    #[test]
    fn offset_mesh_points_are_accepted() {
        let (s0, t0) = (5.495820425191509, 5.598832733525341);
        let v = dyadic_decompose(5.572844272940097, t0, s0, t0, 18).unwrap();
        assert!((v.iter().map(DyadicInterval::length).sum::<f64>() - (t0 - 5.572844272940097)).abs() < 1e-12);
        let (s0, t0) = (8.499814328147725, 8.793021998542743);
        assert!(dyadic_decompose(s0, 8.72012917176982, s0, t0, 20).is_ok());
        assert!(matches!(
            dyadic_decompose(1e6, 1e6 + 0.5, 1e6, 1e6 + 1.0, 52),
            Err(Error::Precondition(_))
        ));
    }

    proptest! {
        #[test]
        fn greedy_matches_top_down_split(max_level in 1u32..20, a in any::<u64>(), b in any::<u64>()) {
            let cells = 1u64 << max_level;
            let (mut i, mut j) = (a % (cells + 1), b % (cells + 1));
            if i > j { std::mem::swap(&mut i, &mut j); }
            prop_assume!(i < j);
            let mut greedy = decompose_mesh(i, j, max_level);
            let mut expect = oracle(i, j, max_level);
            greedy.sort_unstable();
            expect.sort_unstable();
            prop_assert_eq!(greedy, expect);
        }

        #[test]
        fn cover_properties(max_level in 1u32..30, a in any::<u64>(), b in any::<u64>(),
                            s0 in -10.0f64..10.0, width in 0.1f64..10.0) {
            let cells = 1u64 << max_level;
            let (mut i, mut j) = (a % (cells + 1), b % (cells + 1));
            if i > j { std::mem::swap(&mut i, &mut j); }
            prop_assume!(i < j);
            let t0 = s0 + width;
            let at = |k: u64| s0 + width * (k as f64 / cells as f64);
            let (s, t) = (at(i), at(j));
            let v = dyadic_decompose(s, t, s0, t0, max_level).unwrap();
            let mut per_level = std::collections::HashMap::new();
            for d in &v {
                *per_level.entry(d.level).or_insert(0) += 1;
            }
            prop_assert!(per_level.values().all(|&c| c <= 2));
            for w in v.windows(2) {
                prop_assert!(w[0].endpoints.1 <= w[1].endpoints.0 + 1e-12);
            }
            let total: f64 = v.iter().map(DyadicInterval::length).sum();
            prop_assert!((total - (t - s)).abs() < 1e-12);
        }
    }
}
