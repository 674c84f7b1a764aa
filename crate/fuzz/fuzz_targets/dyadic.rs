#![no_main]

use libfuzzer_sys::fuzz_target;
use maxbounds::estimators::dyadic_decompose;

fuzz_target!(|data: ([f64; 4], u8)| {
    let ([s, t, s0, t0], level) = data;
    let Ok(cover) = dyadic_decompose(s, t, s0, t0, u32::from(level % 53)) else { return };
    assert!(!cover.is_empty());
    // contiguous, and no dyadic length used more than twice
    for w in cover.windows(2) {
        assert_eq!(w[0].endpoints.1, w[1].endpoints.0);
    }
    let mut per_level = std::collections::HashMap::new();
    for iv in &cover {
        *per_level.entry(iv.level).or_insert(0) += 1;
    }
    assert!(per_level.values().all(|&n| n <= 2));
});
