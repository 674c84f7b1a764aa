#![no_main]

use libfuzzer_sys::fuzz_target;
use maxbounds::estimators::{count_upcrossings, upcrossings_by_definition, CrossingBand};

// byte 0, 1: band levels in quarter steps; the rest: path values in quarter steps
fuzz_target!(|data: &[u8]| {
    if data.len() < 3 {
        return;
    }
    let a = data[0] as i8 as f64 / 4.0;
    let b = a + (data[1] as f64 + 1.0) / 4.0;
    let band = CrossingBand::new(a, b).unwrap();
    let values: Vec<f64> = data[2..].iter().take(256).map(|&x| x as i8 as f64 / 4.0).collect();
    assert_eq!(count_upcrossings(&values, band), upcrossings_by_definition(&values, band));
});
