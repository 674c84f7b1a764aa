#![no_main]

use libfuzzer_sys::fuzz_target;
use maxbounds::bounds::BoundReport;

fuzz_target!(|data: &[u8]| {
    let Ok(report) = serde_json::from_slice::<BoundReport>(data) else { return };
    // recomputation from untrusted params must fail cleanly, never panic
    if let Ok(fresh) = report.recompute() {
        assert_eq!(fresh.recompute().map(|r| r.value.to_bits()), Ok(fresh.value.to_bits()));
    }
});
