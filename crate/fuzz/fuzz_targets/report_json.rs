#![no_main]

use libfuzzer_sys::fuzz_target;
use maxbounds::verify::VerifyReport;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(report) = VerifyReport::from_json(text) {
        let _ = report.to_csv();
        let _ = report.all_passed();
    }
});
