#![no_main]

use libfuzzer_sys::fuzz_target;
use maxbounds::processes::PathEnsemble;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = PathEnsemble::from_json(text);
});
