#![no_main]

use libfuzzer_sys::fuzz_target;
use maxbounds::config::Config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // parse errors are fine; turning a parsed file into experiments must not panic
    if let Ok(cfg) = Config::parse(text) {
        let _ = cfg.experiments(cfg.resolve_seed(None));
        let _ = cfg.holder_spec();
        let _ = cfg.tail_spec();
    }
});
