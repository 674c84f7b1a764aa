#![no_main]

use libfuzzer_sys::fuzz_target;
use maxbounds::processes::PathEnsemble;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(ens) = PathEnsemble::from_csv(text) {
        // whatever parses must survive a write/read cycle unchanged
        let again = PathEnsemble::from_csv(&ens.to_csv()).expect("re-reading written CSV");
        assert_eq!(again.values().len(), ens.values().len());
        assert!(again.values().iter().zip(ens.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
});
