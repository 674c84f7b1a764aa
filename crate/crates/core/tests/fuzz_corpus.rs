//! Replays the checked-in fuzz corpus through the same entry points and
//! checks the properties the fuzz targets assert, on the stable toolchain.

use std::fs;
use std::path::{Path, PathBuf};

use maxbounds::bounds::BoundReport;
use maxbounds::config::Config;
use maxbounds::estimators::{count_upcrossings, dyadic_decompose, upcrossings_by_definition, CrossingBand};
use maxbounds::processes::PathEnsemble;
use maxbounds::verify::VerifyReport;

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            let bytes = fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn config_seeds() {
    let mut accepted = 0;
    for (_, data) in seeds("config_parse") {
        if let Ok(cfg) = Config::parse(std::str::from_utf8(&data).unwrap()) {
            accepted += 1;
            let _ = cfg.experiments(cfg.resolve_seed(None));
            let _ = cfg.holder_spec();
            let _ = cfg.tail_spec();
        }
    }
    assert!(accepted >= 5);
}

#[test]
fn ensemble_csv_seeds_round_trip() {
    let mut accepted = 0;
    for (_, data) in seeds("ensemble_csv") {
        if let Ok(ens) = PathEnsemble::from_csv(std::str::from_utf8(&data).unwrap()) {
            accepted += 1;
            let again = PathEnsemble::from_csv(&ens.to_csv()).unwrap();
            assert!(again.values().iter().zip(ens.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
    assert_eq!(accepted, 1);
}

#[test]
fn json_seeds_parse() {
    for (p, data) in seeds("ensemble_json") {
        PathEnsemble::from_json(std::str::from_utf8(&data).unwrap()).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
    for (p, data) in seeds("report_json") {
        let r = VerifyReport::from_json(std::str::from_utf8(&data).unwrap())
            .unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert!(r.to_csv().lines().count() > r.verdicts.len());
    }
}

#[test]
fn bound_report_seeds_recompute_to_themselves() {
    for (p, data) in seeds("bound_report_json") {
        let r: BoundReport = serde_json::from_slice(&data).unwrap();
        assert_eq!(r.recompute().as_ref(), Ok(&r), "{}", p.display());
    }
}

#[test]
fn upcrossing_seeds_agree_with_definition() {
    for (_, data) in seeds("upcrossings") {
        let a = data[0] as i8 as f64 / 4.0;
        let b = a + (data[1] as f64 + 1.0) / 4.0;
        let band = CrossingBand::new(a, b).unwrap();
        let values: Vec<f64> = data[2..].iter().map(|&x| x as i8 as f64 / 4.0).collect();
        assert_eq!(count_upcrossings(&values, band), upcrossings_by_definition(&values, band));
    }
}

#[test]
fn dyadic_seeds_decompose() {
    for (p, data) in seeds("dyadic") {
        let f = |i: usize| f64::from_le_bytes(data[8 * i..8 * i + 8].try_into().unwrap());
        let cover = dyadic_decompose(f(0), f(1), f(2), f(3), u32::from(data[32] % 53))
            .unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert_eq!(cover.first().unwrap().endpoints.0, f(0));
        assert_eq!(cover.last().unwrap().endpoints.1, f(1));
        for w in cover.windows(2) {
            assert_eq!(w[0].endpoints.1, w[1].endpoints.0);
        }
    }
}
