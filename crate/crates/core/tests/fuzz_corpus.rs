//! Replays the fuzz seed corpus through the same properties the fuzz targets
//! check, so the seeds and the decoders stay in step on stable toolchains.

use std::path::{Path, PathBuf};
use tpns_core::diagnostics::{FieldDump, Ledger, RunManifest};
use tpns_core::geometry::MaskDump;
use tpns_core::motion::MotionConfig;
use tpns_core::stokes::persist::BasisFile;

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            let b = std::fs::read(&p).unwrap();
            (p, b)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

/// Decodes every seed, re-encodes the ones that decode, and returns how many did.
fn binary<T>(target: &str, decode: impl Fn(&[u8]) -> tpns_core::Result<T>, encode: impl Fn(&T) -> Vec<u8>) -> usize {
    let mut ok = 0;
    for (p, b) in seeds(target) {
        if let Ok(v) = decode(&b) {
            let bytes = encode(&v);
            let again = decode(&bytes).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            assert_eq!(encode(&again), bytes, "{}", p.display());
            ok += 1;
        }
    }
    ok
}

#[test]
fn binary_seeds_round_trip() {
    assert!(binary("field_dump", FieldDump::decode, FieldDump::encode) >= 3);
    assert!(binary("mask_dump", MaskDump::decode, MaskDump::encode) >= 2);
    assert!(binary("basis_file", BasisFile::decode, BasisFile::encode) >= 2);
}

#[test]
fn corrupted_binary_seeds_are_rejected() {
    for (p, b) in seeds("field_dump") {
        let name = p.file_name().unwrap().to_str().unwrap();
        if name.starts_with("bad_") || name.starts_with("truncated") {
            assert!(FieldDump::decode(&b).is_err(), "{name}");
        }
    }
}

#[test]
fn manifest_seeds_round_trip() {
    for (p, b) in seeds("manifest_toml") {
        let s = std::str::from_utf8(&b).unwrap();
        // forcing files are resolved next to the shipped manifests
        let m = RunManifest::from_toml_str(s, &Path::new(env!("CARGO_MANIFEST_DIR")).join("../../manifests"))
            .unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        let again = RunManifest::from_toml_str(&m.to_toml(), Path::new(".")).unwrap();
        assert_eq!(again.to_toml(), m.to_toml(), "{}", p.display());
    }
}

#[test]
fn motion_seeds_parse_or_fail_cleanly() {
    let mut specs = 0;
    for (_, b) in seeds("motion_toml") {
        if let Ok(cfg) = MotionConfig::from_toml_str(std::str::from_utf8(&b).unwrap()) {
            specs += cfg.to_spec().is_ok() as usize;
        }
    }
    assert!(specs >= 3, "{specs}");
}

#[test]
fn ledger_seeds_round_trip() {
    for (p, b) in seeds("ledger_jsonl") {
        let s = std::str::from_utf8(&b).unwrap();
        if let Ok(l) = Ledger::from_jsonl(s) {
            let text = l.to_jsonl();
            assert_eq!(Ledger::from_jsonl(&text).unwrap().to_jsonl(), text, "{}", p.display());
        }
    }
    let (_, b) = &seeds("ledger_jsonl")[0];
    assert!(Ledger::from_jsonl(std::str::from_utf8(b).unwrap()).is_ok());
}
