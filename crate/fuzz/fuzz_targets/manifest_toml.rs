#![no_main]

use libfuzzer_sys::fuzz_target;
use std::path::Path;
use tpns_core::diagnostics::RunManifest;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(m) = RunManifest::from_toml_str(s, Path::new(".")) {
        let _ = m.linear_config(m.seed);
        let _ = m.oseen_config(m.seed);
        let again = RunManifest::from_toml_str(&m.to_toml(), Path::new(".")).expect("written manifest parses");
        assert_eq!(again.to_toml(), m.to_toml());
    }
});
