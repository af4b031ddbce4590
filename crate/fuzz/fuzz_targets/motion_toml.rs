#![no_main]

use libfuzzer_sys::fuzz_target;
use tpns_core::motion::{validate_hypothesis_h, MotionConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = MotionConfig::from_toml_str(s) {
        if let Ok(spec) = cfg.to_spec() {
            let _ = validate_hypothesis_h(&spec);
        }
    }
});
