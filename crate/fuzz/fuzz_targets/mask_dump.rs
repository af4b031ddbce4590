#![no_main]

use libfuzzer_sys::fuzz_target;
use tpns_core::geometry::MaskDump;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = MaskDump::decode(data) {
        let bytes = m.encode();
        let again = MaskDump::decode(&bytes).expect("re-encoded mask decodes");
        assert_eq!(again.encode(), bytes);
    }
});
