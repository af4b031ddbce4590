#![no_main]

use libfuzzer_sys::fuzz_target;
use tpns_core::diagnostics::FieldDump;

fuzz_target!(|data: &[u8]| {
    if let Ok(d) = FieldDump::decode(data) {
        let bytes = d.encode();
        let again = FieldDump::decode(&bytes).expect("re-encoded dump decodes");
        assert_eq!(again.encode(), bytes);
    }
});
