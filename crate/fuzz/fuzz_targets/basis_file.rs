#![no_main]

use libfuzzer_sys::fuzz_target;
use tpns_core::stokes::persist::BasisFile;

fuzz_target!(|data: &[u8]| {
    if let Ok(b) = BasisFile::decode(data) {
        let bytes = b.encode();
        let again = BasisFile::decode(&bytes).expect("re-encoded basis decodes");
        assert_eq!(again.encode(), bytes);
    }
});
