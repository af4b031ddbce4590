#![no_main]

use libfuzzer_sys::fuzz_target;
use tpns_core::diagnostics::Ledger;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    for line in s.lines() {
        let _ = Ledger::parse_line(line);
    }
    if let Ok(l) = Ledger::from_jsonl(s) {
        // non-finite numbers normalise to +inf on the first pass
        let text = l.to_jsonl();
        let again = Ledger::from_jsonl(&text).expect("written ledger parses");
        assert_eq!(again.to_jsonl(), text);
    }
});
