#![no_main]

use libfuzzer_sys::fuzz_target;
use triage_audit::runner::decode_records_jsonl;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = decode_records_jsonl(text);
    }
});
