#![no_main]

use libfuzzer_sys::fuzz_target;
use triage_audit::vignette::{blind, decode_corpus_jsonl, validate};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(vignettes) = decode_corpus_jsonl(text) else { return };
    for v in &vignettes {
        let _ = validate(&v.text);
        let _ = blind(v);
    }
});
