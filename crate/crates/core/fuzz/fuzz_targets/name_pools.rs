#![no_main]

use libfuzzer_sys::fuzz_target;
use triage_audit::vignette::{demographic_tokens, NamePools};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(pools) = NamePools::from_json(text) {
        let _ = demographic_tokens("Patient: Jane Doe, 54-year-old woman. She reports chest pain.", &pools);
    }
});
