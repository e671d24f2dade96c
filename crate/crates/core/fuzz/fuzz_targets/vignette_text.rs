#![no_main]

use libfuzzer_sys::fuzz_target;
use triage_audit::cohort::categorize_complaint;
use triage_audit::gateway::clinical_key;
use triage_audit::vignette::{demographic_tokens, validate, NamePools};

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    let _ = validate(&text);
    let _ = categorize_complaint(&text);
    let _ = clinical_key(&text);
    let _ = demographic_tokens(&text, &NamePools::default());
});
