#![no_main]

use libfuzzer_sys::fuzz_target;
use triage_audit::cohort::{standardize_race, RaceRules};

// Rule table JSON, then a NUL, then a raw race value to classify.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let (rules, value) = text.split_once('\0').unwrap_or((text, ""));
    let _ = standardize_race(value);
    if let Ok(rules) = RaceRules::from_json(rules) {
        let _ = rules.standardize(value);
    }
});
