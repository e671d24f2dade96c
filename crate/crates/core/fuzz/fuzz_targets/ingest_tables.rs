#![no_main]

use libfuzzer_sys::fuzz_target;
use triage_audit::cohort::{ingest_readers, RaceRules};

// Four CSV tables separated by NUL bytes: edstays, triage, patients, medrecon.
fuzz_target!(|data: &[u8]| {
    let mut parts = data.splitn(4, |b| *b == 0);
    let edstays = parts.next().unwrap_or_default();
    let triage = parts.next().unwrap_or_default();
    let patients = parts.next().unwrap_or_default();
    let medrecon = parts.next().unwrap_or_default();
    if let Ok(ingested) = ingest_readers(edstays, triage, patients, medrecon, &RaceRules::default()) {
        for row in &ingested.rows {
            assert!((1..=5).contains(&row.esi.level()));
        }
    }
});
