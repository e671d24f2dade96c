#![no_main]

use libfuzzer_sys::fuzz_target;
use triage_audit::parsing::parse_esi;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Some(p) = parse_esi(&text) {
        assert!((1..=5).contains(&p.esi.level()));
    }
});
