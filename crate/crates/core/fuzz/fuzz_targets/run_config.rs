#![no_main]

use libfuzzer_sys::fuzz_target;
use triage_audit::runner::RunConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(config) = RunConfig::from_json(text) {
            assert!(config.validate().is_ok());
            let _ = config.run_id();
        }
    }
});
