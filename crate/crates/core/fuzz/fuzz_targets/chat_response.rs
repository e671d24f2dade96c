#![no_main]

use libfuzzer_sys::fuzz_target;
use triage_audit::gateway::decode_chat_response;
use triage_audit::parsing::parse_esi;

fuzz_target!(|data: &[u8]| {
    if let Ok(content) = decode_chat_response(data) {
        let _ = parse_esi(&content);
    }
});
