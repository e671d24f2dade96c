//! Replays the checked-in fuzz seeds through the fuzzed entry points so the
//! seeds stay meaningful inputs as the formats evolve.

use std::path::PathBuf;

use triage_audit::cohort::{ingest_readers, RaceRules};
use triage_audit::gateway::decode_chat_response;
use triage_audit::parsing::parse_esi;
use triage_audit::runner::{decode_records_jsonl, RunConfig};
use triage_audit::vignette::{decode_corpus_jsonl, validate, NamePools};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn text(bytes: &[u8]) -> &str {
    std::str::from_utf8(bytes).unwrap()
}

#[test]
fn parse_esi_seeds() {
    let parsed = seeds("parse_esi").iter().filter(|(_, b)| parse_esi(text(b)).is_some()).count();
    assert!(parsed >= 6);
}

#[test]
fn ingest_seeds() {
    for (name, bytes) in seeds("ingest_tables") {
        let parts: Vec<&[u8]> = bytes.splitn(4, |b| *b == 0).collect();
        assert_eq!(parts.len(), 4, "{name}");
        let result = ingest_readers(parts[0], parts[1], parts[2], parts[3], &RaceRules::default());
        if name != "quoted" {
            result.unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }
}

#[test]
fn records_seeds() {
    for (name, bytes) in seeds("records_jsonl") {
        let (records, dropped) = decode_records_jsonl(text(&bytes)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(!records.is_empty(), "{name}");
        assert_eq!(dropped, name == "truncated_tail", "{name}");
    }
}

#[test]
fn corpus_seeds() {
    for (name, bytes) in seeds("corpus_jsonl") {
        let vignettes = decode_corpus_jsonl(text(&bytes)).unwrap_or_else(|e| panic!("{name}: {e}"));
        for v in &vignettes {
            assert!(validate(&v.text).is_ok(), "{name}: {}", v.vignette_id);
        }
    }
}

#[test]
fn chat_response_seeds() {
    let decoded: Vec<_> = seeds("chat_response")
        .into_iter()
        .map(|(name, b)| (name, decode_chat_response(&b).ok()))
        .collect();
    let get = |n: &str| decoded.iter().find(|(name, _)| name == n).unwrap().1.clone();
    assert_eq!(get("ok").as_deref(), Some("ESI Level: 2"));
    assert_eq!(get("null_content").as_deref(), Some(""));
    assert_eq!(get("no_choices"), None);
    assert_eq!(get("error"), None);
}

#[test]
fn pool_and_rule_seeds() {
    for (name, bytes) in seeds("name_pools") {
        NamePools::from_json(text(&bytes)).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    for (name, bytes) in seeds("race_rules") {
        let (rules, _) = text(&bytes).split_once('\0').unwrap();
        RaceRules::from_json(rules).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn vignette_text_seeds() {
    assert!(seeds("vignette_text").iter().any(|(_, b)| validate(text(b)).is_ok()));
}

#[test]
fn run_config_seeds() {
    for (name, bytes) in seeds("run_config") {
        let result = RunConfig::from_json(text(&bytes));
        assert_eq!(result.is_ok(), name != "duplicate_ids", "{name}: {result:?}");
    }
}
