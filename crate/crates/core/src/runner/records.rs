use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::Esi;
use crate::error::{Error, Result};
use crate::parsing::ParseRule;
use crate::strategy::Strategy;
use crate::vignette::Variant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "OK")]
    Ok,
    ParseFailure,
    PersistentFailure,
}

/// Outcome of one model call. The raw response is kept for every status.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub run_id: String,
    pub endpoint_id: String,
    pub strategy: Strategy,
    pub vignette_id: String,
    pub pair_id: String,
    /// Variant actually sent (Blind under the Blind strategy).
    pub variant: Variant,
    pub raw_response: String,
    pub parsed_esi: Option<Esi>,
    pub parse_rule: Option<ParseRule>,
    pub status: Status,
    pub attempts: u32,
    pub latency_ms: u64,
    #[serde(default)]
    pub error: Option<String>,
    pub timestamp: String,
}

impl EvalRecord {
    pub fn key(&self) -> RecordKey {
        RecordKey::new(&self.endpoint_id, self.strategy, &self.vignette_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RecordKey {
    pub endpoint_id: String,
    pub strategy: Strategy,
    pub vignette_id: String,
}

impl RecordKey {
    pub fn new(endpoint_id: &str, strategy: Strategy, vignette_id: &str) -> RecordKey {
        RecordKey {
            endpoint_id: endpoint_id.to_string(),
            strategy,
            vignette_id: vignette_id.to_string(),
        }
    }
}

/// Parses records JSONL. A final line without a newline that fails to parse
/// is treated as an interrupted write and dropped; the returned flag says
/// whether that happened. Any other malformed line is an error. Later
/// duplicates of a key are ignored.
pub fn decode_records_jsonl(text: &str) -> Result<(Vec<EvalRecord>, bool)> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut dropped_tail = false;
    let lines: Vec<&str> = text.split('\n').collect();
    let last = lines.len() - 1;
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<EvalRecord>(line) {
            Ok(r) => {
                if seen.insert(r.key()) {
                    out.push(r);
                }
            }
            Err(_) if i == last => dropped_tail = true,
            Err(e) => return Err(Error::Parse(format!("records line {}: {e}", i + 1))),
        }
    }
    Ok((out, dropped_tail))
}

pub fn read_records(path: &Path) -> Result<Vec<EvalRecord>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (records, dropped) = decode_records_jsonl(&text)?;
    if dropped {
        log::warn!("{}: ignoring a truncated final line", path.display());
    }
    Ok(records)
}

/// Append-only record log. Every append is flushed before returning, so an
/// interruption loses at most the line being written.
pub struct RecordLog {
    path: PathBuf,
    file: File,
    keys: HashSet<RecordKey>,
    repaired: bool,
}

impl RecordLog {
    pub fn open(path: &Path) -> Result<RecordLog> {
        let mut repaired = false;
        let mut keys = HashSet::new();
        if path.exists() {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let (records, dropped) = decode_records_jsonl(&text)?;
            keys.extend(records.iter().map(EvalRecord::key));
            let keep = if dropped {
                repaired = true;
                text.rfind('\n').map_or(0, |i| i + 1)
            } else {
                text.len()
            };
            let f = OpenOptions::new().write(true).open(path).map_err(|e| Error::io(path, e))?;
            f.set_len(keep as u64).map_err(|e| Error::io(path, e))?;
            if !dropped && !text.is_empty() && !text.ends_with('\n') {
                // A complete record whose newline was lost.
                let mut f = OpenOptions::new().append(true).open(path).map_err(|e| Error::io(path, e))?;
                f.write_all(b"\n").map_err(|e| Error::io(path, e))?;
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(RecordLog { path: path.to_path_buf(), file, keys, repaired })
    }

    pub fn completed_keys(&self) -> HashSet<RecordKey> {
        self.keys.clone()
    }

    pub fn repaired(&self) -> bool {
        self.repaired
    }

    pub fn append(&mut self, record: &EvalRecord) -> Result<()> {
        if !self.keys.insert(record.key()) {
            return Err(Error::Contract(format!("duplicate record key {:?}", record.key())));
        }
        let mut line = serde_json::to_vec(record)?;
        line.push(b'\n');
        self.file.write_all(&line).map_err(|e| Error::io(&self.path, e))?;
        self.file.flush().map_err(|e| Error::io(&self.path, e))
    }
}

#[cfg(test)]
pub(crate) fn sample_record(vignette_id: &str, esi: Option<u8>) -> EvalRecord {
    EvalRecord {
        run_id: "run".into(),
        endpoint_id: "sim".into(),
        strategy: Strategy::Baseline,
        vignette_id: vignette_id.into(),
        pair_id: vignette_id.split('-').next().unwrap_or("").into(),
        variant: Variant::Original,
        raw_response: esi.map_or("no answer".into(), |e| format!("ESI Level: {e}")),
        parsed_esi: esi.and_then(Esi::new),
        parse_rule: esi.map(|_| ParseRule::AnchorLine),
        status: if esi.is_some() { Status::Ok } else { Status::ParseFailure },
        attempts: 1,
        latency_ms: 3,
        error: None,
        timestamp: "2026-01-01T00:00:00+00:00".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncated_tail_is_repaired() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("records.jsonl");
        {
            let mut log = RecordLog::open(&p).unwrap();
            log.append(&sample_record("p1-o", Some(2))).unwrap();
            log.append(&sample_record("p1-cf", Some(3))).unwrap();
        }
        let mut text = std::fs::read_to_string(&p).unwrap();
        text.push_str(r#"{"run_id":"run","endpoint_id":"si"#);
        std::fs::write(&p, &text).unwrap();

        let mut log = RecordLog::open(&p).unwrap();
        assert!(log.repaired());
        assert_eq!(log.completed_keys().len(), 2);
        log.append(&sample_record("p2-o", None)).unwrap();
        let all = read_records(&p).unwrap();
        assert_eq!(all.len(), 3);
        assert_eq!(all[2].status, Status::ParseFailure);
        assert!(log.append(&sample_record("p2-o", None)).is_err());
    }

    #[test]
    fn corrupt_middle_line_is_an_error() {
        let good = serde_json::to_string(&sample_record("p1-o", Some(2))).unwrap();
        assert!(decode_records_jsonl(&format!("{{oops\n{good}\n")).is_err());
        let (r, dropped) = decode_records_jsonl(&format!("{good}\n{{oops")).unwrap();
        assert_eq!((r.len(), dropped), (1, true));
    }

    #[test]
    fn status_spelling() {
        assert_eq!(serde_json::to_string(&Status::Ok).unwrap(), "\"OK\"");
    }
}
