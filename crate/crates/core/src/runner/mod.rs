//! Run orchestration: planning, durable execution with resume, pair joining,
//! analysis and report output.

mod analyze;
mod join;
mod records;
mod report;
mod retest;

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::{CaseIndex, DecodeConfig, Gateway, GatewayError, ModelEndpoint, RetryPolicy};
use crate::hashing::StableHasher;
use crate::parsing::parse_esi;
use crate::strategy::{build_messages, Strategy};
use crate::vignette::{blind, Variant, Vignette};

pub use analyze::{
    analyze, classify_profile, AblationSummary, AnalyzeOptions, AuditReport, AugmentationSummary, CellReport,
    DedupeComparison, PairwiseTest, ParseFailureEntry, Profile,
};
pub use join::{pair_join, AblationJoin, CellKey, JoinResult};
pub use records::{decode_records_jsonl, read_records, EvalRecord, RecordKey, RecordLog, Status};
pub use report::{export_prompts, write_reports, ReportFormat};
pub use retest::{test_retest, RetestReport};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const MANIFEST_FILE: &str = "run_manifest.json";

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub endpoints: Vec<ModelEndpoint>,
    pub strategies: Vec<Strategy>,
    pub corpus_path: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Aggregate each pair to the more urgent of its two predictions.
    #[serde(default)]
    pub augmentation_mode: bool,
    #[serde(default)]
    pub dedupe_duplicates: bool,
    /// Evaluate the ablation variants under the Baseline strategy.
    #[serde(default)]
    pub include_ablations: bool,
    #[serde(default)]
    pub retry: RetryPolicy,
    #[serde(default)]
    pub decode: DecodeConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let c: RunConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.endpoints.is_empty() {
            return Err(Error::Config("at least one endpoint is required".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::Config("at least one strategy is required".into()));
        }
        let mut ids = HashSet::new();
        for e in &self.endpoints {
            e.validate()?;
            if !ids.insert(e.id.as_str()) {
                return Err(Error::Config(format!("duplicate endpoint id {:?}", e.id)));
            }
        }
        let unique: HashSet<_> = self.strategies.iter().collect();
        if unique.len() != self.strategies.len() {
            return Err(Error::Config("strategies contain duplicates".into()));
        }
        if self.retry.backoff_secs.is_empty() && self.retry.max_retries > 0 {
            return Err(Error::Config("retry.backoff_secs is empty".into()));
        }
        Ok(())
    }

    /// Stable identifier derived from the configuration contents.
    pub fn run_id(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        format!("run-{:016x}", StableHasher::new("run").str(&json).finish())
    }

    pub fn records_path(&self) -> PathBuf {
        self.output_dir.join(RECORDS_FILE)
    }
}

/// One model call to make.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WorkItem {
    pub endpoint: usize,
    pub strategy: Strategy,
    /// Index into the corpus.
    pub vignette: usize,
}

/// Vignettes evaluated under `strategy`: originals and counterfactuals, plus
/// ablation variants under Baseline when requested.
pub fn strategy_includes(strategy: Strategy, variant: Variant, include_ablations: bool) -> bool {
    match variant {
        Variant::Original | Variant::Counterfactual => true,
        v if v.is_ablation() => include_ablations && strategy == Strategy::Baseline,
        _ => false,
    }
}

/// Endpoints x strategies x vignettes, minus keys already in `completed`.
pub fn plan(config: &RunConfig, corpus: &[Vignette], completed: &HashSet<RecordKey>) -> Vec<WorkItem> {
    let mut items = Vec::new();
    for (ei, endpoint) in config.endpoints.iter().enumerate() {
        for &strategy in &config.strategies {
            for (vi, v) in corpus.iter().enumerate() {
                if !strategy_includes(strategy, v.variant, config.include_ablations) {
                    continue;
                }
                let key = RecordKey::new(&endpoint.id, strategy, &v.vignette_id);
                if !completed.contains(&key) {
                    items.push(WorkItem { endpoint: ei, strategy, vignette: vi });
                }
            }
        }
    }
    items
}

/// The vignette as sent under `strategy`.
pub fn view_for(strategy: Strategy, v: &Vignette) -> Result<Vignette> {
    if strategy == Strategy::Blind {
        blind(v)
    } else {
        Ok(v.clone())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub planned: usize,
    pub already_completed: usize,
    pub ok: usize,
    pub parse_failures: usize,
    pub persistent_failures: usize,
    pub repaired_partial_line: bool,
    pub started_at: String,
    pub finished_at: String,
}

async fn run_item(
    item: WorkItem,
    config: &RunConfig,
    run_id: &str,
    corpus: &[Vignette],
    gateways: &[Gateway],
) -> Result<EvalRecord> {
    let source = &corpus[item.vignette];
    let view = view_for(item.strategy, source)?;
    let messages = build_messages(item.strategy, &view)?;
    let endpoint = &config.endpoints[item.endpoint];
    let outcome = gateways[item.endpoint].complete(&messages).await;
    let mut record = EvalRecord {
        run_id: run_id.to_string(),
        endpoint_id: endpoint.id.clone(),
        strategy: item.strategy,
        vignette_id: source.vignette_id.clone(),
        pair_id: source.pair_id.clone(),
        variant: view.variant,
        raw_response: String::new(),
        parsed_esi: None,
        parse_rule: None,
        status: Status::PersistentFailure,
        attempts: 0,
        latency_ms: 0,
        error: None,
        timestamp: chrono::Utc::now().to_rfc3339(),
    };
    match outcome {
        Ok(c) => {
            let parsed = parse_esi(&c.text);
            record.status = if parsed.is_some() { Status::Ok } else { Status::ParseFailure };
            record.parsed_esi = parsed.map(|p| p.esi);
            record.parse_rule = parsed.map(|p| p.rule);
            record.raw_response = c.text;
            record.attempts = c.attempts;
            record.latency_ms = c.latency_ms;
        }
        Err(GatewayError::PersistentFailure { attempts, last_error, last_text, .. }) => {
            record.attempts = attempts;
            record.raw_response = last_text;
            record.error = Some(last_error);
        }
        Err(e) => return Err(e.into()),
    }
    Ok(record)
}

/// Runs every planned item not already recorded in the output directory and
/// appends one record per item as it completes. Configuration and credential
/// errors abort the run; every other outcome is recorded.
pub async fn execute(config: &RunConfig, corpus: &[Vignette]) -> Result<RunManifest> {
    config.validate()?;
    let started_at = chrono::Utc::now().to_rfc3339();
    let run_id = config.run_id();
    let cases = Arc::new(CaseIndex::from_vignettes(corpus));
    let gateways = config
        .endpoints
        .iter()
        .map(|e| Gateway::for_endpoint(e, Some(cases.clone()), config.retry.clone(), config.decode))
        .collect::<std::result::Result<Vec<_>, _>>()?;

    std::fs::create_dir_all(&config.output_dir).map_err(|e| Error::io(&config.output_dir, e))?;
    let mut log = RecordLog::open(&config.records_path())?;
    let completed = log.completed_keys();
    let items = plan(config, corpus, &completed);
    let mut manifest = RunManifest {
        run_id: run_id.clone(),
        planned: items.len(),
        already_completed: completed.len(),
        repaired_partial_line: log.repaired(),
        started_at,
        ..RunManifest::default()
    };
    log::info!("{}: {} items planned, {} already recorded", run_id, items.len(), completed.len());

    let concurrency: usize = config.endpoints.iter().map(|e| e.in_flight()).sum::<usize>().max(1);
    let mut results = stream::iter(items)
        .map(|item| run_item(item, config, &run_id, corpus, &gateways))
        .buffer_unordered(concurrency);
    while let Some(result) = results.next().await {
        let record = result?;
        match record.status {
            Status::Ok => manifest.ok += 1,
            Status::ParseFailure => manifest.parse_failures += 1,
            Status::PersistentFailure => manifest.persistent_failures += 1,
        }
        log.append(&record)?;
    }
    manifest.finished_at = chrono::Utc::now().to_rfc3339();
    let path = config.output_dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
