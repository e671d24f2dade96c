//! Helpers shared by the integration test targets.
#![allow(dead_code)]

pub mod oracle;

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use triage_audit::cohort::{ingest_readers, stratified_sample, synth_cohort, RaceRules};
use triage_audit::gateway::{DecodeConfig, ModelEndpoint, RetryPolicy, Simulator};
use triage_audit::metrics::PairOutcome;
use triage_audit::runner::{execute, read_records, EvalRecord, RunConfig, RunManifest};
use triage_audit::strategy::{build_messages, Strategy};
use triage_audit::vignette::{blind, build_corpus, write_corpus_jsonl, BuildOptions, Corpus, NamePools, Variant, Vignette};
use triage_audit::{AgeBand, Gender};

/// Synthetic cohort -> criteria -> stratified sample -> vignettes.
pub fn synth_corpus(visits: usize, per_stratum: usize, seed: u64, ablations: bool) -> Corpus {
    let t = synth_cohort(visits, seed);
    let ingested = ingest_readers(
        t.edstays.as_bytes(),
        t.triage.as_bytes(),
        t.patients.as_bytes(),
        t.medrecon.as_bytes(),
        &RaceRules::default(),
    )
    .expect("synthetic tables ingest");
    let sample = stratified_sample(&ingested.rows, per_stratum, seed).expect("sample");
    build_corpus(&sample, &NamePools::default(), BuildOptions { seed, ablations })
}

/// Pair ids that have a counterfactual, in id order.
pub fn paired_ids(corpus: &[Vignette]) -> Vec<String> {
    let ids: BTreeSet<&str> = corpus
        .iter()
        .filter(|v| v.variant == Variant::Counterfactual)
        .map(|v| v.pair_id.as_str())
        .collect();
    ids.into_iter().map(str::to_string).collect()
}

/// Every vignette belonging to the first `n` complete pairs.
pub fn first_pairs(corpus: &[Vignette], n: usize) -> Vec<Vignette> {
    let ids = paired_ids(corpus);
    assert!(ids.len() >= n, "corpus has {} pairs, need {n}", ids.len());
    let keep: BTreeSet<&str> = ids[..n].iter().map(String::as_str).collect();
    corpus.iter().filter(|v| keep.contains(v.pair_id.as_str())).cloned().collect()
}

pub fn sim_config(dir: &Path, endpoints: Vec<ModelEndpoint>, strategies: Vec<Strategy>) -> RunConfig {
    RunConfig {
        endpoints,
        strategies,
        corpus_path: dir.join("corpus.jsonl"),
        output_dir: dir.join("out"),
        seed: 42,
        augmentation_mode: false,
        dedupe_duplicates: false,
        include_ablations: false,
        retry: RetryPolicy::default(),
        decode: DecodeConfig::default(),
    }
}

/// Writes the corpus and config under `dir`, executes the run and reads the
/// records back from disk.
pub fn run_sim(dir: &Path, corpus: &[Vignette], config: &RunConfig) -> (RunManifest, Vec<EvalRecord>) {
    write_corpus_jsonl(&config.corpus_path, corpus).expect("write corpus");
    std::fs::write(dir.join("run.json"), serde_json::to_string_pretty(config).unwrap()).unwrap();
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
    let manifest = rt.block_on(execute(config, corpus)).expect("run completes");
    let records = read_records(&config.records_path()).expect("records readable");
    (manifest, records)
}

/// Pair outcomes straight from the simulator, without the run machinery.
pub fn sim_pair_outcomes(sim: &Simulator, corpus: &[Vignette], strategy: Strategy) -> Vec<PairOutcome> {
    let by_id: HashMap<(&str, Variant), &Vignette> =
        corpus.iter().map(|v| ((v.pair_id.as_str(), v.variant), v)).collect();
    let ask = |v: &Vignette| {
        let view = if strategy == Strategy::Blind { blind(v).unwrap() } else { v.clone() };
        sim.respond(&build_messages(strategy, &view).unwrap()).0
    };
    paired_ids(corpus)
        .iter()
        .map(|id| {
            let o = by_id[&(id.as_str(), Variant::Original)];
            let c = by_id[&(id.as_str(), Variant::Counterfactual)];
            let (f, m) = if o.gender == Some(Gender::F) { (o, c) } else { (c, o) };
            PairOutcome {
                pair_id: id.clone(),
                esi_f: ask(f),
                esi_m: ask(m),
                truth: o.ground_truth_esi,
                category: o.category,
                race: o.race,
                age_band: AgeBand::from_age(o.age.unwrap()),
                admitted: o.is_admitted(),
                original_gender: o.gender.unwrap(),
                duplicate: o.duplicate,
            }
        })
        .collect()
}

/// One `PASS`/`FAIL` line per criterion, then the assertion.
pub fn report(criterion: u8, pass: bool, detail: &str) {
    println!("{} criterion {criterion}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {criterion} failed: {detail}");
}
