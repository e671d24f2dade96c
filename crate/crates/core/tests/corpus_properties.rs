mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use triage_audit::cohort::{categorize_complaint, ingest_readers, stratified_sample, synth_cohort, RaceRules};
use triage_audit::vignette::{
    blind, build_corpus, demographic_tokens, gender_only_swap, invert_counterfactual, render, validate, BuildOptions,
    NamePools, Variant, Vignette,
};

fn cohort(visits: usize, seed: u64) -> Vec<triage_audit::cohort::CohortRow> {
    let t = synth_cohort(visits, seed);
    ingest_readers(t.edstays.as_bytes(), t.triage.as_bytes(), t.patients.as_bytes(), t.medrecon.as_bytes(), &RaceRules::default())
        .unwrap()
        .rows
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn surviving_rows_satisfy_invariants(seed in any::<u64>()) {
        for row in cohort(2_000, seed) {
            prop_assert!(row.violations().is_empty(), "{:?}: {:?}", row.stay_id, row.violations());
        }
    }

    #[test]
    fn category_does_not_depend_on_corpus_order(seed in any::<u64>()) {
        let rows = cohort(500, seed);
        let before: BTreeMap<_, _> = rows.iter().map(|r| (r.stay_id.clone(), categorize_complaint(&r.chief_complaint))).collect();
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        for r in &shuffled {
            prop_assert_eq!(before[&r.stay_id], categorize_complaint(&r.chief_complaint));
        }
    }

    #[test]
    fn corpus_invariants(seed in any::<u64>()) {
        let corpus = common::synth_corpus(4_000, 10, seed, true).vignettes;
        let pools = NamePools::default();
        let mut groups: BTreeMap<&str, Vec<&Vignette>> = BTreeMap::new();
        for v in &corpus {
            groups.entry(&v.pair_id).or_default().push(v);
            // Stored text is exactly what the renderer produces.
            prop_assert_eq!(&render(v).unwrap(), &v.text);
            prop_assert_eq!(&gender_only_swap(&gender_only_swap(v).unwrap()).unwrap(), v);
            if matches!(v.variant, Variant::Original | Variant::Counterfactual) {
                prop_assert!(validate(&v.text).is_ok(), "{}", v.text);
                let b = blind(v).unwrap();
                prop_assert_eq!(demographic_tokens(&b.text, &pools), Vec::<String>::new());
                prop_assert_eq!(&blind(&b).unwrap(), &b);
            }
        }
        for vs in groups.values() {
            let clinical = serde_json::to_string(&vs[0].clinical).unwrap();
            for v in vs {
                prop_assert_eq!(&serde_json::to_string(&v.clinical).unwrap(), &clinical);
                prop_assert_eq!(v.ground_truth_esi, vs[0].ground_truth_esi);
            }
            let original = vs.iter().find(|v| v.variant == Variant::Original).unwrap();
            if let Some(cf) = vs.iter().find(|v| v.variant == Variant::Counterfactual) {
                prop_assert_eq!(&invert_counterfactual(cf).unwrap(), *original);
                prop_assert_ne!(cf.gender, original.gender);
            }
        }
    }
}

#[test]
fn corpus_does_not_depend_on_thread_count() {
    let rows = cohort(6_000, 5);
    let sample = stratified_sample(&rows, 20, 5).unwrap();
    let pools = NamePools::default();
    let build = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| build_corpus(&sample, &pools, BuildOptions { seed: 5, ablations: true }))
    };
    let (a, b) = (build(1), build(4));
    assert_eq!(serde_json::to_string(&a.vignettes).unwrap(), serde_json::to_string(&b.vignettes).unwrap());
    assert_eq!(a.manifest, b.manifest);
}

#[test]
fn sample_is_a_pure_function_of_its_inputs() {
    let rows = cohort(5_000, 8);
    let a = stratified_sample(&rows, 15, 99).unwrap();
    let b = stratified_sample(&rows, 15, 99).unwrap();
    assert_eq!(a.rows, b.rows);
    assert_ne!(a.rows, stratified_sample(&rows, 15, 100).unwrap().rows);
}
