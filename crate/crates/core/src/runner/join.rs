use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::records::{EvalRecord, Status};
use crate::domain::{AgeBand, Esi, Gender};
use crate::metrics::{GenderedPrediction, PairOutcome};
use crate::strategy::Strategy;
use crate::vignette::{Variant, Vignette};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub endpoint_id: String,
    pub strategy: Strategy,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AblationJoin {
    pub pairs: Vec<PairOutcome>,
    pub excluded: u64,
}

/// Joined outcomes for one endpoint and strategy.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JoinResult {
    pub originals: u64,
    pub pairs: Vec<PairOutcome>,
    /// Pairs with a missing or non-OK side.
    pub excluded: u64,
    /// Originals without a counterfactual partner.
    pub unpaired: u64,
    /// (prediction, reference) for every evaluated original and counterfactual.
    pub accuracy_inputs: Vec<(Option<Esi>, Esi)>,
    pub group_all: Vec<GenderedPrediction>,
    pub group_originals: Vec<GenderedPrediction>,
    /// Pair id of each entry in `group_all` and `group_originals`.
    pub group_all_ids: Vec<String>,
    pub group_originals_ids: Vec<String>,
    /// (pair id, more urgent of the two predictions, reference).
    pub augmented: Vec<(String, Esi, Esi)>,
    pub ablations: BTreeMap<Variant, AblationJoin>,
    /// (vignette id, raw response) for parse failures.
    pub parse_failures: Vec<(String, String)>,
}

#[derive(Default)]
struct PairGroup<'a> {
    original: Option<&'a Vignette>,
    members: BTreeMap<Variant, &'a Vignette>,
}

fn ok_esi(r: Option<&&EvalRecord>) -> Option<Esi> {
    r.filter(|r| r.status == Status::Ok).and_then(|r| r.parsed_esi)
}

fn outcome(original: &Vignette, pair_id: &str, original_pred: Esi, other_pred: Esi) -> PairOutcome {
    let g = original.gender.unwrap_or(original.source_gender);
    let (esi_f, esi_m) = match g {
        Gender::F => (original_pred, other_pred),
        Gender::M => (other_pred, original_pred),
    };
    PairOutcome {
        pair_id: pair_id.to_string(),
        esi_f,
        esi_m,
        truth: original.ground_truth_esi,
        category: original.category,
        race: original.race,
        age_band: AgeBand::from_age(original.age.unwrap_or(0)),
        admitted: original.is_admitted(),
        original_gender: g,
        duplicate: original.duplicate,
    }
}

/// Joins each pair's evaluations per endpoint and strategy. The female and
/// male slots follow the displayed gender; in ablation pairs the variant takes
/// the slot opposite the original.
pub fn pair_join(records: &[EvalRecord], corpus: &[Vignette]) -> BTreeMap<CellKey, JoinResult> {
    let mut groups: BTreeMap<&str, PairGroup<'_>> = BTreeMap::new();
    for v in corpus {
        let g = groups.entry(v.pair_id.as_str()).or_default();
        if v.variant == Variant::Original {
            g.original = Some(v);
        }
        g.members.insert(v.variant, v);
    }
    let mut cells: BTreeMap<CellKey, HashMap<&str, &EvalRecord>> = BTreeMap::new();
    for r in records {
        cells
            .entry(CellKey { endpoint_id: r.endpoint_id.clone(), strategy: r.strategy })
            .or_default()
            .entry(r.vignette_id.as_str())
            .or_insert(r);
    }

    let mut out = BTreeMap::new();
    for (key, by_id) in cells {
        let mut j = JoinResult::default();
        let mut failures: Vec<(String, String)> = by_id
            .values()
            .filter(|r| r.status == Status::ParseFailure)
            .map(|r| (r.vignette_id.clone(), r.raw_response.clone()))
            .collect();
        failures.sort();
        j.parse_failures = failures;

        for (pair_id, group) in &groups {
            let Some(original) = group.original else { continue };
            j.originals += 1;
            let orig_rec = by_id.get(original.vignette_id.as_str());
            let cf = group.members.get(&Variant::Counterfactual);
            let cf_rec = cf.and_then(|c| by_id.get(c.vignette_id.as_str()));

            for (v, rec) in [(Some(original), orig_rec), (cf.copied(), cf_rec)] {
                let (Some(v), Some(rec)) = (v, rec) else { continue };
                j.accuracy_inputs.push((ok_esi(Some(rec)), v.ground_truth_esi));
                if let Some(pred) = ok_esi(Some(rec)) {
                    let gp = GenderedPrediction {
                        gender: v.gender.unwrap_or(v.source_gender),
                        pred,
                        truth: v.ground_truth_esi,
                        admitted: v.is_admitted(),
                    };
                    j.group_all.push(gp);
                    j.group_all_ids.push(pair_id.to_string());
                    if v.variant == Variant::Original {
                        j.group_originals.push(gp);
                        j.group_originals_ids.push(pair_id.to_string());
                    }
                }
            }

            if cf.is_none() {
                j.unpaired += 1;
            } else {
                match (ok_esi(orig_rec), ok_esi(cf_rec)) {
                    (Some(o), Some(c)) => {
                        j.pairs.push(outcome(original, pair_id, o, c));
                        j.augmented.push((pair_id.to_string(), o.min(c), original.ground_truth_esi));
                    }
                    _ => j.excluded += 1,
                }
            }

            for variant in [Variant::GenderOnly, Variant::NameOnly, Variant::AgePreservingBlind] {
                let Some(av) = group.members.get(&variant) else { continue };
                let Some(arec) = by_id.get(av.vignette_id.as_str()) else { continue };
                let entry = j.ablations.entry(variant).or_default();
                match (ok_esi(orig_rec), ok_esi(Some(arec))) {
                    (Some(o), Some(a)) => entry.pairs.push(outcome(original, pair_id, o, a)),
                    _ => entry.excluded += 1,
                }
            }
        }
        out.insert(key, j);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::records::sample_record;
    use super::*;
    use crate::vignette::{fixtures_for_tests, vignette_id};

    fn corpus() -> Vec<Vignette> {
        let mut out = Vec::new();
        for (i, paired) in [(1, true), (2, true), (3, false)] {
            let mut o = fixtures_for_tests();
            o.pair_id = format!("p{i}");
            o.vignette_id = vignette_id(&o.pair_id, Variant::Original);
            out.push(o.clone());
            if paired {
                let mut c = o.clone();
                c.variant = Variant::Counterfactual;
                c.gender = Some(Gender::M);
                c.vignette_id = vignette_id(&o.pair_id, Variant::Counterfactual);
                out.push(c);
            }
        }
        out
    }

    #[test]
    fn conservation_and_orientation() {
        let c = corpus();
        let records = vec![
            sample_record("p1-o", Some(3)),
            sample_record("p1-cf", Some(2)),
            sample_record("p2-o", Some(2)),
            sample_record("p2-cf", None),
            sample_record("p3-o", Some(4)),
        ];
        let joined = pair_join(&records, &c);
        let j = joined.values().next().unwrap();
        assert_eq!(j.pairs.len(), 1);
        assert_eq!((j.pairs[0].esi_f.level(), j.pairs[0].esi_m.level()), (3, 2));
        assert_eq!(j.excluded, 1);
        assert_eq!(j.unpaired, 1);
        assert_eq!(j.pairs.len() as u64 + j.excluded + j.unpaired, j.originals);
        assert_eq!(j.accuracy_inputs.len(), 5);
        assert_eq!(j.group_all.len(), 4);
        assert_eq!(j.group_originals.len(), 3);
        assert_eq!(j.augmented[0].1.level(), 2);
        assert_eq!(j.parse_failures.len(), 1);

        let mut rev = records.clone();
        rev.reverse();
        assert_eq!(pair_join(&rev, &c), joined);
    }
}
