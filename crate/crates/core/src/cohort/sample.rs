use std::collections::{BTreeMap, HashMap};

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::complaint::{categorize_complaint, matching_categories, ComplaintCategory};
use super::CohortRow;
use crate::domain::Esi;
use crate::error::{Error, Result};
use crate::hashing::derived_rng;

/// One of the 40 (ESI x complaint category) sampling strata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StratumKey {
    pub esi: Esi,
    pub category: ComplaintCategory,
}

impl StratumKey {
    pub fn all() -> impl Iterator<Item = StratumKey> {
        Esi::ALL.into_iter().flat_map(|esi| {
            ComplaintCategory::ALL
                .into_iter()
                .map(move |category| StratumKey { esi, category })
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleOptions {
    /// Let a visit whose complaint hits several categories be eligible in each
    /// of those strata. A visit drawn twice is flagged as a duplicate.
    pub multi_label: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledRow {
    pub row: CohortRow,
    pub stratum: StratumKey,
    /// The same `stay_id` was drawn more than once.
    pub duplicate: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratumCount {
    pub esi: Esi,
    pub category: ComplaintCategory,
    pub available: usize,
    pub drawn: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingManifest {
    pub per_stratum_target: usize,
    pub seed: u64,
    pub multi_label: bool,
    pub strata: Vec<StratumCount>,
    pub empty_strata: Vec<StratumKey>,
    pub duplicate_stay_ids: Vec<String>,
    pub total_drawn: usize,
    pub unique_visits: usize,
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub rows: Vec<SampledRow>,
    pub manifest: SamplingManifest,
}

pub fn stratified_sample(rows: &[CohortRow], per_stratum_target: usize, seed: u64) -> Result<Sample> {
    stratified_sample_with(rows, per_stratum_target, seed, SampleOptions::default())
}

/// Draws up to `per_stratum_target` rows uniformly without replacement from each
/// stratum. Candidates are ordered by `stay_id` first, so the output depends
/// only on the multiset of rows, the target and the seed.
pub fn stratified_sample_with(
    rows: &[CohortRow],
    per_stratum_target: usize,
    seed: u64,
    options: SampleOptions,
) -> Result<Sample> {
    if per_stratum_target == 0 {
        return Err(Error::Contract("per-stratum target must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[a].stay_id.cmp(&rows[b].stay_id).then(a.cmp(&b)));

    let mut buckets: BTreeMap<StratumKey, Vec<usize>> = BTreeMap::new();
    for &i in &order {
        let row = &rows[i];
        let categories = if options.multi_label {
            matching_categories(&row.chief_complaint)
        } else {
            vec![categorize_complaint(&row.chief_complaint)]
        };
        for category in categories {
            buckets
                .entry(StratumKey { esi: row.esi, category })
                .or_default()
                .push(i);
        }
    }

    let mut drawn: Vec<(usize, StratumKey)> = Vec::new();
    let mut strata = Vec::new();
    let mut empty_strata = Vec::new();
    for (stream, key) in StratumKey::all().enumerate() {
        let candidates = buckets.get(&key).map(Vec::as_slice).unwrap_or(&[]);
        let take = candidates.len().min(per_stratum_target);
        if candidates.is_empty() {
            empty_strata.push(key);
        } else {
            let mut rng = derived_rng(seed, stream as u64);
            for pick in index::sample(&mut rng, candidates.len(), take) {
                drawn.push((candidates[pick], key));
            }
        }
        strata.push(StratumCount {
            esi: key.esi,
            category: key.category,
            available: candidates.len(),
            drawn: take,
        });
    }

    let mut times_drawn: HashMap<&str, usize> = HashMap::new();
    for (i, _) in &drawn {
        *times_drawn.entry(rows[*i].stay_id.as_str()).or_default() += 1;
    }
    let mut duplicate_stay_ids: Vec<String> = times_drawn
        .iter()
        .filter(|(_, &n)| n > 1)
        .map(|(id, _)| id.to_string())
        .collect();
    duplicate_stay_ids.sort();

    let out: Vec<SampledRow> = drawn
        .iter()
        .map(|&(i, stratum)| SampledRow {
            row: rows[i].clone(),
            stratum,
            duplicate: times_drawn[rows[i].stay_id.as_str()] > 1,
        })
        .collect();

    Ok(Sample {
        manifest: SamplingManifest {
            per_stratum_target,
            seed,
            multi_label: options.multi_label,
            strata,
            empty_strata,
            duplicate_stay_ids,
            total_drawn: out.len(),
            unique_visits: times_drawn.len(),
        },
        rows: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Disposition, Gender, Race};

    fn row(stay: usize, esi: u8, complaint: &str) -> CohortRow {
        CohortRow {
            subject_id: format!("s{stay}"),
            stay_id: format!("{stay:06}"),
            gender: if stay % 2 == 0 { Gender::F } else { Gender::M },
            age: 40,
            race: Race::White,
            chief_complaint: complaint.to_string(),
            temperature: Some(98.6),
            heart_rate: 80.0,
            resp_rate: Some(16.0),
            spo2: Some(98.0),
            sbp: 120.0,
            dbp: 80.0,
            pain: None,
            medications: vec![],
            esi: Esi::new(esi).unwrap(),
            disposition: Disposition::HOME,
        }
    }

    fn full_cohort(per: usize) -> Vec<CohortRow> {
        let mut rows = Vec::new();
        let mut id = 0;
        for esi in 1..=5 {
            for cat in ComplaintCategory::ALL {
                for _ in 0..per {
                    rows.push(row(id, esi, cat.keywords()[0]));
                    id += 1;
                }
            }
        }
        rows
    }

    #[test]
    fn one_per_stratum_gives_forty() {
        let s = stratified_sample(&full_cohort(3), 1, 7).unwrap();
        assert_eq!(s.rows.len(), 40);
        assert!(s.manifest.empty_strata.is_empty());
        assert!(s.manifest.duplicate_stay_ids.is_empty());
    }

    #[test]
    fn deterministic_and_order_independent() {
        let rows = full_cohort(5);
        let a = stratified_sample(&rows, 2, 11).unwrap();
        let b = stratified_sample(&rows, 2, 11).unwrap();
        assert_eq!(
            serde_json::to_string(&a.rows).unwrap(),
            serde_json::to_string(&b.rows).unwrap()
        );
        let mut reversed = rows.clone();
        reversed.reverse();
        let c = stratified_sample(&reversed, 2, 11).unwrap();
        assert_eq!(a.rows, c.rows);
        let d = stratified_sample(&rows, 2, 12).unwrap();
        assert_ne!(a.rows, d.rows);
    }

    #[test]
    fn small_and_empty_strata() {
        let rows = vec![row(1, 3, "cough"), row(2, 3, "cough")];
        let s = stratified_sample(&rows, 5, 1).unwrap();
        assert_eq!(s.rows.len(), 2);
        assert_eq!(s.manifest.empty_strata.len(), 39);
        assert!(stratified_sample(&rows, 0, 1).is_err());
    }

    #[test]
    fn multi_label_flags_duplicates() {
        let rows = vec![row(1, 2, "chest pain and SOB")];
        let s = stratified_sample_with(&rows, 1, 3, SampleOptions { multi_label: true }).unwrap();
        assert_eq!(s.rows.len(), 2);
        assert!(s.rows.iter().all(|r| r.duplicate));
        assert_eq!(s.manifest.duplicate_stay_ids, vec!["000001".to_string()]);
        assert_eq!(s.manifest.unique_visits, 1);
        let cats: Vec<_> = s.rows.iter().map(|r| r.stratum.category).collect();
        assert_eq!(
            cats,
            vec![ComplaintCategory::ChestPain, ComplaintCategory::Respiratory]
        );
    }
}
