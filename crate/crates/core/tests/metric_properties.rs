mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::oracle::{self, esi};
use triage_audit::metrics::{
    dpd, eo_gap, flip_rate, fm_ratio, kappa_w, pair_summary, stratify, undertriage_gap, FmRatio, MetricReport,
    PairOutcome, Population, StratifyBy,
};

fn pairs_strategy(max: usize) -> impl Strategy<Value = Vec<PairOutcome>> {
    (1..=max, any::<u64>()).prop_map(|(n, seed)| oracle::random_pairs(&mut ChaCha8Rng::seed_from_u64(seed), n))
}

fn report(pairs: &[PairOutcome]) -> MetricReport {
    let group = oracle::group_predictions(pairs);
    let acc: Vec<_> = group.iter().map(|g| (Some(g.pred), g.truth)).collect();
    MetricReport::compute(pairs, 0, &acc, &group, Population::AllVignettes)
}

proptest! {
    #[test]
    fn strata_partition_the_pairs(pairs in pairs_strategy(80)) {
        let global = pair_summary(&pairs);
        for by in StratifyBy::ALL {
            let strata = stratify(&pairs, by);
            let sum = strata.values().fold((0, 0, 0, 0), |a, s| {
                (a.0 + s.n_pairs, a.1 + s.flips, a.2 + s.f_ut, a.3 + s.m_ut)
            });
            prop_assert_eq!(sum, (global.n_pairs, global.flips, global.f_ut, global.m_ut));
        }
    }

    #[test]
    fn metrics_ignore_pair_order(pairs in pairs_strategy(40), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(report(&pairs), report(&shuffled));
    }

    #[test]
    fn relabeling_genders_inverts_direction(pairs in pairs_strategy(40)) {
        let swapped: Vec<_> = pairs.iter().map(PairOutcome::relabeled).collect();
        prop_assert_eq!(flip_rate(&pairs).unwrap(), flip_rate(&swapped).unwrap());
        let (a, b) = (pair_summary(&pairs), pair_summary(&swapped));
        prop_assert_eq!((a.f_ut, a.m_ut), (b.m_ut, b.f_ut));
        match (a.fm_ratio, b.fm_ratio) {
            (FmRatio::Finite { value: x }, FmRatio::Finite { value: y }) if x > 0.0 => {
                prop_assert!((x * y - 1.0).abs() < 1e-12)
            }
            (FmRatio::Finite { value }, FmRatio::Infinite { .. }) | (FmRatio::Infinite { .. }, FmRatio::Finite { value }) => {
                prop_assert_eq!(value, 0.0)
            }
            (FmRatio::Undefined, FmRatio::Undefined) => {}
            other => prop_assert!(false, "unexpected ratio pair {:?}", other),
        }
        let (g, gs) = (oracle::group_predictions(&pairs), oracle::group_predictions(&swapped));
        prop_assert_eq!(undertriage_gap(&g).unwrap(), -undertriage_gap(&gs).unwrap());
        prop_assert_eq!(dpd(&g).unwrap(), dpd(&gs).unwrap());
        prop_assert_eq!(eo_gap(&g).ok(), eo_gap(&gs).ok());
    }

    #[test]
    fn small_inputs_match_enumeration(pairs in pairs_strategy(8)) {
        let group = oracle::group_predictions(&pairs);
        prop_assert_eq!(flip_rate(&pairs).ok(), oracle::flip_rate(&pairs));
        let (f, m) = oracle::directional(&pairs);
        prop_assert_eq!(fm_ratio(f, m).value(), oracle::fm_ratio(f, m));
        prop_assert_eq!(dpd(&group).ok(), oracle::dpd(&group));
        prop_assert_eq!(eo_gap(&group).ok(), oracle::eo_gap(&group));
        prop_assert_eq!(undertriage_gap(&group).ok(), oracle::ut_gap(&group));
        let items: Vec<_> = group.iter().map(|g| (g.pred, g.truth)).collect();
        prop_assert_eq!(kappa_w(&items).ok(), oracle::kappa_enumerated(&items));
    }

    #[test]
    fn kappa_bounds(levels in prop::collection::vec((1u8..=5, 1u8..=5), 1..120)) {
        let items: Vec<_> = levels.iter().map(|&(p, t)| (esi(p), esi(t))).collect();
        let k = kappa_w(&items).unwrap();
        prop_assert!(k <= 1.0);
        let perfect = items.iter().all(|(p, t)| p == t);
        prop_assert_eq!(k == 1.0, perfect);
        if !perfect && items.iter().all(|(p, _)| *p == items[0].0) {
            prop_assert!(k.abs() <= 1e-12);
        }
    }
}

#[test]
fn single_stratum_matches_unstratified() {
    let mut pairs = oracle::random_pairs(&mut ChaCha8Rng::seed_from_u64(3), 60);
    for p in &mut pairs {
        p.category = triage_audit::cohort::ComplaintCategory::Trauma;
    }
    let strata = stratify(&pairs, StratifyBy::Category);
    assert_eq!(strata.len(), 1);
    assert_eq!(strata.values().next().unwrap(), &pair_summary(&pairs));
}
