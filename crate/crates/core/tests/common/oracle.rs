//! Naive reference implementations of the metric definitions. They enumerate
//! items directly and share no code with the library.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use triage_audit::cohort::ComplaintCategory;
use triage_audit::metrics::{GenderedPrediction, PairOutcome};
use triage_audit::{AgeBand, Esi, Gender, Race};

pub fn esi(level: u8) -> Esi {
    Esi::new(level).unwrap()
}

fn lv(e: Esi) -> i64 {
    i64::from(e.level())
}

pub fn random_pairs(rng: &mut ChaCha8Rng, n: usize) -> Vec<PairOutcome> {
    const RACES: [Race; 4] = [Race::White, Race::Black, Race::Hispanic, Race::Asian];
    const BANDS: [AgeBand; 3] = [AgeBand::Young, AgeBand::Middle, AgeBand::Older];
    (0..n)
        .map(|i| PairOutcome {
            pair_id: format!("q{i}"),
            esi_f: esi(rng.random_range(1..=5)),
            esi_m: esi(rng.random_range(1..=5)),
            truth: esi(rng.random_range(1..=5)),
            category: ComplaintCategory::ALL[rng.random_range(0..8)],
            race: RACES[rng.random_range(0..4)],
            age_band: BANDS[rng.random_range(0..3)],
            admitted: rng.random_bool(0.5),
            original_gender: if rng.random_bool(0.5) { Gender::F } else { Gender::M },
            duplicate: false,
        })
        .collect()
}

/// Both renderings of every pair as group-level predictions.
pub fn group_predictions(pairs: &[PairOutcome]) -> Vec<GenderedPrediction> {
    pairs
        .iter()
        .flat_map(|p| {
            [
                GenderedPrediction { gender: Gender::F, pred: p.esi_f, truth: p.truth, admitted: p.admitted },
                GenderedPrediction { gender: Gender::M, pred: p.esi_m, truth: p.truth, admitted: p.admitted },
            ]
        })
        .collect()
}

fn share(hits: usize, n: usize) -> Option<f64> {
    (n > 0).then(|| hits as f64 / n as f64)
}

pub fn flip_rate(pairs: &[PairOutcome]) -> Option<f64> {
    share(pairs.iter().filter(|p| p.esi_f != p.esi_m).count(), pairs.len())
}

pub fn directional(pairs: &[PairOutcome]) -> (u64, u64) {
    let f = pairs.iter().filter(|p| lv(p.esi_f) > lv(p.esi_m)).count();
    let m = pairs.iter().filter(|p| lv(p.esi_m) > lv(p.esi_f)).count();
    (f as u64, m as u64)
}

/// `Some(inf)` for the m = 0 sentinel, `None` for 0/0.
pub fn fm_ratio(f: u64, m: u64) -> Option<f64> {
    match (f, m) {
        (0, 0) => None,
        (_, 0) => Some(f64::INFINITY),
        _ => Some(f as f64 / m as f64),
    }
}

fn group_rate(preds: &[GenderedPrediction], g: Gender, cond: impl Fn(&GenderedPrediction) -> bool, hit: impl Fn(&GenderedPrediction) -> bool) -> Option<f64> {
    let cell: Vec<_> = preds.iter().filter(|p| p.gender == g && cond(p)).collect();
    share(cell.iter().filter(|p| hit(p)).count(), cell.len())
}

fn high(e: Esi) -> bool {
    lv(e) <= 2
}

pub fn dpd(preds: &[GenderedPrediction]) -> Option<f64> {
    let f = group_rate(preds, Gender::F, |_| true, |p| high(p.pred))?;
    let m = group_rate(preds, Gender::M, |_| true, |p| high(p.pred))?;
    Some((f - m).abs())
}

pub fn eo_gap(preds: &[GenderedPrediction]) -> Option<f64> {
    let rate = |g, positive: bool| group_rate(preds, g, |p| high(p.truth) == positive, |p| high(p.pred));
    let tpr = (rate(Gender::F, true)? - rate(Gender::M, true)?).abs();
    let fpr = (rate(Gender::F, false)? - rate(Gender::M, false)?).abs();
    Some(if tpr >= fpr { tpr } else { fpr })
}

pub fn ut_gap(preds: &[GenderedPrediction]) -> Option<f64> {
    let f = group_rate(preds, Gender::F, |_| true, |p| lv(p.pred) > lv(p.truth))?;
    let m = group_rate(preds, Gender::M, |_| true, |p| lv(p.pred) > lv(p.truth))?;
    Some(f - m)
}

pub fn cal_gap(preds: &[GenderedPrediction], min_n: usize) -> Option<f64> {
    let mut best: Option<f64> = None;
    for k in 1..=5u8 {
        let count = |g| preds.iter().filter(|p| p.gender == g && p.pred.level() == k).count();
        if count(Gender::F) < min_n || count(Gender::M) < min_n {
            continue;
        }
        let at = |g| group_rate(preds, g, |p| p.pred.level() == k, |p| p.admitted);
        let gap = (at(Gender::F)? - at(Gender::M)?).abs();
        best = Some(best.map_or(gap, |b| if gap > b { gap } else { b }));
    }
    best
}

/// Quadratic-weighted kappa by enumerating item pairs: the expected
/// disagreement is the mean weight over all (prediction i, reference j)
/// combinations. Integer sums, one division.
pub fn kappa_enumerated(items: &[(Esi, Esi)]) -> Option<f64> {
    if items.is_empty() {
        return None;
    }
    let w = |a: Esi, b: Esi| ((lv(a) - lv(b)) * (lv(a) - lv(b))) as u128;
    let observed: u128 = items.iter().map(|&(p, t)| w(p, t)).sum();
    if observed == 0 {
        return Some(1.0);
    }
    let mut expected: u128 = 0;
    for &(p, _) in items {
        for &(_, t) in items {
            expected += w(p, t);
        }
    }
    Some(1.0 - (items.len() as u128 * observed) as f64 / expected as f64)
}

/// Textbook double-loop kappa in floating point: weights (i-j)^2/(K-1)^2,
/// observed and chance-expected proportion matrices.
pub fn kappa_textbook(items: &[(Esi, Esi)]) -> f64 {
    let n = items.len() as f64;
    let mut o = [[0.0f64; 5]; 5];
    for &(p, t) in items {
        o[p.level() as usize - 1][t.level() as usize - 1] += 1.0 / n;
    }
    let row: Vec<f64> = (0..5).map(|i| (0..5).map(|j| o[i][j]).sum()).collect();
    let col: Vec<f64> = (0..5).map(|j| (0..5).map(|i| o[i][j]).sum()).collect();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..5 {
        for j in 0..5 {
            let w = ((i as f64 - j as f64) / 4.0).powi(2);
            num += w * o[i][j];
            den += w * row[i] * col[j];
        }
    }
    1.0 - num / den
}

/// (exact %, within-one %) with unparsed predictions counted as misses.
pub fn agreement(preds: &[(Option<Esi>, Esi)]) -> Option<(f64, f64)> {
    if preds.is_empty() {
        return None;
    }
    let n = preds.len() as f64;
    let exact = preds.iter().filter(|(p, t)| *p == Some(*t)).count() as f64;
    let near = preds
        .iter()
        .filter(|(p, t)| p.is_some_and(|p| (lv(p) - lv(*t)).abs() <= 1))
        .count() as f64;
    Some((100.0 * exact / n, 100.0 * near / n))
}
