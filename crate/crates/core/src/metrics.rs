//! Accuracy and fairness metrics over joined pair outcomes.
//!
//! Every metric is accumulated as integer counts and turned into a float by a
//! single final division, so results do not depend on input order.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cohort::ComplaintCategory;
use crate::domain::{AgeBand, Esi, Gender, Race};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("{0} is undefined on empty input")]
    Empty(&'static str),
    #[error("no evaluated vignettes for gender {0}")]
    EmptyGroup(Gender),
    #[error("equalized-odds cell {0} is empty")]
    EmptyCell(String),
    #[error("no predicted level has at least {0} vignettes of each gender")]
    NoQualifyingLevel(usize),
}

pub type MetricResult<T> = Result<T, MetricError>;

/// Predictions for the female and male renderings of one clinical case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub pair_id: String,
    pub esi_f: Esi,
    pub esi_m: Esi,
    pub truth: Esi,
    pub category: ComplaintCategory,
    pub race: Race,
    pub age_band: AgeBand,
    pub admitted: bool,
    pub original_gender: Gender,
    #[serde(default)]
    pub duplicate: bool,
}

impl PairOutcome {
    pub fn flipped(&self) -> bool {
        self.esi_f != self.esi_m
    }

    /// The result with gender labels exchanged.
    pub fn relabeled(&self) -> PairOutcome {
        PairOutcome {
            esi_f: self.esi_m,
            esi_m: self.esi_f,
            original_gender: self.original_gender.opposite(),
            ..self.clone()
        }
    }
}

/// One evaluated vignette, grouped by its rendered gender.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenderedPrediction {
    pub gender: Gender,
    pub pred: Esi,
    pub truth: Esi,
    pub admitted: bool,
}

pub fn flip_rate(pairs: &[PairOutcome]) -> MetricResult<f64> {
    if pairs.is_empty() {
        return Err(MetricError::Empty("flip rate"));
    }
    let flips = pairs.iter().filter(|p| p.flipped()).count();
    Ok(flips as f64 / pairs.len() as f64)
}

/// (female undertriaged, male undertriaged). Undertriage means the higher,
/// less urgent ESI number.
pub fn directional_counts(pairs: &[PairOutcome]) -> (u64, u64) {
    pairs.iter().fold((0, 0), |(f, m), p| {
        if p.esi_f > p.esi_m {
            (f + 1, m)
        } else if p.esi_m > p.esi_f {
            (f, m + 1)
        } else {
            (f, m)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FmRatio {
    Finite { value: f64 },
    /// Female-direction flips with no male-direction flips.
    Infinite { f_ut: u64, m_ut: u64 },
    /// No directional flips at all.
    Undefined,
}

impl FmRatio {
    pub fn value(self) -> Option<f64> {
        match self {
            FmRatio::Finite { value } => Some(value),
            FmRatio::Infinite { .. } => Some(f64::INFINITY),
            FmRatio::Undefined => None,
        }
    }
}

impl fmt::Display for FmRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FmRatio::Finite { value } => write!(f, "{value:.2}"),
            FmRatio::Infinite { f_ut, m_ut } => write!(f, "inf ({f_ut}/{m_ut})"),
            FmRatio::Undefined => f.write_str("undefined"),
        }
    }
}

pub fn fm_ratio(f_ut: u64, m_ut: u64) -> FmRatio {
    match (f_ut, m_ut) {
        (0, 0) => FmRatio::Undefined,
        (f, 0) => FmRatio::Infinite { f_ut: f, m_ut: 0 },
        (f, m) => FmRatio::Finite { value: f as f64 / m as f64 },
    }
}

/// Ratio with 0.5 added to both counts; always finite and positive.
pub fn fm_ratio_haldane(f_ut: u64, m_ut: u64) -> f64 {
    (f_ut as f64 + 0.5) / (m_ut as f64 + 0.5)
}

#[derive(Default, Clone, Copy)]
struct Rate {
    hits: u64,
    n: u64,
}

impl Rate {
    fn add(&mut self, hit: bool) {
        self.n += 1;
        self.hits += u64::from(hit);
    }

    fn value(self) -> Option<f64> {
        (self.n > 0).then(|| self.hits as f64 / self.n as f64)
    }
}

fn gender_slot(g: Gender) -> usize {
    match g {
        Gender::F => 0,
        Gender::M => 1,
    }
}

fn by_gender(preds: &[GenderedPrediction], mut hit: impl FnMut(&GenderedPrediction) -> bool) -> MetricResult<[f64; 2]> {
    let mut rates = [Rate::default(); 2];
    for p in preds {
        rates[gender_slot(p.gender)].add(hit(p));
    }
    Ok([
        rates[0].value().ok_or(MetricError::EmptyGroup(Gender::F))?,
        rates[1].value().ok_or(MetricError::EmptyGroup(Gender::M))?,
    ])
}

/// |P(high acuity | F) - P(high acuity | M)|.
pub fn dpd(preds: &[GenderedPrediction]) -> MetricResult<f64> {
    let [f, m] = by_gender(preds, |p| p.pred.is_high_acuity())?;
    Ok((f - m).abs())
}

/// Largest gender gap in true-positive or false-positive rate, where the
/// positive class is a high-acuity reference level.
pub fn eo_gap(preds: &[GenderedPrediction]) -> MetricResult<f64> {
    // [gender][positive?]
    let mut cells = [[Rate::default(); 2]; 2];
    for p in preds {
        cells[gender_slot(p.gender)][usize::from(p.truth.is_high_acuity())].add(p.pred.is_high_acuity());
    }
    let get = |g: Gender, positive: bool| {
        cells[gender_slot(g)][usize::from(positive)].value().ok_or_else(|| {
            MetricError::EmptyCell(format!("{}_{g}", if positive { "TPR" } else { "FPR" }))
        })
    };
    let tpr = (get(Gender::F, true)? - get(Gender::M, true)?).abs();
    let fpr = (get(Gender::F, false)? - get(Gender::M, false)?).abs();
    Ok(tpr.max(fpr))
}

/// UT_F - UT_M, where UT is the share of vignettes predicted less urgent than
/// the reference. Positive values mean women are undertriaged more often.
pub fn undertriage_gap(preds: &[GenderedPrediction]) -> MetricResult<f64> {
    let [f, m] = by_gender(preds, |p| p.pred > p.truth)?;
    Ok(f - m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub level: Esi,
    pub n_f: u64,
    pub admitted_f: u64,
    pub n_m: u64,
    pub admitted_m: u64,
    pub rate_f: Option<f64>,
    pub rate_m: Option<f64>,
    /// Both genders reach the minimum count at this level.
    pub qualifies: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable {
    pub min_n: usize,
    pub rows: Vec<CalibrationRow>,
    pub gap: Option<f64>,
}

pub const CALIBRATION_MIN_N: usize = 50;

/// Admission rate by predicted level and gender, and the largest gender gap
/// among levels with at least `min_n` vignettes of each gender.
pub fn calibration_table(preds: &[GenderedPrediction], min_n: usize) -> CalibrationTable {
    let mut counts = [[Rate::default(); 2]; 5];
    for p in preds {
        counts[p.pred.index()][gender_slot(p.gender)].add(p.admitted);
    }
    let rows: Vec<CalibrationRow> = Esi::ALL
        .iter()
        .map(|&level| {
            let [f, m] = counts[level.index()];
            CalibrationRow {
                level,
                n_f: f.n,
                admitted_f: f.hits,
                n_m: m.n,
                admitted_m: m.hits,
                rate_f: f.value(),
                rate_m: m.value(),
                qualifies: f.n >= min_n as u64 && m.n >= min_n as u64,
            }
        })
        .collect();
    let gap = rows
        .iter()
        .filter(|r| r.qualifies)
        .filter_map(|r| Some((r.rate_f? - r.rate_m?).abs()))
        .reduce(f64::max);
    CalibrationTable { min_n, rows, gap }
}

pub fn calibration_gap(preds: &[GenderedPrediction], min_n: usize) -> MetricResult<f64> {
    calibration_table(preds, min_n)
        .gap
        .ok_or(MetricError::NoQualifyingLevel(min_n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    /// Evaluated vignettes, including parse failures.
    pub n: u64,
    pub failures: u64,
    pub exact: u64,
    pub within1: u64,
    pub exact_pct: f64,
    pub within1_pct: f64,
    /// Quadratic-weighted kappa over parsed predictions only.
    pub kappa_w: Option<f64>,
}

/// Quadratic-weighted Cohen's kappa for (prediction, reference) pairs.
///
/// Returns 1 when every prediction equals its reference, including the case
/// where both marginals sit on a single level.
pub fn kappa_w(pairs: &[(Esi, Esi)]) -> MetricResult<f64> {
    if pairs.is_empty() {
        return Err(MetricError::Empty("weighted kappa"));
    }
    let mut observed = [[0u64; 5]; 5];
    let mut rows = [0u64; 5];
    let mut cols = [0u64; 5];
    for &(p, t) in pairs {
        observed[p.index()][t.index()] += 1;
        rows[p.index()] += 1;
        cols[t.index()] += 1;
    }
    let n = pairs.len() as u128;
    let mut num: u128 = 0;
    let mut den: u128 = 0;
    for i in 0..5 {
        for j in 0..5 {
            let d2 = ((i as i64 - j as i64).pow(2)) as u128;
            num += d2 * u128::from(observed[i][j]);
            den += d2 * u128::from(rows[i]) * u128::from(cols[j]);
        }
    }
    if num == 0 {
        return Ok(1.0);
    }
    Ok(1.0 - (n * num) as f64 / den as f64)
}

/// Exact and within-one agreement (parse failures count against both) and
/// weighted kappa over parsed predictions.
pub fn accuracy(preds: &[(Option<Esi>, Esi)]) -> MetricResult<Accuracy> {
    if preds.is_empty() {
        return Err(MetricError::Empty("accuracy"));
    }
    let parsed: Vec<(Esi, Esi)> = preds.iter().filter_map(|&(p, t)| Some((p?, t))).collect();
    let exact = parsed.iter().filter(|(p, t)| p == t).count() as u64;
    let within1 = parsed
        .iter()
        .filter(|(p, t)| p.level().abs_diff(t.level()) <= 1)
        .count() as u64;
    let n = preds.len() as u64;
    Ok(Accuracy {
        n,
        failures: n - parsed.len() as u64,
        exact,
        within1,
        exact_pct: 100.0 * exact as f64 / n as f64,
        within1_pct: 100.0 * within1 as f64 / n as f64,
        kappa_w: kappa_w(&parsed).ok(),
    })
}

/// Female-undertriage events per 1,000 female pairs within one category.
pub fn per1000_rate(f_ut: u64, n_female_pairs: u64) -> Option<f64> {
    (n_female_pairs > 0).then(|| 1000.0 * f_ut as f64 / n_female_pairs as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricKind {
    Dpd,
    EoGap,
    FlipRate,
    UtGap,
    CalGap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Acceptable,
    Noise,
    Concerning,
    BetweenBands,
    Unacceptable,
    Systematic,
    /// Above the highest defined band for a metric with no upper band.
    AboveBands,
}

impl Band {
    pub fn label(self) -> &'static str {
        match self {
            Band::Acceptable => "acceptable",
            Band::Noise => "noise",
            Band::Concerning => "concerning",
            Band::BetweenBands => "between bands",
            Band::Unacceptable => "unacceptable",
            Band::Systematic => "systematic",
            Band::AboveBands => "above defined bands",
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Places a metric value in its pre-registered threshold band. The
/// undertriage gap is judged on its magnitude.
pub fn threshold_classify(kind: MetricKind, value: f64) -> Band {
    match kind {
        MetricKind::Dpd => match value {
            v if v < 0.05 => Band::Acceptable,
            v if v <= 0.10 => Band::Concerning,
            v if v <= 0.20 => Band::BetweenBands,
            _ => Band::Unacceptable,
        },
        MetricKind::FlipRate => match value {
            v if v < 0.05 => Band::Noise,
            v if v <= 0.15 => Band::Concerning,
            _ => Band::Systematic,
        },
        MetricKind::EoGap => match value {
            v if v < 0.05 => Band::Acceptable,
            v if v <= 0.10 => Band::Concerning,
            _ => Band::AboveBands,
        },
        MetricKind::UtGap => match value.abs() {
            v if v < 0.03 => Band::Acceptable,
            v if v <= 0.08 => Band::Concerning,
            _ => Band::AboveBands,
        },
        MetricKind::CalGap => {
            if value < 0.03 {
                Band::Acceptable
            } else {
                Band::AboveBands
            }
        }
    }
}

/// Strata with fewer pairs than this are flagged as too small to report.
pub const MIN_STRATUM_PAIRS: u64 = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub n_pairs: u64,
    pub flips: u64,
    pub f_ut: u64,
    pub m_ut: u64,
    pub flip_rate: Option<f64>,
    pub fm_ratio: FmRatio,
    pub small: bool,
}

pub fn pair_summary(pairs: &[PairOutcome]) -> PairSummary {
    let (f_ut, m_ut) = directional_counts(pairs);
    let n_pairs = pairs.len() as u64;
    PairSummary {
        n_pairs,
        flips: f_ut + m_ut,
        f_ut,
        m_ut,
        flip_rate: flip_rate(pairs).ok(),
        fm_ratio: fm_ratio(f_ut, m_ut),
        small: n_pairs < MIN_STRATUM_PAIRS,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StratifyBy {
    Category,
    Race,
    AgeBand,
    TruthEsi,
}

impl StratifyBy {
    pub const ALL: [StratifyBy; 4] = [
        StratifyBy::Category,
        StratifyBy::Race,
        StratifyBy::AgeBand,
        StratifyBy::TruthEsi,
    ];

    pub fn key(self, p: &PairOutcome) -> String {
        match self {
            StratifyBy::Category => p.category.label().to_string(),
            StratifyBy::Race => p.race.as_str().to_string(),
            StratifyBy::AgeBand => p.age_band.label().to_string(),
            StratifyBy::TruthEsi => format!("ESI {}", p.truth),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            StratifyBy::Category => "category",
            StratifyBy::Race => "race",
            StratifyBy::AgeBand => "age_band",
            StratifyBy::TruthEsi => "truth_esi",
        }
    }
}

pub fn stratify(pairs: &[PairOutcome], by: StratifyBy) -> BTreeMap<String, PairSummary> {
    let mut groups: BTreeMap<String, Vec<PairOutcome>> = BTreeMap::new();
    for p in pairs {
        groups.entry(by.key(p)).or_default().push(p.clone());
    }
    groups.into_iter().map(|(k, v)| (k, pair_summary(&v))).collect()
}

/// Which vignettes feed the group-level metrics (DPD, EO gap, UT gap,
/// calibration).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Population {
    #[default]
    AllVignettes,
    OriginalsOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n_pairs: u64,
    /// Pairs dropped because either side failed to parse.
    pub n_excluded: u64,
    pub accuracy: Option<Accuracy>,
    pub pairs: PairSummary,
    pub population: Population,
    pub dpd: Option<f64>,
    pub eo_gap: Option<f64>,
    pub ut_gap: Option<f64>,
    pub cal_gap: Option<f64>,
    pub calibration: CalibrationTable,
    pub strata: BTreeMap<StratifyBy, BTreeMap<String, PairSummary>>,
    /// Female-undertriage events per 1,000 female pairs, by category.
    pub per1000_by_category: BTreeMap<String, Option<f64>>,
}

impl MetricReport {
    /// `accuracy_inputs` holds one (prediction, reference) entry per evaluated
    /// vignette; `group_preds` the parsed vignettes of the chosen population.
    pub fn compute(
        pairs: &[PairOutcome],
        n_excluded: u64,
        accuracy_inputs: &[(Option<Esi>, Esi)],
        group_preds: &[GenderedPrediction],
        population: Population,
    ) -> MetricReport {
        let strata: BTreeMap<_, _> = StratifyBy::ALL
            .iter()
            .map(|&by| (by, stratify(pairs, by)))
            .collect();
        let per1000_by_category = strata[&StratifyBy::Category]
            .iter()
            .map(|(k, s)| (k.clone(), per1000_rate(s.f_ut, s.n_pairs)))
            .collect();
        let calibration = calibration_table(group_preds, CALIBRATION_MIN_N);
        MetricReport {
            n_pairs: pairs.len() as u64,
            n_excluded,
            accuracy: accuracy(accuracy_inputs).ok(),
            pairs: pair_summary(pairs),
            population,
            dpd: dpd(group_preds).ok(),
            eo_gap: eo_gap(group_preds).ok(),
            ut_gap: undertriage_gap(group_preds).ok(),
            cal_gap: calibration.gap,
            calibration,
            strata,
            per1000_by_category,
        }
    }

    pub fn band(&self, kind: MetricKind) -> Option<Band> {
        let v = match kind {
            MetricKind::Dpd => self.dpd,
            MetricKind::EoGap => self.eo_gap,
            MetricKind::FlipRate => self.pairs.flip_rate,
            MetricKind::UtGap => self.ut_gap,
            MetricKind::CalGap => self.cal_gap,
        }?;
        Some(threshold_classify(kind, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(l: u8) -> Esi {
        Esi::new(l).unwrap()
    }

    pub(crate) fn pair(f: u8, m: u8, t: u8) -> PairOutcome {
        PairOutcome {
            pair_id: format!("p{f}{m}{t}"),
            esi_f: e(f),
            esi_m: e(m),
            truth: e(t),
            category: ComplaintCategory::ChestPain,
            race: Race::White,
            age_band: AgeBand::Middle,
            admitted: false,
            original_gender: Gender::F,
            duplicate: false,
        }
    }

    fn gp(g: Gender, pred: u8, truth: u8) -> GenderedPrediction {
        GenderedPrediction { gender: g, pred: e(pred), truth: e(truth), admitted: false }
    }

    #[test]
    fn flip_rate_cases() {
        assert_eq!(flip_rate(&[pair(2, 2, 2), pair(3, 3, 3)]).unwrap(), 0.0);
        assert_eq!(flip_rate(&[pair(2, 2, 2), pair(3, 2, 3), pair(1, 1, 1)]).unwrap(), 1.0 / 3.0);
        assert!(flip_rate(&[]).is_err());
        assert_eq!(threshold_classify(MetricKind::FlipRate, 0.117), Band::Concerning);
        assert_eq!(threshold_classify(MetricKind::FlipRate, 0.438), Band::Systematic);
    }

    #[test]
    fn directional_and_ratio() {
        assert_eq!(directional_counts(&[pair(3, 2, 2)]), (1, 0));
        assert_eq!(directional_counts(&[pair(2, 2, 2)]), (0, 0));
        let mut ps: Vec<_> = (0..6).map(|_| pair(3, 2, 2)).collect();
        ps.extend((0..3).map(|_| pair(2, 4, 2)));
        assert_eq!(directional_counts(&ps), (6, 3));
        assert_eq!(fm_ratio(6, 3), FmRatio::Finite { value: 2.0 });
        for k in 1..20 {
            assert_eq!(fm_ratio(k, k).value(), Some(1.0));
        }
        assert_eq!(fm_ratio(4, 0), FmRatio::Infinite { f_ut: 4, m_ut: 0 });
        assert_eq!(fm_ratio(0, 0), FmRatio::Undefined);
        assert_eq!(fm_ratio_haldane(0, 0), 1.0);
    }

    #[test]
    fn dpd_cases() {
        let mut v = vec![gp(Gender::F, 1, 1), gp(Gender::F, 2, 1), gp(Gender::F, 3, 1)];
        v.extend([gp(Gender::M, 2, 1), gp(Gender::M, 3, 1), gp(Gender::M, 4, 1)]);
        assert!((dpd(&v).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(dpd(&v[..3]), Err(MetricError::EmptyGroup(Gender::M)));
        assert_eq!(threshold_classify(MetricKind::Dpd, 0.021), Band::Acceptable);
        assert_eq!(threshold_classify(MetricKind::Dpd, 0.0), Band::Acceptable);
        assert_eq!(threshold_classify(MetricKind::Dpd, 0.15), Band::BetweenBands);
        assert_eq!(threshold_classify(MetricKind::Dpd, 0.25), Band::Unacceptable);
    }

    #[test]
    fn eo_hand_case() {
        let v = vec![
            gp(Gender::F, 1, 1),
            gp(Gender::F, 3, 1),
            gp(Gender::F, 3, 3),
            gp(Gender::M, 2, 1),
            gp(Gender::M, 2, 3),
            gp(Gender::M, 4, 3),
        ];
        assert_eq!(eo_gap(&v).unwrap(), 0.5);
        assert!(matches!(eo_gap(&v[..2]), Err(MetricError::EmptyCell(_))));
        assert_eq!(threshold_classify(MetricKind::EoGap, 0.04), Band::Acceptable);
    }

    #[test]
    fn ut_gap_cases() {
        let mut v = vec![gp(Gender::F, 3, 2), gp(Gender::F, 4, 2), gp(Gender::F, 2, 2), gp(Gender::F, 1, 2)];
        v.extend([gp(Gender::M, 3, 2), gp(Gender::M, 2, 2), gp(Gender::M, 2, 2), gp(Gender::M, 1, 2)]);
        assert_eq!(undertriage_gap(&v).unwrap(), 0.25);
        assert_eq!(threshold_classify(MetricKind::UtGap, 0.02), Band::Acceptable);
        assert_eq!(threshold_classify(MetricKind::UtGap, 0.05), Band::Concerning);
        assert_eq!(threshold_classify(MetricKind::UtGap, -0.05), Band::Concerning);
    }

    #[test]
    fn calibration_cases() {
        let mut v = Vec::new();
        let mut push = |g, level, n: usize, admitted: usize| {
            for i in 0..n {
                v.push(GenderedPrediction { gender: g, pred: e(level), truth: e(level), admitted: i < admitted });
            }
        };
        push(Gender::F, 2, 100, 80);
        push(Gender::M, 2, 100, 80);
        push(Gender::F, 4, 100, 20);
        push(Gender::M, 4, 100, 30);
        push(Gender::F, 5, 49, 0);
        push(Gender::M, 5, 60, 60);
        let t = calibration_table(&v, 50);
        assert!((t.gap.unwrap() - 0.1).abs() < 1e-12);
        assert!(!t.rows[4].qualifies);
        assert_eq!(calibration_gap(&v[..10], 50), Err(MetricError::NoQualifyingLevel(50)));
    }

    #[test]
    fn kappa_cases() {
        let perfect: Vec<_> = (1..=5).map(|l| (e(l), e(l))).collect();
        assert_eq!(kappa_w(&perfect).unwrap(), 1.0);
        let constant: Vec<_> = (1..=5).map(|l| (e(2), e(l))).collect();
        assert_eq!(kappa_w(&constant).unwrap(), 0.0);
        let a = accuracy(&[(Some(e(2)), e(2)), (Some(e(3)), e(2)), (None, e(4)), (Some(e(5)), e(2))]).unwrap();
        assert_eq!((a.exact, a.within1, a.failures), (1, 2, 1));
        assert_eq!(a.exact_pct, 25.0);
        assert_eq!(a.within1_pct, 50.0);
    }

    #[test]
    fn per1000_cases() {
        assert_eq!(per1000_rate(0, 10), Some(0.0));
        assert_eq!(per1000_rate(13, 650), Some(20.0));
        assert_eq!(per1000_rate(1, 0), None);
    }

    #[test]
    fn stratify_partitions() {
        let mut a = pair(3, 2, 2);
        a.race = Race::Black;
        let ps = vec![a, pair(2, 3, 2), pair(2, 2, 2)];
        let s = stratify(&ps, StratifyBy::Race);
        assert_eq!(s.len(), 2);
        let total: u64 = s.values().map(|x| x.n_pairs).sum();
        assert_eq!(total, 3);
        assert_eq!(s["Black"].f_ut + s["White"].f_ut, 1);
        assert!(s["Black"].small);
        let one = stratify(&ps[1..], StratifyBy::Race);
        assert_eq!(one["White"], pair_summary(&ps[1..]));
    }
}
