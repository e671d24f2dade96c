use std::collections::{BTreeMap, HashMap};
use std::sync::{LazyLock, Mutex};

use async_trait::async_trait;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{BackendError, ChatBackend, DecodeConfig};
use crate::domain::{Esi, Gender, Race};
use crate::hashing::StableHasher;
use crate::strategy::{strategy_for_system_prompt, Message, Role, Strategy};
use crate::text::{rewrite_gendered, PronounTarget};
use crate::vignette::{Vignette, AGE_REFERENCE};

/// Row-stochastic matrix: `rows[truth - 1][pred - 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionKernel {
    pub rows: [[f64; 5]; 5],
}

impl ConfusionKernel {
    pub fn identity() -> ConfusionKernel {
        ConfusionKernel::banded(0.0)
    }

    /// Each neighbouring level gets `p_adjacent`; the rest stays on the diagonal.
    pub fn banded(p_adjacent: f64) -> ConfusionKernel {
        let mut rows = [[0.0; 5]; 5];
        for (i, row) in rows.iter_mut().enumerate() {
            let mut off = 0.0;
            if i > 0 {
                row[i - 1] = p_adjacent;
                off += p_adjacent;
            }
            if i < 4 {
                row[i + 1] = p_adjacent;
                off += p_adjacent;
            }
            row[i] = 1.0 - off;
        }
        ConfusionKernel { rows }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (i, row) in self.rows.iter().enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(format!("confusion row {} has an entry outside [0, 1]", i + 1));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(format!("confusion row {} sums to {sum}", i + 1));
            }
        }
        Ok(())
    }

    fn sample(&self, truth: Esi, u: f64) -> Esi {
        let row = &self.rows[truth.index()];
        let mut acc = 0.0;
        for (j, p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return Esi::ALL[j];
            }
        }
        // Rounding left a sliver above the last cumulative value.
        Esi::ALL[row.iter().rposition(|p| *p > 0.0).unwrap_or(truth.index())]
    }
}

impl Default for ConfusionKernel {
    fn default() -> Self {
        ConfusionKernel::banded(0.15)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StrategyOverride {
    #[serde(default)]
    pub p_flip: Option<f64>,
    #[serde(default)]
    pub fm_skew: Option<f64>,
    #[serde(default)]
    pub noise_rate: Option<f64>,
    #[serde(default)]
    pub degenerate_level: Option<Esi>,
    #[serde(default)]
    pub base_error: Option<ConfusionKernel>,
}

fn default_seed() -> u64 {
    42
}

fn half() -> f64 {
    0.5
}

/// Generative knobs of the deterministic biased-model simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimProfile {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Probability that the two genders of a pair get different levels.
    #[serde(default)]
    pub p_flip: f64,
    /// Probability that a flip undertriages the female rendering.
    #[serde(default = "half")]
    pub fm_skew: f64,
    #[serde(default)]
    pub base_error: ConfusionKernel,
    /// Probability that a repeat of an identical request answers differently.
    #[serde(default)]
    pub noise_rate: f64,
    #[serde(default)]
    pub degenerate_level: Option<Esi>,
    /// Per-race replacement for `fm_skew`.
    #[serde(default)]
    pub race_fm_skew: BTreeMap<Race, f64>,
    #[serde(default)]
    pub strategy_overrides: BTreeMap<Strategy, StrategyOverride>,
}

impl Default for SimProfile {
    fn default() -> Self {
        SimProfile {
            seed: 42,
            p_flip: 0.0,
            fm_skew: 0.5,
            base_error: ConfusionKernel::default(),
            noise_rate: 0.0,
            degenerate_level: None,
            race_fm_skew: BTreeMap::new(),
            strategy_overrides: BTreeMap::new(),
        }
    }
}

/// Skew that yields an expected female/male undertriage ratio of `ratio`.
pub fn skew_for_ratio(ratio: f64) -> f64 {
    ratio / (1.0 + ratio)
}

fn check_prob(name: &str, p: f64) -> Result<(), String> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(format!("{name} = {p} is outside [0, 1]"))
    }
}

impl SimProfile {
    pub fn validate(&self) -> Result<(), String> {
        check_prob("p_flip", self.p_flip)?;
        check_prob("fm_skew", self.fm_skew)?;
        check_prob("noise_rate", self.noise_rate)?;
        self.base_error.validate()?;
        for (race, s) in &self.race_fm_skew {
            check_prob(&format!("fm_skew[{race}]"), *s)?;
        }
        for (st, o) in &self.strategy_overrides {
            for (name, p) in [("p_flip", o.p_flip), ("fm_skew", o.fm_skew), ("noise_rate", o.noise_rate)] {
                if let Some(p) = p {
                    check_prob(&format!("{st}.{name}"), p)?;
                }
            }
            if let Some(k) = &o.base_error {
                k.validate()?;
            }
        }
        Ok(())
    }
}

static HEADER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?m)^Patient: (?:[^\n,]+, )?\d+-year-old (female|male|adult)\s*$").expect("valid regex")
});
static VITAL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"HR (\d+), BP (\d+)/\d+, RR (\d+), SpO2 (\d+)%").expect("valid regex")
});
static PAIN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"Pain level: (\d+)").expect("valid regex"));

/// Hash of a vignette's clinical content. Demographic lines, pronouns and age
/// references do not contribute, so every rendering of one case shares a key.
pub fn clinical_key(user_text: &str) -> u64 {
    let body: Vec<String> = user_text
        .lines()
        .filter(|l| !l.starts_with("Patient:"))
        .map(|l| {
            let neutral = rewrite_gendered(l, PronounTarget::Neutral);
            AGE_REFERENCE.replace_all(&neutral, "").split_whitespace().collect::<Vec<_>>().join(" ")
        })
        .collect();
    let mut h = StableHasher::new("clinical");
    for l in &body {
        h.str(l);
    }
    h.finish()
}

/// Reference level and race for known cases, keyed by [`clinical_key`].
#[derive(Debug, Clone, Default)]
pub struct CaseIndex {
    cases: HashMap<u64, (Esi, Race)>,
}

impl CaseIndex {
    pub fn from_vignettes(vignettes: &[Vignette]) -> CaseIndex {
        let cases = vignettes
            .iter()
            .map(|v| (clinical_key(&v.text), (v.ground_truth_esi, v.race)))
            .collect();
        CaseIndex { cases }
    }

    pub fn get(&self, key: u64) -> Option<(Esi, Race)> {
        self.cases.get(&key).copied()
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }
}

/// Rough acuity from vitals for inputs missing from the case index.
fn vitals_guess(text: &str) -> Esi {
    let level = match VITAL.captures(text) {
        Some(c) => {
            let n = |i: usize| c[i].parse::<f64>().unwrap_or(0.0);
            let (hr, sbp, rr, spo2) = (n(1), n(2), n(3), n(4));
            let pain = PAIN
                .captures(text)
                .and_then(|p| p[1].parse::<u8>().ok())
                .unwrap_or(0);
            if spo2 < 88.0 || sbp < 80.0 || hr > 150.0 {
                1
            } else if spo2 < 92.0 || hr > 120.0 || rr > 28.0 || sbp > 200.0 {
                2
            } else if hr > 100.0 || pain >= 7 {
                3
            } else {
                4
            }
        }
        None => 3,
    };
    Esi::ALL[level - 1]
}

const RATIONALE: [&str; 5] = [
    "immediate life-saving intervention required",
    "high-risk presentation that should not wait",
    "stable but likely to need multiple resources",
    "stable and likely to need one resource",
    "stable with no resources expected",
];

/// In-process stand-in for a chat model with configurable gender bias.
///
/// Every draw is a hash of the profile seed and the request content. The first
/// answer to a given request is canonical; repeats deviate by one level with
/// probability `noise_rate`.
pub struct Simulator {
    profile: SimProfile,
    cases: Option<std::sync::Arc<CaseIndex>>,
    seen: Mutex<HashMap<u64, u32>>,
}

struct Effective<'a> {
    p_flip: f64,
    fm_skew: f64,
    noise_rate: f64,
    degenerate_level: Option<Esi>,
    kernel: &'a ConfusionKernel,
}

impl Simulator {
    pub fn new(profile: SimProfile, cases: Option<std::sync::Arc<CaseIndex>>) -> Simulator {
        Simulator { profile, cases, seen: Mutex::new(HashMap::new()) }
    }

    pub fn profile(&self) -> &SimProfile {
        &self.profile
    }

    fn effective(&self, strategy: Strategy, race: Option<Race>) -> Effective<'_> {
        let p = &self.profile;
        let o = p.strategy_overrides.get(&strategy);
        let race_skew = race.and_then(|r| p.race_fm_skew.get(&r)).copied();
        Effective {
            p_flip: o.and_then(|o| o.p_flip).unwrap_or(p.p_flip),
            fm_skew: o.and_then(|o| o.fm_skew).or(race_skew).unwrap_or(p.fm_skew),
            noise_rate: o.and_then(|o| o.noise_rate).unwrap_or(p.noise_rate),
            degenerate_level: o.and_then(|o| o.degenerate_level).or(p.degenerate_level),
            kernel: o.and_then(|o| o.base_error.as_ref()).unwrap_or(&p.base_error),
        }
    }

    fn draw(&self, tag: &str, key: u64, strategy: Strategy) -> f64 {
        StableHasher::new(tag)
            .u64(self.profile.seed)
            .u64(key)
            .str(strategy.as_str())
            .unit()
    }

    /// Canonical level for a request, before repeat noise.
    fn canonical(&self, strategy: Strategy, gender: Option<Gender>, user: &str) -> Esi {
        let key = clinical_key(user);
        let (truth, race) = match self.cases.as_ref().and_then(|c| c.get(key)) {
            Some((t, r)) => (t, Some(r)),
            None => (vitals_guess(user), None),
        };
        let eff = self.effective(strategy, race);
        if let Some(level) = eff.degenerate_level {
            return level;
        }
        let base = eff.kernel.sample(truth, self.draw("base", key, strategy));
        let Some(gender) = gender else {
            return base;
        };
        if self.draw("flip", key, strategy) >= eff.p_flip {
            return base;
        }
        let female_under = self.draw("direction", key, strategy) < eff.fm_skew;
        // The undertriaged rendering gets the higher number.
        let (hi, lo) = if base.level() < 5 { (base.less_urgent(), base) } else { (base, base.more_urgent()) };
        match (gender, female_under) {
            (Gender::F, true) | (Gender::M, false) => hi,
            _ => lo,
        }
    }

    /// The level and response text for one request.
    pub fn respond(&self, messages: &[Message]) -> (Esi, String) {
        let content = |role| {
            messages
                .iter()
                .find(|m| m.role == role)
                .map_or("", |m| m.content.as_str())
        };
        let (system, user) = (content(Role::System), content(Role::User));
        let gender = HEADER.captures(user).and_then(|c| match &c[1] {
            "female" => Some(Gender::F),
            "male" => Some(Gender::M),
            _ => None,
        });
        let mut strategy = strategy_for_system_prompt(system).unwrap_or(Strategy::Baseline);
        if strategy == Strategy::Baseline && !user.contains("Patient:") {
            strategy = Strategy::Blind;
        }
        let mut level = self.canonical(strategy, gender, user);

        let request_key = StableHasher::new("request").str(system).str(user).finish();
        let replicate = {
            let mut seen = self.seen.lock().expect("replicate table poisoned");
            let n = seen.entry(request_key).or_insert(0);
            let r = *n;
            *n += 1;
            r
        };
        let noise = self.effective(strategy, None).noise_rate;
        if replicate > 0 {
            let h = StableHasher::new("noise")
                .u64(self.profile.seed)
                .u64(request_key)
                .u64(u64::from(replicate))
                .clone();
            if h.unit() < noise {
                let up = h.finish() & 1 == 0;
                level = match level.level() {
                    1 => level.less_urgent(),
                    5 => level.more_urgent(),
                    _ if up => level.less_urgent(),
                    _ => level.more_urgent(),
                };
            }
        }
        let text = if strategy == Strategy::CoT {
            let alt = if level.level() < 5 { level.less_urgent() } else { level.more_urgent() };
            format!(
                "Step 1: The chief complaint was reviewed for acuity.\nStep 2: Vital signs were checked; ESI {alt} was considered.\nStep 3: Expected resource needs were estimated.\nESI Level: {level} — {}",
                RATIONALE[level.index()]
            )
        } else {
            format!("ESI Level: {level} — {}", RATIONALE[level.index()])
        };
        (level, text)
    }
}

#[async_trait]
impl ChatBackend for Simulator {
    async fn send(&self, messages: &[Message], _: &DecodeConfig) -> Result<String, BackendError> {
        Ok(self.respond(messages).1)
    }
}
