//! Schema-compatible synthetic ED cohort for runs without credentialed data.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::complaint::ComplaintCategory;
use crate::domain::{Disposition, Gender};
use crate::error::{Error, Result};
use crate::hashing::derived_rng;

const FEMALE_SHARE: f64 = 0.538;
const ESI_SHARES: [f64; 5] = [0.059, 0.335, 0.536, 0.068, 0.002];

/// Raw `edstays.race` spellings per standardized race, with the target share.
const RACE_VOCAB: [(f64, &[&str]); 6] = [
    (0.586, &["WHITE", "WHITE - OTHER EUROPEAN", "WHITE - RUSSIAN", "PORTUGUESE"]),
    (0.219, &["BLACK/AFRICAN AMERICAN", "BLACK/CAPE VERDEAN", "BLACK/CARIBBEAN ISLAND"]),
    (0.078, &["HISPANIC/LATINO - PUERTO RICAN", "HISPANIC OR LATINO", "HISPANIC/LATINO - DOMINICAN"]),
    (0.044, &["ASIAN", "ASIAN - CHINESE", "ASIAN - SOUTH EAST ASIAN"]),
    (0.052, &["OTHER", "AMERICAN INDIAN/ALASKA NATIVE", "MULTIPLE RACE/ETHNICITY"]),
    (0.022, &["UNKNOWN", "UNABLE TO OBTAIN", "PATIENT DECLINED TO ANSWER"]),
];

const CATEGORY_SHARES: [(ComplaintCategory, f64); 8] = [
    (ComplaintCategory::GeneralMedical, 0.406),
    (ComplaintCategory::AbdominalPain, 0.137),
    (ComplaintCategory::Trauma, 0.108),
    (ComplaintCategory::Neurological, 0.090),
    (ComplaintCategory::ChestPain, 0.080),
    (ComplaintCategory::Psychiatric, 0.068),
    (ComplaintCategory::Respiratory, 0.062),
    (ComplaintCategory::PainOther, 0.049),
];

/// Share of visits given a sex-linked (but not obstetric) complaint.
const SEX_LINKED_SHARE: f64 = 0.003;

pub(crate) fn complaint_templates(category: ComplaintCategory) -> &'static [&'static str] {
    match category {
        ComplaintCategory::ChestPain => &[
            "Chest pain",
            "Chest pain, palpitations",
            "Chest tightness",
            "Substernal pressure",
            "Palpitations",
            "Angina",
        ],
        ComplaintCategory::AbdominalPain => &[
            "Abd pain",
            "Abdominal pain",
            "Abd pain, Tachypnea",
            "Nausea/Vomiting",
            "Epigastric pain",
            "Diarrhea",
        ],
        ComplaintCategory::Psychiatric => &[
            "Suicidal ideation",
            "Anxiety",
            "Depression",
            "SI",
            "Agitation",
            "Overdose",
        ],
        ComplaintCategory::Trauma => &[
            "s/p Fall",
            "MVC",
            "Hand laceration",
            "Wrist fracture",
            "Assault",
            "Head injury",
            "Pt states {she} had a fall down stairs",
        ],
        ComplaintCategory::Respiratory => &[
            "Shortness of breath",
            "SOB",
            "Dyspnea",
            "Cough",
            "Wheezing",
            "Asthma exacerbation",
        ],
        ComplaintCategory::Neurological => &[
            "Headache",
            "Dizziness",
            "Syncope",
            "Seizure",
            "Weakness",
            "Numbness",
            "Stroke symptoms",
        ],
        ComplaintCategory::PainOther => &[
            "Back pain",
            "Flank pain",
            "Extremity pain",
            "Joint pain",
            "Neck pain",
        ],
        ComplaintCategory::GeneralMedical => &[
            "Fever",
            "Fatigue",
            "Malaise",
            "Altered mental status",
            "Rash",
            "Toothache",
            "Hyperglycemia",
            "Abnormal labs",
            "Cellulitis",
        ],
    }
}

const SEX_LINKED_F: &[&str] = &["Ovarian cyst", "Cervical pain"];
const SEX_LINKED_M: &[&str] = &["Testicular pain", "Prostatitis"];

const MEDICATIONS: &[&str] = &[
    "Lisinopril",
    "Metformin",
    "Atorvastatin",
    "Albuterol",
    "Levothyroxine",
    "Amlodipine",
    "Omeprazole",
    "Sertraline",
    "Aspirin",
    "Metoprolol",
    "Gabapentin",
    "Insulin glargine",
    "Furosemide",
    "Warfarin",
    "Hydrochlorothiazide",
];

/// P(admitted-type disposition | ESI).
const ADMIT_BY_ESI: [f64; 5] = [0.80, 0.55, 0.30, 0.08, 0.03];

/// Four MIMIC-shaped CSV tables, each with a header row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthTables {
    pub edstays: String,
    pub triage: String,
    pub patients: String,
    pub medrecon: String,
}

impl SynthTables {
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, body) in [
            ("edstays.csv", &self.edstays),
            ("triage.csv", &self.triage),
            ("patients.csv", &self.patients),
            ("medrecon.csv", &self.medrecon),
        ] {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, weighted: &[(T, f64)]) -> T {
    let total: f64 = weighted.iter().map(|(_, w)| w).sum();
    let mut u = rng.random::<f64>() * total;
    for &(item, w) in weighted {
        if u < w {
            return item;
        }
        u -= w;
    }
    weighted[weighted.len() - 1].0
}

fn one_of<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items[rng.random_range(0..items.len())]
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

struct Vitals {
    temperature: f64,
    heart_rate: f64,
    resp_rate: f64,
    spo2: f64,
    sbp: f64,
    dbp: f64,
}

fn vitals(rng: &mut ChaCha8Rng, esi: u8, category: ComplaintCategory) -> Vitals {
    let (hr, sbp, rr, spo2): ((f64, f64), (f64, f64), (f64, f64), (f64, f64)) = match esi {
        1 => ((105.0, 150.0), (70.0, 200.0), (22.0, 40.0), (80.0, 95.0)),
        2 => ((88.0, 130.0), (90.0, 190.0), (18.0, 30.0), (90.0, 99.0)),
        3 => ((68.0, 110.0), (100.0, 170.0), (14.0, 22.0), (94.0, 100.0)),
        _ => ((58.0, 100.0), (105.0, 150.0), (12.0, 20.0), (96.0, 100.0)),
    };
    let febrile = category == ComplaintCategory::GeneralMedical && rng.random::<f64>() < 0.3;
    let temperature = if febrile {
        rng.random_range(100.4..103.5)
    } else {
        rng.random_range(96.8..99.8)
    };
    let sbp_v = rng.random_range(sbp.0..sbp.1).round();
    Vitals {
        temperature: round1(temperature),
        heart_rate: rng.random_range(hr.0..hr.1).round(),
        resp_rate: rng.random_range(rr.0..rr.1).round(),
        spo2: rng.random_range(spo2.0..spo2.1).round().min(100.0),
        sbp: sbp_v,
        dbp: (sbp_v * rng.random_range(0.52..0.70)).round(),
    }
}

fn disposition(rng: &mut ChaCha8Rng, esi: u8) -> Disposition {
    if rng.random::<f64>() < ADMIT_BY_ESI[usize::from(esi - 1)] {
        let expired = if esi == 1 { 0.04 } else { 0.002 };
        pick(
            rng,
            &[
                (Disposition::EXPIRED, expired),
                (Disposition::TRANSFER, 0.07),
                (Disposition::ADMITTED, 1.0 - expired - 0.07),
            ],
        )
    } else {
        pick(
            rng,
            &[
                (Disposition::HOME, 0.93),
                (Disposition::AMA, 0.03),
                (Disposition::ELOPED, 0.02),
                (Disposition::OTHER, 0.02),
            ],
        )
    }
}

fn csv_of(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

/// Generates `n` eligible visits whose marginals follow the reference cohort
/// (gender, race, ESI and complaint-category shares). Deterministic in `seed`.
pub fn synth_cohort(n: usize, seed: u64) -> SynthTables {
    let mut rng = derived_rng(seed, 0x5e7);
    let mut ed = Vec::with_capacity(n);
    let mut tri = Vec::with_capacity(n);
    let mut pat = Vec::with_capacity(n);
    let mut med = Vec::new();

    let esi_weights: Vec<(u8, f64)> = (1..=5).zip(ESI_SHARES).collect();
    let race_weights: Vec<(usize, f64)> = RACE_VOCAB.iter().map(|(w, _)| *w).enumerate().collect();

    for i in 0..n {
        let subject_id = (10_000_000 + i).to_string();
        let stay_id = (30_000_000 + i).to_string();
        let gender = if rng.random::<f64>() < FEMALE_SHARE {
            Gender::F
        } else {
            Gender::M
        };
        let race_idx = pick(&mut rng, &race_weights);
        let race_raw = one_of(&mut rng, RACE_VOCAB[race_idx].1);
        let esi = pick(&mut rng, &esi_weights);
        let category = pick(&mut rng, &CATEGORY_SHARES);
        let complaint = if rng.random::<f64>() < SEX_LINKED_SHARE {
            let pool = if gender == Gender::F { SEX_LINKED_F } else { SEX_LINKED_M };
            one_of(&mut rng, pool).to_string()
        } else {
            let pronoun = if gender == Gender::F { "she" } else { "he" };
            one_of(&mut rng, complaint_templates(category)).replace("{she}", pronoun)
        };
        let age = rng.random_range(18u32..=96).min(91);
        let v = vitals(&mut rng, esi, category);
        let pain = if rng.random::<f64>() < 0.15 {
            String::new()
        } else {
            rng.random_range(0u8..=10).to_string()
        };
        let disp = disposition(&mut rng, esi);

        ed.push(vec![
            subject_id.clone(),
            stay_id.clone(),
            gender.to_string(),
            race_raw.to_string(),
            disp.mimic_label().to_string(),
        ]);
        tri.push(vec![
            stay_id.clone(),
            format!("{:.1}", v.temperature),
            format!("{:.1}", v.heart_rate),
            format!("{:.1}", v.resp_rate),
            format!("{:.1}", v.spo2),
            format!("{:.1}", v.sbp),
            format!("{:.1}", v.dbp),
            pain,
            format!("{esi}.0"),
            complaint,
        ]);
        pat.push(vec![subject_id, gender.to_string(), age.to_string()]);
        let n_meds = pick(&mut rng, &[(0usize, 0.4), (1, 0.25), (2, 0.2), (3, 0.1), (4, 0.05)]);
        let mut chosen: Vec<&str> = Vec::new();
        while chosen.len() < n_meds {
            let m = one_of(&mut rng, MEDICATIONS);
            if !chosen.contains(&m) {
                chosen.push(m);
            }
        }
        for m in chosen {
            med.push(vec![stay_id.clone(), m.to_string()]);
        }
    }

    SynthTables {
        edstays: csv_of(&["subject_id", "stay_id", "gender", "race", "disposition"], &ed),
        triage: csv_of(
            &[
                "stay_id",
                "temperature",
                "heartrate",
                "resprate",
                "o2sat",
                "sbp",
                "dbp",
                "pain",
                "acuity",
                "chiefcomplaint",
            ],
            &tri,
        ),
        patients: csv_of(&["subject_id", "gender", "anchor_age"], &pat),
        medrecon: csv_of(&["stay_id", "name"], &med),
    }
}
