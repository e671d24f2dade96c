use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::complaint::is_obstetric;
use super::race::RaceRules;
use super::{CohortRow, AGE_CAP, MIN_AGE};
use crate::domain::{Disposition, Esi, Gender};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct TablePaths {
    pub edstays: PathBuf,
    pub triage: PathBuf,
    pub patients: PathBuf,
    pub medrecon: PathBuf,
}

impl TablePaths {
    /// The conventional file names inside one directory.
    pub fn in_dir(dir: impl AsRef<Path>) -> TablePaths {
        let dir = dir.as_ref();
        TablePaths {
            edstays: dir.join("edstays.csv"),
            triage: dir.join("triage.csv"),
            patients: dir.join("patients.csv"),
            medrecon: dir.join("medrecon.csv"),
        }
    }
}

/// Row counts for every drop and exclusion, in the order they are applied.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortManifest {
    pub edstays_rows: usize,
    pub malformed_rows: BTreeMap<String, usize>,
    pub duplicate_stays: usize,
    pub dropped_missing_triage: usize,
    pub dropped_missing_esi: usize,
    pub dropped_missing_chief_complaint: usize,
    pub dropped_missing_heart_rate: usize,
    pub dropped_missing_blood_pressure: usize,
    pub dropped_missing_age: usize,
    pub dropped_missing_gender: usize,
    pub excluded_under_18: usize,
    pub excluded_invalid_esi: usize,
    pub excluded_left_without_being_seen: usize,
    pub excluded_obstetric: usize,
    pub final_rows: usize,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub rows: Vec<CohortRow>,
    pub manifest: CohortManifest,
}

#[derive(Debug, Deserialize)]
struct EdstayRaw {
    subject_id: String,
    stay_id: String,
    #[serde(default)]
    gender: Option<String>,
    #[serde(default)]
    race: Option<String>,
    #[serde(default)]
    disposition: Option<String>,
}

#[derive(Debug, Deserialize)]
struct TriageRaw {
    stay_id: String,
    #[serde(default)]
    temperature: Option<f64>,
    #[serde(default)]
    heartrate: Option<f64>,
    #[serde(default)]
    resprate: Option<f64>,
    #[serde(default)]
    o2sat: Option<f64>,
    #[serde(default)]
    sbp: Option<f64>,
    #[serde(default)]
    dbp: Option<f64>,
    #[serde(default)]
    pain: Option<String>,
    #[serde(default)]
    acuity: Option<f64>,
    #[serde(default)]
    chiefcomplaint: Option<String>,
}

#[derive(Debug, Deserialize)]
struct PatientRaw {
    subject_id: String,
    #[serde(default)]
    gender: Option<String>,
    #[serde(default)]
    anchor_age: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct MedRaw {
    stay_id: String,
    #[serde(default)]
    name: Option<String>,
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path.to_path_buf())
        } else {
            Error::io(path, e)
        }
    })
}

/// Reads the four tables from disk. A missing file is a configuration error.
pub fn ingest_tables(paths: &TablePaths, rules: &RaceRules) -> Result<Ingested> {
    let ed = open(&paths.edstays)?;
    let tr = open(&paths.triage)?;
    let pa = open(&paths.patients)?;
    let me = open(&paths.medrecon)?;
    ingest_readers(ed, tr, pa, me, rules)
}

fn read_table<T, R>(reader: R, table: &str, manifest: &mut CohortManifest) -> Result<Vec<T>>
where
    T: for<'de> Deserialize<'de>,
    R: Read,
{
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::Fields)
        .from_reader(reader);
    let mut out = Vec::new();
    let mut bad = 0usize;
    for rec in rdr.deserialize::<T>() {
        match rec {
            Ok(v) => out.push(v),
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(_) => bad += 1,
        }
    }
    if bad > 0 {
        log::warn!("{table}: skipped {bad} malformed rows");
        *manifest.malformed_rows.entry(table.to_string()).or_default() += bad;
    }
    Ok(out)
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.map(|v| v.trim().to_string()).filter(|v| !v.is_empty())
}

/// Leading integer of a free-text pain score, kept only when it is 0-10.
fn parse_pain(raw: Option<&str>) -> Option<u8> {
    let raw = raw?.trim();
    let digits: String = raw.chars().take_while(|c| c.is_ascii_digit()).collect();
    if digits.is_empty() || digits.len() > 2 {
        return None;
    }
    digits.parse::<u8>().ok().filter(|p| *p <= 10)
}

/// Joins the tables on `stay_id`/`subject_id` and applies the criteria.
pub fn ingest_readers(
    edstays: impl Read,
    triage: impl Read,
    patients: impl Read,
    medrecon: impl Read,
    rules: &RaceRules,
) -> Result<Ingested> {
    let mut m = CohortManifest::default();
    let stays: Vec<EdstayRaw> = read_table(edstays, "edstays", &mut m)?;
    let triage_rows: Vec<TriageRaw> = read_table(triage, "triage", &mut m)?;
    let patient_rows: Vec<PatientRaw> = read_table(patients, "patients", &mut m)?;
    let med_rows: Vec<MedRaw> = read_table(medrecon, "medrecon", &mut m)?;

    let mut triage_by_stay: HashMap<String, TriageRaw> = HashMap::new();
    for t in triage_rows {
        triage_by_stay.entry(t.stay_id.clone()).or_insert(t);
    }
    let mut patient_by_subject: HashMap<String, PatientRaw> = HashMap::new();
    for p in patient_rows {
        patient_by_subject.entry(p.subject_id.clone()).or_insert(p);
    }
    let mut meds_by_stay: HashMap<String, Vec<String>> = HashMap::new();
    for med in med_rows {
        if let Some(name) = non_empty(med.name) {
            let list = meds_by_stay.entry(med.stay_id).or_default();
            if !list.contains(&name) {
                list.push(name);
            }
        }
    }

    m.edstays_rows = stays.len();
    let mut seen = std::collections::HashSet::new();
    let mut rows = Vec::new();
    for stay in stays {
        if !seen.insert(stay.stay_id.clone()) {
            m.duplicate_stays += 1;
            continue;
        }
        let Some(tri) = triage_by_stay.remove(&stay.stay_id) else {
            m.dropped_missing_triage += 1;
            continue;
        };
        let Some(acuity) = tri.acuity else {
            m.dropped_missing_esi += 1;
            continue;
        };
        let Some(complaint) = non_empty(tri.chiefcomplaint) else {
            m.dropped_missing_chief_complaint += 1;
            continue;
        };
        let Some(heart_rate) = tri.heartrate else {
            m.dropped_missing_heart_rate += 1;
            continue;
        };
        let (Some(sbp), Some(dbp)) = (tri.sbp, tri.dbp) else {
            m.dropped_missing_blood_pressure += 1;
            continue;
        };
        let patient = patient_by_subject.get(&stay.subject_id);
        let Some(age) = patient.and_then(|p| p.anchor_age) else {
            m.dropped_missing_age += 1;
            continue;
        };
        let gender = non_empty(stay.gender)
            .or_else(|| patient.and_then(|p| non_empty(p.gender.clone())))
            .and_then(|g| g.parse::<Gender>().ok());
        let Some(gender) = gender else {
            m.dropped_missing_gender += 1;
            continue;
        };

        if age < f64::from(MIN_AGE) {
            m.excluded_under_18 += 1;
            continue;
        }
        let esi = if acuity.fract() == 0.0 && (1.0..=5.0).contains(&acuity) {
            Esi::new(acuity as u8)
        } else {
            None
        };
        let Some(esi) = esi else {
            m.excluded_invalid_esi += 1;
            continue;
        };
        let disposition = Disposition::from_mimic(stay.disposition.as_deref().unwrap_or(""));
        if disposition == Disposition::LWBS {
            m.excluded_left_without_being_seen += 1;
            continue;
        }
        if is_obstetric(&complaint) {
            m.excluded_obstetric += 1;
            continue;
        }

        rows.push(CohortRow {
            subject_id: stay.subject_id,
            race: rules.standardize(stay.race.as_deref().unwrap_or("")),
            medications: meds_by_stay.remove(&stay.stay_id).unwrap_or_default(),
            stay_id: stay.stay_id,
            gender,
            age: (age.floor() as u32).min(AGE_CAP),
            chief_complaint: complaint,
            temperature: tri.temperature,
            heart_rate,
            resp_rate: tri.resprate,
            spo2: tri.o2sat,
            sbp,
            dbp,
            pain: parse_pain(tri.pain.as_deref()),
            esi,
            disposition,
        });
    }
    m.final_rows = rows.len();
    Ok(Ingested { rows, manifest: m })
}
