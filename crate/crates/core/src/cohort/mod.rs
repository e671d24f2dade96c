//! Cohort construction: ingest MIMIC-shaped ED tables, apply the inclusion and
//! exclusion criteria, and draw the stratified evaluation sample.

mod complaint;
mod ingest;
mod race;
mod sample;
mod synth;

use serde::{Deserialize, Serialize};

use crate::domain::{Disposition, Esi, Gender, Race};

pub use complaint::{
    categorize_complaint, is_obstetric, matching_categories, ComplaintCategory,
    OBSTETRIC_KEYWORDS, SEX_LINKED_KEYWORDS,
};
pub use ingest::{ingest_readers, ingest_tables, CohortManifest, Ingested, TablePaths};
pub use race::{standardize_race, RaceRule, RaceRules, RuleMatch};
pub use sample::{
    stratified_sample, stratified_sample_with, Sample, SampleOptions, SampledRow,
    SamplingManifest, StratumCount, StratumKey,
};
pub use synth::{synth_cohort, SynthTables};

/// Patients older than 89 are recorded as 91.
pub const AGE_CAP: u32 = 91;
pub const MIN_AGE: u32 = 18;

/// One de-identified ED visit after joining the four source tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortRow {
    pub subject_id: String,
    pub stay_id: String,
    pub gender: Gender,
    pub age: u32,
    pub race: Race,
    pub chief_complaint: String,
    /// Degrees Fahrenheit.
    pub temperature: Option<f64>,
    pub heart_rate: f64,
    pub resp_rate: Option<f64>,
    pub spo2: Option<f64>,
    pub sbp: f64,
    pub dbp: f64,
    pub pain: Option<u8>,
    pub medications: Vec<String>,
    pub esi: Esi,
    pub disposition: Disposition,
}

impl CohortRow {
    /// Names of the post-filter invariants this row violates.
    pub fn violations(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.age < MIN_AGE {
            v.push("age_under_18");
        }
        if self.age > AGE_CAP {
            v.push("age_over_cap");
        }
        if self.chief_complaint.trim().is_empty() {
            v.push("empty_chief_complaint");
        }
        if self.disposition == Disposition::LWBS {
            v.push("left_without_being_seen");
        }
        v
    }

    pub fn category(&self) -> ComplaintCategory {
        categorize_complaint(&self.chief_complaint)
    }
}
