//! Chief-complaint taxonomy and the keyword lists used for exclusions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::text::has_keyword;

/// Eight complaint categories. Declaration order is the matching priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ComplaintCategory {
    ChestPain,
    AbdominalPain,
    Psychiatric,
    Trauma,
    Respiratory,
    Neurological,
    PainOther,
    GeneralMedical,
}

impl ComplaintCategory {
    pub const ALL: [ComplaintCategory; 8] = [
        ComplaintCategory::ChestPain,
        ComplaintCategory::AbdominalPain,
        ComplaintCategory::Psychiatric,
        ComplaintCategory::Trauma,
        ComplaintCategory::Respiratory,
        ComplaintCategory::Neurological,
        ComplaintCategory::PainOther,
        ComplaintCategory::GeneralMedical,
    ];

    pub fn keywords(self) -> &'static [&'static str] {
        match self {
            ComplaintCategory::ChestPain => &[
                "chest pain",
                "chest tightness",
                "substernal",
                "angina",
                "palpitations",
            ],
            ComplaintCategory::AbdominalPain => &[
                "abdominal pain",
                "abd pain",
                "epigastric",
                "nausea",
                "vomiting",
                "diarrhea",
            ],
            ComplaintCategory::Psychiatric => &[
                "suicidal",
                "anxiety",
                "depression",
                "psychosis",
                "agitation",
                "si",
                "overdose",
            ],
            ComplaintCategory::Trauma => {
                &["fall", "mvc", "laceration", "fracture", "assault", "injury"]
            }
            ComplaintCategory::Respiratory => &[
                "shortness of breath",
                "sob",
                "dyspnea",
                "cough",
                "wheezing",
                "asthma",
            ],
            ComplaintCategory::Neurological => &[
                "headache",
                "dizziness",
                "syncope",
                "seizure",
                "weakness",
                "numbness",
                "stroke",
            ],
            ComplaintCategory::PainOther => &[
                "back pain",
                "flank pain",
                "extremity pain",
                "joint pain",
                "neck pain",
            ],
            ComplaintCategory::GeneralMedical => &[
                "fever",
                "weakness",
                "fatigue",
                "malaise",
                "altered mental status",
            ],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ComplaintCategory::ChestPain => "Chest Pain",
            ComplaintCategory::AbdominalPain => "Abdominal Pain",
            ComplaintCategory::Psychiatric => "Psychiatric",
            ComplaintCategory::Trauma => "Trauma",
            ComplaintCategory::Respiratory => "Respiratory",
            ComplaintCategory::Neurological => "Neurological",
            ComplaintCategory::PainOther => "Pain (Other)",
            ComplaintCategory::GeneralMedical => "General Medical",
        }
    }

    fn matches(self, text: &str) -> bool {
        self.keywords().iter().any(|kw| keyword_hit(text, kw))
    }
}

impl fmt::Display for ComplaintCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Keywords match at the start of a word. Short abbreviations (SI, SOB, MVC)
/// must match a whole word so "si" does not hit "crisis".
fn keyword_hit(text: &str, keyword: &str) -> bool {
    has_keyword(text, keyword, keyword.chars().count() <= 3)
}

/// First category (in priority order) with a keyword hit; `GeneralMedical` otherwise.
pub fn categorize_complaint(text: &str) -> ComplaintCategory {
    ComplaintCategory::ALL
        .into_iter()
        .find(|c| c.matches(text))
        .unwrap_or(ComplaintCategory::GeneralMedical)
}

/// Every category with a keyword hit, in priority order. Never empty.
pub fn matching_categories(text: &str) -> Vec<ComplaintCategory> {
    let hits: Vec<_> = ComplaintCategory::ALL
        .into_iter()
        .filter(|c| c.matches(text))
        .collect();
    if hits.is_empty() {
        vec![ComplaintCategory::GeneralMedical]
    } else {
        hits
    }
}

/// (keyword, whole-word) pairs for obstetric presentations excluded at cohort stage.
pub const OBSTETRIC_KEYWORDS: &[(&str, bool)] = &[
    ("pregnan", false),
    ("labor", true),
    ("contraction", false),
    ("vaginal bleed", false),
];

/// Sex-linked organ stems that make a gender swap implausible.
pub const SEX_LINKED_KEYWORDS: &[(&str, bool)] = &[
    ("testic", false),
    ("ovar", false),
    ("prostat", false),
    ("cervical", true),
    ("cervix", true),
];

pub fn is_obstetric(complaint: &str) -> bool {
    OBSTETRIC_KEYWORDS
        .iter()
        .any(|(kw, whole)| has_keyword(complaint, kw, *whole))
}
