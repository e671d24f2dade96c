//! Race standardization against an editable rule table.

use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::domain::Race;
use crate::error::Result;

const DEFAULT_RULES: &str = include_str!("../../data/race_rules.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleMatch {
    Exact,
    Prefix,
    Contains,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaceRule {
    #[serde(rename = "match")]
    pub kind: RuleMatch,
    pub pattern: String,
    pub race: Race,
}

/// Ordered rule table; the first matching rule wins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaceRules {
    pub rules: Vec<RaceRule>,
}

impl RaceRules {
    pub fn from_json(json: &str) -> Result<RaceRules> {
        Ok(serde_json::from_str(json)?)
    }

    /// Maps a raw `edstays.race` string. Comparison is case-insensitive on the
    /// trimmed value; anything unmatched is `Unknown`.
    pub fn standardize(&self, raw: &str) -> Race {
        let value = raw.trim().to_uppercase();
        if value.is_empty() {
            return Race::Unknown;
        }
        self.rules
            .iter()
            .find(|rule| {
                let pattern = rule.pattern.to_uppercase();
                match rule.kind {
                    RuleMatch::Exact => value == pattern,
                    RuleMatch::Prefix => value.starts_with(&pattern),
                    RuleMatch::Contains => value.contains(&pattern),
                }
            })
            .map_or(Race::Unknown, |rule| rule.race)
    }
}

impl Default for RaceRules {
    fn default() -> Self {
        RaceRules::from_json(DEFAULT_RULES).expect("bundled race rules are valid JSON")
    }
}

static DEFAULT: LazyLock<RaceRules> = LazyLock::new(RaceRules::default);

/// Standardizes with the bundled rule table.
pub fn standardize_race(raw: &str) -> Race {
    DEFAULT.standardize(raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mimic_vocabulary() {
        let cases = [
            ("WHITE", Race::White),
            ("WHITE - RUSSIAN", Race::White),
            ("WHITE - OTHER EUROPEAN", Race::White),
            ("PORTUGUESE", Race::White),
            ("BLACK/AFRICAN AMERICAN", Race::Black),
            ("BLACK/CAPE VERDEAN", Race::Black),
            ("HISPANIC/LATINO - PUERTO RICAN", Race::Hispanic),
            ("HISPANIC OR LATINO", Race::Hispanic),
            ("SOUTH AMERICAN", Race::Hispanic),
            ("ASIAN - CHINESE", Race::Asian),
            ("ASIAN", Race::Asian),
            ("AMERICAN INDIAN/ALASKA NATIVE", Race::Other),
            ("NATIVE HAWAIIAN OR OTHER PACIFIC ISLANDER", Race::Other),
            ("MULTIPLE RACE/ETHNICITY", Race::Other),
            ("OTHER", Race::Other),
            ("UNKNOWN", Race::Unknown),
            ("UNABLE TO OBTAIN", Race::Unknown),
            ("PATIENT DECLINED TO ANSWER", Race::Unknown),
            ("", Race::Unknown),
            ("martian", Race::Unknown),
            ("  white - brazilian ", Race::White),
        ];
        for (raw, want) in cases {
            assert_eq!(standardize_race(raw), want, "{raw:?}");
        }
    }

    #[test]
    fn custom_rules_replace_defaults() {
        let rules = RaceRules::from_json(
            r#"{"rules":[{"match":"contains","pattern":"LATIN","race":"Hispanic"}]}"#,
        )
        .unwrap();
        assert_eq!(rules.standardize("HISPANIC/LATINO - CUBAN"), Race::Hispanic);
        assert_eq!(rules.standardize("WHITE"), Race::Unknown);
    }
}
