//! Shared demographic and clinical primitives.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Emergency Severity Index level. 1 is resuscitation, 5 is non-urgent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Esi(u8);

impl Esi {
    pub const ALL: [Esi; 5] = [Esi(1), Esi(2), Esi(3), Esi(4), Esi(5)];

    pub fn new(level: u8) -> Option<Esi> {
        (1..=5).contains(&level).then_some(Esi(level))
    }

    pub fn level(self) -> u8 {
        self.0
    }

    /// Zero-based index, handy for 5-slot tables.
    pub fn index(self) -> usize {
        usize::from(self.0 - 1)
    }

    /// ESI 1-2 counts as a high-acuity assignment.
    pub fn is_high_acuity(self) -> bool {
        self.0 <= 2
    }

    /// One level less urgent, saturating at 5.
    pub fn less_urgent(self) -> Esi {
        Esi((self.0 + 1).min(5))
    }

    /// One level more urgent, saturating at 1.
    pub fn more_urgent(self) -> Esi {
        Esi(self.0.saturating_sub(1).max(1))
    }
}

impl TryFrom<u8> for Esi {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Esi::new(value).ok_or(Error::InvalidEsi(i64::from(value)))
    }
}

impl From<Esi> for u8 {
    fn from(value: Esi) -> Self {
        value.0
    }
}

impl fmt::Display for Esi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gender {
    F,
    M,
}

impl Gender {
    pub fn opposite(self) -> Gender {
        match self {
            Gender::F => Gender::M,
            Gender::M => Gender::F,
        }
    }

    /// The word used in the vignette header.
    pub fn word(self) -> &'static str {
        match self {
            Gender::F => "female",
            Gender::M => "male",
        }
    }
}

impl FromStr for Gender {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "F" | "FEMALE" => Ok(Gender::F),
            "M" | "MALE" => Ok(Gender::M),
            other => Err(Error::Parse(format!("unrecognized gender {other:?}"))),
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::F => "F",
            Gender::M => "M",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Race {
    White,
    Black,
    Hispanic,
    Asian,
    Other,
    Unknown,
}

impl Race {
    pub const ALL: [Race; 6] = [
        Race::White,
        Race::Black,
        Race::Hispanic,
        Race::Asian,
        Race::Other,
        Race::Unknown,
    ];

    /// The four races that have dedicated name pools.
    pub const POOLED: [Race; 4] = [Race::White, Race::Black, Race::Hispanic, Race::Asian];

    pub fn as_str(self) -> &'static str {
        match self {
            Race::White => "White",
            Race::Black => "Black",
            Race::Hispanic => "Hispanic",
            Race::Asian => "Asian",
            Race::Other => "Other",
            Race::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for Race {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// ED disposition as recorded in `edstays.disposition`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[allow(clippy::upper_case_acronyms)]
pub enum Disposition {
    ADMITTED,
    HOME,
    EXPIRED,
    TRANSFER,
    LWBS,
    AMA,
    ELOPED,
    OTHER,
}

impl Disposition {
    /// Hospitalisation outcome used for outcome-linked calibration.
    pub fn is_admission(self) -> bool {
        matches!(
            self,
            Disposition::ADMITTED | Disposition::TRANSFER | Disposition::EXPIRED
        )
    }

    /// Parses MIMIC-IV-ED spellings ("LEFT WITHOUT BEING SEEN", ...) as well as
    /// the short enum names. Anything unrecognized becomes `OTHER`.
    pub fn from_mimic(raw: &str) -> Disposition {
        match raw.trim().to_ascii_uppercase().as_str() {
            "ADMITTED" => Disposition::ADMITTED,
            "HOME" => Disposition::HOME,
            "EXPIRED" => Disposition::EXPIRED,
            "TRANSFER" => Disposition::TRANSFER,
            "LEFT WITHOUT BEING SEEN" | "LWBS" => Disposition::LWBS,
            "LEFT AGAINST MEDICAL ADVICE" | "AMA" => Disposition::AMA,
            "ELOPED" => Disposition::ELOPED,
            _ => Disposition::OTHER,
        }
    }

    /// Spelling used when writing MIMIC-shaped tables.
    pub fn mimic_label(self) -> &'static str {
        match self {
            Disposition::ADMITTED => "ADMITTED",
            Disposition::HOME => "HOME",
            Disposition::EXPIRED => "EXPIRED",
            Disposition::TRANSFER => "TRANSFER",
            Disposition::LWBS => "LEFT WITHOUT BEING SEEN",
            Disposition::AMA => "LEFT AGAINST MEDICAL ADVICE",
            Disposition::ELOPED => "ELOPED",
            Disposition::OTHER => "OTHER",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgeBand {
    #[serde(rename = "18-44")]
    Young,
    #[serde(rename = "45-64")]
    Middle,
    #[serde(rename = "65+")]
    Older,
}

impl AgeBand {
    pub fn from_age(age: u32) -> AgeBand {
        match age {
            0..=44 => AgeBand::Young,
            45..=64 => AgeBand::Middle,
            _ => AgeBand::Older,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AgeBand::Young => "18-44",
            AgeBand::Middle => "45-64",
            AgeBand::Older => "65+",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn esi_bounds() {
        assert!(Esi::new(0).is_none());
        assert!(Esi::new(6).is_none());
        assert_eq!(Esi::new(3).unwrap().level(), 3);
        assert_eq!(Esi::new(5).unwrap().less_urgent().level(), 5);
        assert_eq!(Esi::new(1).unwrap().more_urgent().level(), 1);
        assert!(serde_json::from_str::<Esi>("7").is_err());
        assert_eq!(serde_json::from_str::<Esi>("2").unwrap(), Esi::new(2).unwrap());
    }

    #[test]
    fn disposition_spellings() {
        assert_eq!(
            Disposition::from_mimic("LEFT WITHOUT BEING SEEN"),
            Disposition::LWBS
        );
        assert_eq!(Disposition::from_mimic("admitted"), Disposition::ADMITTED);
        assert_eq!(Disposition::from_mimic("weird"), Disposition::OTHER);
        assert!(Disposition::TRANSFER.is_admission());
        assert!(!Disposition::HOME.is_admission());
    }

    #[test]
    fn age_band_cut_points() {
        assert_eq!(AgeBand::from_age(18), AgeBand::Young);
        assert_eq!(AgeBand::from_age(44), AgeBand::Young);
        assert_eq!(AgeBand::from_age(45), AgeBand::Middle);
        assert_eq!(AgeBand::from_age(64), AgeBand::Middle);
        assert_eq!(AgeBand::from_age(65), AgeBand::Older);
        assert_eq!(AgeBand::from_age(91), AgeBand::Older);
    }
}
