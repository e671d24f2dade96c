//! Extracts an ESI level from free-text model output.
//!
//! Rules are tried in priority order. Within a rule the last match wins, since
//! models tend to restate their final answer at the end.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::domain::Esi;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ParseRule {
    /// "ESI Level: N" and close variants.
    AnchorLine,
    /// A number shortly after "ESI".
    EsiProximity,
    /// "Level N" in a response that talks about triage or ESI.
    LoneLevelWord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedEsi {
    pub esi: Esi,
    pub rule: ParseRule,
    /// Character offsets of the matched digit run.
    pub span: (usize, usize),
}

/// Maximum distance in characters between "ESI" and the start of its number.
pub const PROXIMITY_WINDOW: usize = 20;

static ANCHOR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)ESI[\s\-]*level[\s:*#\[(=\-]*(\d+)").expect("valid regex")
});
static ESI_WORD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\bESI\b").expect("valid regex"));
static LEVEL_WORD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\blevel[\s:#*]*(\d+)").expect("valid regex"));
static DIGITS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\d+").expect("valid regex"));
static CONTEXT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)triage|\besi").expect("valid regex"));

fn esi_of(run: &str) -> Option<Esi> {
    if run.len() != 1 {
        return None;
    }
    run.parse::<u8>().ok().and_then(Esi::new)
}

fn char_span(text: &str, start: usize, end: usize) -> (usize, usize) {
    let s = text[..start].chars().count();
    (s, s + text[start..end].chars().count())
}

fn found(text: &str, m: regex::Match<'_>, rule: ParseRule) -> Option<ParsedEsi> {
    esi_of(m.as_str()).map(|esi| ParsedEsi { esi, rule, span: char_span(text, m.start(), m.end()) })
}

fn anchor(text: &str) -> Option<ParsedEsi> {
    ANCHOR
        .captures_iter(text)
        .filter_map(|c| found(text, c.get(1)?, ParseRule::AnchorLine))
        .last()
}

fn proximity(text: &str) -> Option<ParsedEsi> {
    ESI_WORD
        .find_iter(text)
        .filter_map(|m| {
            let rest = &text[m.end()..];
            let d = DIGITS.find(rest)?;
            if rest[..d.start()].chars().count() >= PROXIMITY_WINDOW {
                return None;
            }
            // A number glued to a word ("SpO2") is not a level.
            if rest[..d.start()].chars().next_back().is_some_and(char::is_alphabetic) {
                return None;
            }
            let esi = esi_of(d.as_str())?;
            let start = m.end() + d.start();
            Some(ParsedEsi {
                esi,
                rule: ParseRule::EsiProximity,
                span: char_span(text, start, start + d.len()),
            })
        })
        .last()
}

fn lone_level(text: &str) -> Option<ParsedEsi> {
    if !CONTEXT.is_match(text) {
        return None;
    }
    LEVEL_WORD
        .captures_iter(text)
        .filter_map(|c| found(text, c.get(1)?, ParseRule::LoneLevelWord))
        .last()
}

/// The ESI level stated in `text`, or `None` when no rule matches.
pub fn parse_esi(text: &str) -> Option<ParsedEsi> {
    anchor(text).or_else(|| proximity(text)).or_else(|| lone_level(text))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn level(t: &str) -> Option<u8> {
        parse_esi(t).map(|p| p.esi.level())
    }

    #[test]
    fn anchor_variants() {
        assert_eq!(level("ESI Level: 3"), Some(3));
        assert_eq!(level("**ESI Level: 2**"), Some(2));
        assert_eq!(level("esi-level 4"), Some(4));
        assert_eq!(level("ESI level [2]"), Some(2));
        assert_eq!(level("ESI Level (1)"), Some(1));
        assert_eq!(level("ESI Level = 5"), Some(5));
        assert_eq!(parse_esi("ESI Level: 3").unwrap().rule, ParseRule::AnchorLine);
    }

    #[test]
    fn last_match_wins() {
        let t = "Could be ESI Level: 2, but on reflection ESI Level: 3";
        let p = parse_esi(t).unwrap();
        assert_eq!(p.esi.level(), 3);
        assert_eq!(p.span, (t.len() - 1, t.len()));
    }

    #[test]
    fn out_of_range_never_matches() {
        assert_eq!(level("ESI Level: 7"), None);
        assert_eq!(level("ESI Level: 12"), None);
        assert_eq!(level("ESI Level: 0"), None);
        assert_eq!(level("ESI Level: 2 ... ESI Level: 9"), Some(2));
    }

    #[test]
    fn proximity_rule() {
        let p = parse_esi("I would assign ESI 2 here.").unwrap();
        assert_eq!((p.esi.level(), p.rule), (2, ParseRule::EsiProximity));
        assert_eq!(level("ESI category for this patient is 3"), None);
        assert_eq!(level("ESI is probably 4"), Some(4));
        assert_eq!(level("This is ESI-2."), Some(2));
        assert_eq!(level("I would assign an ESI level of 3 given stable vitals"), Some(3));
        let p = parse_esi("I would assign ESI 3 given stable vitals.").unwrap();
        assert_eq!((p.esi.level(), p.rule), (3, ParseRule::EsiProximity));
    }

    #[test]
    fn lone_level_needs_context() {
        assert_eq!(level("Level 2 seems right"), None);
        let p = parse_esi("For triage purposes: Level 2.").unwrap();
        assert_eq!((p.esi.level(), p.rule), (2, ParseRule::LoneLevelWord));
    }

    #[test]
    fn spans_are_char_offsets() {
        let t = "Températuré °F élevée. ESI Level: 4";
        let p = parse_esi(t).unwrap();
        assert_eq!(p.span, (t.chars().count() - 1, t.chars().count()));
    }

    #[test]
    fn nothing_found() {
        assert_eq!(level(""), None);
        assert_eq!(level("The patient needs care."), None);
    }
}
