//! Small text utilities shared by the cohort and vignette modules.

use crate::domain::Gender;

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Case-insensitive keyword test. The keyword must start at a word boundary;
/// with `whole_word` it must also end at one.
pub(crate) fn has_keyword(haystack: &str, keyword: &str, whole_word: bool) -> bool {
    let hay = haystack.to_lowercase();
    let key = keyword.to_lowercase();
    if key.is_empty() {
        return false;
    }
    hay.match_indices(&key).any(|(start, _)| {
        let before_ok = hay[..start].chars().next_back().is_none_or(|c| !is_word_char(c));
        let end = start + key.len();
        let after_ok = !whole_word || hay[end..].chars().next().is_none_or(|c| !is_word_char(c));
        before_ok && after_ok
    })
}

/// How gendered words in free text should be rewritten.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PronounTarget {
    Gender(Gender),
    Neutral,
}

/// Replacement for a lower-cased gendered word, or `None` when the word is not
/// in the lexicon. An empty replacement drops the word.
fn lexicon(word: &str, target: PronounTarget) -> Option<&'static str> {
    const TO_F: PronounTarget = PronounTarget::Gender(Gender::F);
    const TO_M: PronounTarget = PronounTarget::Gender(Gender::M);
    const NEUTRAL: PronounTarget = PronounTarget::Neutral;
    let r = match (word, target) {
        ("she", TO_M) => "he",
        ("he", TO_F) => "she",
        ("her", TO_M) => "his",
        ("him", TO_F) => "her",
        ("his", TO_F) => "her",
        ("hers", TO_M) => "his",
        ("herself", TO_M) => "himself",
        ("himself", TO_F) => "herself",
        ("ms", TO_M) | ("mrs", TO_M) => "mr",
        ("mr", TO_F) => "ms",
        ("woman", TO_M) => "man",
        ("man", TO_F) => "woman",
        ("female", TO_M) => "male",
        ("male", TO_F) => "female",
        ("she" | "he", NEUTRAL) => "they",
        ("her" | "his", NEUTRAL) => "their",
        ("him", NEUTRAL) => "them",
        ("hers", NEUTRAL) => "theirs",
        ("herself" | "himself", NEUTRAL) => "themselves",
        ("woman" | "man" | "female" | "male", NEUTRAL) => "person",
        ("ms" | "mrs" | "mr", NEUTRAL) => "",
        _ => return None,
    };
    Some(r)
}

/// Every word the lexicon treats as gendered.
pub(crate) const GENDERED_WORDS: &[&str] = &[
    "she", "he", "her", "him", "his", "hers", "herself", "himself", "ms", "mrs", "mr", "woman",
    "man", "female", "male",
];

fn match_case(original: &str, replacement: &str) -> String {
    if replacement.is_empty() {
        return String::new();
    }
    let mut chars = original.chars();
    let first_upper = chars.next().is_some_and(char::is_uppercase);
    let all_upper = original.len() > 1 && original.chars().all(|c| !c.is_lowercase());
    if all_upper {
        replacement.to_uppercase()
    } else if first_upper {
        let mut out = String::with_capacity(replacement.len());
        let mut rc = replacement.chars();
        if let Some(f) = rc.next() {
            out.extend(f.to_uppercase());
        }
        out.push_str(rc.as_str());
        out
    } else {
        replacement.to_string()
    }
}

/// Whole-word, case-preserving rewrite of gendered words. A title ("Ms.")
/// keeps its trailing period unless it is dropped entirely.
pub(crate) fn rewrite_gendered(text: &str, target: PronounTarget) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find(is_word_char) {
        out.push_str(&rest[..start]);
        let tail = &rest[start..];
        let end = tail.find(|c: char| !is_word_char(c)).unwrap_or(tail.len());
        let word = &tail[..end];
        let mut after = &tail[end..];
        match lexicon(&word.to_lowercase(), target) {
            Some("") => {
                after = after.strip_prefix('.').unwrap_or(after);
                after = after.trim_start_matches(' ');
            }
            Some(rep) => out.push_str(&match_case(word, rep)),
            None => out.push_str(word),
        }
        rest = after;
    }
    out.push_str(rest);
    out
}

/// Tokens in `text` that are gendered words (case-insensitive, whole word).
pub(crate) fn gendered_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !is_word_char(c))
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .filter(|w| GENDERED_WORDS.contains(&w.as_str()))
        .collect()
}

/// Whole-word occurrences of any `words` (case-insensitive).
pub(crate) fn contains_any_word<'a>(text: &str, words: impl IntoIterator<Item = &'a str>) -> Option<&'a str> {
    words.into_iter().find(|w| has_keyword(text, w, true))
}
