//! Response parsers, one per prompt kind.
//!
//! Parsers are total: every input string yields a [`ParseOutcome`]. Matching
//! walks a recovery ladder (contract match, then token-set recovery, then
//! failure); anything recovered below the contract is tagged
//! [`ParseStatus::AmbiguousRecovered`] so reports can show recovery rates.

use serde::{Deserialize, Serialize};

use crate::labels::{LabelState, LabelVector};
use crate::prompt::{power_set_classes, NORMAL};
use crate::registry::{normalize_token, Disorder, DisorderId, Registry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Ok,
    AmbiguousRecovered,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseOutcome {
    pub status: ParseStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<LabelVector>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unknown_tokens: Vec<String>,
    pub note: String,
}

impl ParseOutcome {
    fn ok(labels: LabelVector, note: &str) -> Self {
        ParseOutcome {
            status: ParseStatus::Ok,
            labels: Some(labels),
            unknown_tokens: Vec::new(),
            note: note.to_string(),
        }
    }

    fn recovered(labels: LabelVector, note: impl Into<String>) -> Self {
        ParseOutcome {
            status: ParseStatus::AmbiguousRecovered,
            labels: Some(labels),
            unknown_tokens: Vec::new(),
            note: note.into(),
        }
    }

    fn failed(note: impl Into<String>) -> Self {
        ParseOutcome {
            status: ParseStatus::Failed,
            labels: None,
            unknown_tokens: Vec::new(),
            note: note.into(),
        }
    }

    pub fn is_failed(&self) -> bool {
        self.status == ParseStatus::Failed
    }

    /// Labels with failed parses scored as all-negative over `disorders`.
    pub fn scored_labels<'a>(&self, disorders: impl IntoIterator<Item = &'a DisorderId>) -> LabelVector {
        match &self.labels {
            Some(l) => l.clone(),
            None => LabelVector::filled(disorders, LabelState::Negative),
        }
    }
}

const EDGE_PUNCT: &[char] = &[
    '"', '\'', '`', '.', ',', ';', ':', '!', '?', '(', ')', '[', ']', '{', '}', '*', '-', '_', '\u{201c}', '\u{201d}',
    '\u{2018}', '\u{2019}',
];

/// Lowercase, collapse whitespace, strip quotes/brackets/punctuation at both ends.
pub fn normalize_response(raw: &str) -> String {
    let collapsed = normalize_token(raw);
    collapsed
        .trim_matches(|c: char| c.is_whitespace() || EDGE_PUNCT.contains(&c))
        .to_string()
}

/// Splits a normalized response into label tokens on list separators and the word "and".
fn split_tokens(normalized: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for piece in normalized.split([',', ';', '/', '&', '+', '|', '\n']) {
        let words: Vec<&str> = piece.split_whitespace().collect();
        for part in words.split(|w| *w == "and") {
            let t = normalize_response(&part.join(" "));
            if !t.is_empty() {
                tokens.push(t);
            }
        }
    }
    tokens
}

const QUALIFIERS: [&str; 6] = [
    " disorders",
    " disorder",
    " illness",
    " disease",
    " symptoms",
    " condition",
];

/// Maps a free-text disorder name to its canonical id via ids, display names,
/// adjective forms and the synonym table. Trailing qualifiers such as
/// "disorder" are dropped when the full token does not match.
pub fn normalize_name(token: &str, registry: &Registry) -> Option<DisorderId> {
    let t = normalize_response(token).replace('_', " ");
    if t.is_empty() {
        return None;
    }
    if let Some(d) = registry.lookup_normalized(&t) {
        return Some(d.id.clone());
    }
    for q in QUALIFIERS {
        if let Some(stem) = t.strip_suffix(q) {
            let stem = stem.trim();
            if let Some(d) = registry.lookup_normalized(stem) {
                return Some(d.id.clone());
            }
        }
    }
    None
}

fn resolve_requested<'r>(registry: &'r Registry, disorders: &[DisorderId]) -> Result<Vec<&'r Disorder>, ParseOutcome> {
    registry
        .ordered(disorders.iter().map(DisorderId::as_str))
        .map_err(|e| ParseOutcome::failed(format!("requested disorders invalid: {e}")))
}

pub fn parse_single(raw: &str, disorder: &DisorderId) -> ParseOutcome {
    let n = normalize_response(raw);
    let single = |positive: bool| LabelVector::new().with(disorder.as_str(), LabelState::from_bool(positive));
    match n.as_str() {
        "yes" => return ParseOutcome::ok(single(true), "exact"),
        "no" => return ParseOutcome::ok(single(false), "exact"),
        _ => {}
    }
    let lead: String = n.chars().take_while(|c| c.is_alphabetic()).collect();
    match lead.as_str() {
        "yes" => ParseOutcome::recovered(single(true), "leading 'yes' followed by extra text"),
        "no" => ParseOutcome::recovered(single(false), "leading 'no' followed by extra text"),
        _ => ParseOutcome::failed("response is not 'Yes' or 'No'"),
    }
}

/// How one token of a constrained response resolved.
enum TokenMatch {
    Normal,
    Exact(DisorderId),
    Alias(DisorderId),
    Unresolved,
}

fn match_token(token: &str, requested: &[&Disorder], registry: &Registry) -> TokenMatch {
    if token == NORMAL.to_lowercase() {
        return TokenMatch::Normal;
    }
    if let Some(d) = requested.iter().find(|d| normalize_token(&d.adjective) == token) {
        return TokenMatch::Exact(d.id.clone());
    }
    match normalize_name(token, registry) {
        Some(id) if requested.iter().any(|d| d.id == id) => TokenMatch::Alias(id),
        _ => TokenMatch::Unresolved,
    }
}

/// Parses an answer to the multi-class prompt: one of the 2^n class strings.
pub fn parse_multiclass(raw: &str, registry: &Registry, disorders: &[DisorderId]) -> ParseOutcome {
    let requested = match resolve_requested(registry, disorders) {
        Ok(r) => r,
        Err(fail) => return fail,
    };
    let n = normalize_response(raw);
    let base = LabelVector::filled(requested.iter().map(|d| &d.id), LabelState::Negative);

    for class in power_set_classes(&requested) {
        if normalize_token(&class.label) == n {
            let mut labels = base.clone();
            for id in class.members {
                labels.set(id, LabelState::Positive);
            }
            return ParseOutcome::ok(labels, "exact class");
        }
    }

    let tokens = split_tokens(&n);
    if tokens.is_empty() {
        return ParseOutcome::failed("empty response");
    }
    let mut labels = base;
    let mut positives = 0;
    let mut saw_normal = false;
    for t in &tokens {
        match match_token(t, &requested, registry) {
            TokenMatch::Normal => saw_normal = true,
            TokenMatch::Exact(id) | TokenMatch::Alias(id) => {
                labels.set(id, LabelState::Positive);
                positives += 1;
            }
            TokenMatch::Unresolved => return ParseOutcome::failed("response is not one of the listed classes"),
        }
    }
    let note = if saw_normal && positives > 0 {
        "token-set match; disorder names override \"Normal\""
    } else {
        "token-set match; response deviates from the listed class strings"
    };
    ParseOutcome::recovered(labels, note)
}

/// Parses an answer to the multi-label prompt: any combination of adjectives, or "Normal".
pub fn parse_multilabel(raw: &str, registry: &Registry, disorders: &[DisorderId]) -> ParseOutcome {
    let requested = match resolve_requested(registry, disorders) {
        Ok(r) => r,
        Err(fail) => return fail,
    };
    let mut labels = LabelVector::filled(requested.iter().map(|d| &d.id), LabelState::Negative);
    let n = normalize_response(raw);
    if n == NORMAL.to_lowercase() {
        return ParseOutcome::ok(labels, "exact");
    }

    let mut positives = 0;
    let mut saw_normal = false;
    let mut aliases = 0;
    let mut unresolved = 0;
    for t in split_tokens(&n) {
        match match_token(&t, &requested, registry) {
            TokenMatch::Normal => saw_normal = true,
            TokenMatch::Exact(id) => {
                labels.set(id, LabelState::Positive);
                positives += 1;
            }
            TokenMatch::Alias(id) => {
                labels.set(id, LabelState::Positive);
                positives += 1;
                aliases += 1;
            }
            TokenMatch::Unresolved => unresolved += 1,
        }
    }

    if positives == 0 && !saw_normal {
        return ParseOutcome::failed("no listed disorder name or \"Normal\" in response");
    }
    if !saw_normal && aliases == 0 && unresolved == 0 {
        return ParseOutcome::ok(labels, "exact");
    }
    let mut notes = Vec::new();
    if saw_normal && positives > 0 {
        notes.push("disorder names override \"Normal\"".to_string());
    }
    if aliases > 0 {
        notes.push(format!("{aliases} name(s) matched via synonyms"));
    }
    if unresolved > 0 {
        notes.push(format!("{unresolved} unlisted token(s) ignored"));
    }
    if notes.is_empty() {
        notes.push("\"Normal\" repeated".to_string());
    }
    ParseOutcome::recovered(labels, notes.join("; "))
}

// Free-text fragments longer than this read as prose rather than a disorder name.
const MAX_NAME_WORDS: usize = 6;

/// Parses an answer to the unrestricted prompt against the whole registry.
pub fn parse_unrestricted(raw: &str, registry: &Registry) -> ParseOutcome {
    let mut labels = LabelVector::filled(registry.ids(), LabelState::Negative);
    let n = normalize_response(raw);
    if n == NORMAL.to_lowercase() {
        return ParseOutcome::ok(labels, "exact");
    }

    let mut positives = 0;
    let mut saw_normal = false;
    let mut split_on_and = false;
    let mut unknown: Vec<String> = Vec::new();
    let mut prose = 0;

    for piece in n.split([',', ';', '\n']) {
        let token = normalize_response(piece);
        if token.is_empty() {
            continue;
        }
        if token == NORMAL.to_lowercase() {
            saw_normal = true;
            continue;
        }
        if let Some(id) = normalize_name(&token, registry) {
            labels.set(id, LabelState::Positive);
            positives += 1;
            continue;
        }
        let parts = split_tokens(&token);
        let resolved: Vec<Option<DisorderId>> = parts.iter().map(|p| normalize_name(p, registry)).collect();
        if parts.len() > 1 && resolved.iter().all(Option::is_some) {
            for id in resolved.into_iter().flatten() {
                labels.set(id, LabelState::Positive);
                positives += 1;
            }
            split_on_and = true;
            continue;
        }
        if token.split_whitespace().count() > MAX_NAME_WORDS {
            prose += 1;
        }
        unknown.push(token);
    }

    if positives == 0 && !saw_normal && !unknown.is_empty() && prose == unknown.len() {
        return ParseOutcome::failed("free text without any disorder name");
    }
    if positives == 0 && !saw_normal && unknown.is_empty() {
        return ParseOutcome::failed("empty response");
    }

    let mut outcome = if saw_normal && positives > 0 {
        ParseOutcome::recovered(labels, "disorder names override \"Normal\"")
    } else if split_on_and {
        ParseOutcome::recovered(labels, "names joined without commas")
    } else if unknown.is_empty() {
        ParseOutcome::ok(labels, "exact")
    } else {
        ParseOutcome::ok(labels, "unregistered names collected")
    };
    outcome.unknown_tokens = unknown;
    outcome
}
