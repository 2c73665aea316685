//! Disorder registry: canonical ids, display names, adjective forms and synonyms.
//!
//! Registry order matters. Prompt renderers list disorders and power-set classes
//! in registry order, and parsers decompose class strings against it.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::RegistryError;

const DEFAULT_DISORDERS: &str = include_str!("../../../data/disorders.tsv");
const DEFAULT_SYNONYMS: &str = include_str!("../../../data/synonyms.tsv");

/// Canonical lowercase disorder token, e.g. `depression` or `eating_disorder`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DisorderId(String);

impl DisorderId {
    pub fn new(id: impl Into<String>) -> Self {
        DisorderId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DisorderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::borrow::Borrow<str> for DisorderId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for DisorderId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl From<&str> for DisorderId {
    fn from(s: &str) -> Self {
        DisorderId(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disorder {
    pub id: DisorderId,
    pub display_name: String,
    /// Adjective form used by the multi-label prompts ("Depressed", "Stressed", ...).
    pub adjective: String,
    pub synonyms: Vec<String>,
}

/// The seven disorders every default registry carries.
pub const REQUIRED_IDS: [&str; 7] = [
    "depression",
    "stress",
    "anxiety",
    "adhd",
    "eating_disorder",
    "ptsd",
    "suicide",
];

/// The six disorders of the RMHD-derived multi-label dataset.
pub const SPAADE_IDS: [&str; 6] = ["suicide", "ptsd", "anxiety", "adhd", "depression", "eating_disorder"];

#[derive(Debug, Clone)]
pub struct Registry {
    disorders: Vec<Disorder>,
    // normalized token -> index into `disorders`
    lookup: BTreeMap<String, usize>,
}

impl Registry {
    /// Registry built from the checked-in `data/disorders.tsv` and `data/synonyms.tsv`.
    pub fn builtin() -> Self {
        Self::from_tables(DEFAULT_DISORDERS, DEFAULT_SYNONYMS).expect("builtin disorder tables are valid")
    }

    pub fn load(disorders: &Path, synonyms: Option<&Path>) -> Result<Self, RegistryError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|source| RegistryError::Io {
                path: p.to_path_buf(),
                source,
            })
        };
        let d = read(disorders)?;
        let s = match synonyms {
            Some(p) => read(p)?,
            None => String::new(),
        };
        Self::from_tables(&d, &s)
    }

    pub fn from_tables(disorders_tsv: &str, synonyms_tsv: &str) -> Result<Self, RegistryError> {
        let mut disorders: Vec<Disorder> = Vec::new();
        for (line_no, line) in data_lines(disorders_tsv) {
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() != 3 || cols.iter().any(|c| c.is_empty()) {
                return Err(RegistryError::Malformed {
                    line: line_no,
                    reason: "expected `id<TAB>display_name<TAB>adjective`".into(),
                });
            }
            let id = cols[0];
            if id != id.to_lowercase() {
                return Err(RegistryError::Malformed {
                    line: line_no,
                    reason: format!("disorder id `{id}` must be lowercase"),
                });
            }
            if disorders.iter().any(|d| d.id.as_str() == id) {
                return Err(RegistryError::DuplicateId(id.to_string()));
            }
            disorders.push(Disorder {
                id: DisorderId::new(id),
                display_name: cols[1].to_string(),
                adjective: cols[2].to_string(),
                synonyms: Vec::new(),
            });
        }

        for (line_no, line) in data_lines(synonyms_tsv) {
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() != 2 || cols.iter().any(|c| c.is_empty()) {
                return Err(RegistryError::Malformed {
                    line: line_no,
                    reason: "expected `token<TAB>disorder_id`".into(),
                });
            }
            let Some(d) = disorders.iter_mut().find(|d| d.id.as_str() == cols[1]) else {
                return Err(RegistryError::UnknownDisorder(cols[1].to_string()));
            };
            d.synonyms.push(normalize_token(cols[0]));
        }

        let mut lookup: BTreeMap<String, usize> = BTreeMap::new();
        for (idx, d) in disorders.iter().enumerate() {
            let mut keys = vec![
                normalize_token(d.id.as_str()),
                normalize_token(&d.id.as_str().replace('_', " ")),
                normalize_token(&d.display_name),
                normalize_token(&d.adjective),
            ];
            keys.extend(d.synonyms.iter().cloned());
            for key in keys {
                match lookup.get(&key) {
                    Some(&other) if other != idx => {
                        return Err(RegistryError::AmbiguousSynonym {
                            token: key,
                            first: disorders[other].id.to_string(),
                            second: d.id.to_string(),
                        })
                    }
                    _ => {
                        lookup.insert(key, idx);
                    }
                }
            }
        }

        Ok(Registry { disorders, lookup })
    }

    pub fn disorders(&self) -> &[Disorder] {
        &self.disorders
    }

    pub fn ids(&self) -> impl Iterator<Item = &DisorderId> {
        self.disorders.iter().map(|d| &d.id)
    }

    pub fn get(&self, id: &str) -> Option<&Disorder> {
        self.disorders.iter().find(|d| d.id.as_str() == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.get(id).is_some()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.disorders.iter().position(|d| d.id.as_str() == id)
    }

    pub fn require(&self, id: &str) -> Result<&Disorder, RegistryError> {
        self.get(id)
            .ok_or_else(|| RegistryError::UnknownDisorder(id.to_string()))
    }

    /// Resolves `ids` against the registry and returns them deduplicated, in registry order.
    pub fn ordered<'a, I, S>(&self, ids: I) -> Result<Vec<&Disorder>, RegistryError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str> + 'a,
    {
        let mut idx: Vec<usize> = Vec::new();
        for id in ids {
            let id = id.as_ref();
            let pos = self
                .position(id)
                .ok_or_else(|| RegistryError::UnknownDisorder(id.to_string()))?;
            if !idx.contains(&pos) {
                idx.push(pos);
            }
        }
        idx.sort_unstable();
        Ok(idx.into_iter().map(|i| &self.disorders[i]).collect())
    }

    /// Exact lookup of an already-normalized token.
    pub(crate) fn lookup_normalized(&self, token: &str) -> Option<&Disorder> {
        self.lookup.get(token).map(|&i| &self.disorders[i])
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::builtin()
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

/// Lowercases, trims and collapses internal whitespace.
pub fn normalize_token(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}
