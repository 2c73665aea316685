use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::registry::DisorderId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelState {
    Positive,
    Negative,
    Unknown,
}

impl LabelState {
    pub fn from_bool(positive: bool) -> Self {
        if positive {
            LabelState::Positive
        } else {
            LabelState::Negative
        }
    }

    /// `Some(true)` for positive, `Some(false)` for negative, `None` for unknown.
    pub fn definite(self) -> Option<bool> {
        match self {
            LabelState::Positive => Some(true),
            LabelState::Negative => Some(false),
            LabelState::Unknown => None,
        }
    }

    pub fn is_definite(self) -> bool {
        self != LabelState::Unknown
    }
}

/// Where a truth cell came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LabelSource {
    /// Human-annotated source corpus (Dreaddit, DepSeverity).
    Corpus,
    /// Subreddit-derived label retained from provenance.
    Origin,
    /// Produced by a model annotation pass.
    Llm { model: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelVector(BTreeMap<DisorderId, LabelState>);

impl LabelVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every listed disorder set to `state`.
    pub fn filled<'a>(ids: impl IntoIterator<Item = &'a DisorderId>, state: LabelState) -> Self {
        LabelVector(ids.into_iter().map(|id| (id.clone(), state)).collect())
    }

    pub fn set(&mut self, id: DisorderId, state: LabelState) {
        self.0.insert(id, state);
    }

    pub fn with(mut self, id: &str, state: LabelState) -> Self {
        self.set(DisorderId::new(id), state);
        self
    }

    /// Missing entries read as unknown.
    pub fn get(&self, id: &str) -> LabelState {
        self.0.get(id).copied().unwrap_or(LabelState::Unknown)
    }

    pub fn remove(&mut self, id: &str) -> Option<LabelState> {
        self.0.remove(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DisorderId, LabelState)> {
        self.0.iter().map(|(k, v)| (k, *v))
    }

    pub fn keys(&self) -> impl Iterator<Item = &DisorderId> {
        self.0.keys()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when every listed disorder has a definite state.
    pub fn covers<'a>(&self, ids: impl IntoIterator<Item = &'a DisorderId>) -> bool {
        ids.into_iter().all(|id| self.get(id.as_str()).is_definite())
    }

    /// Copies the entries of `other` over this vector.
    pub fn overlay(&mut self, other: &LabelVector) {
        for (k, v) in other.iter() {
            self.0.insert(k.clone(), v);
        }
    }

    /// Restriction to the given disorders; absent ones become unknown.
    pub fn project<'a>(&self, ids: impl IntoIterator<Item = &'a DisorderId>) -> LabelVector {
        LabelVector(ids.into_iter().map(|id| (id.clone(), self.get(id.as_str()))).collect())
    }
}

impl FromIterator<(DisorderId, LabelState)> for LabelVector {
    fn from_iter<T: IntoIterator<Item = (DisorderId, LabelState)>>(iter: T) -> Self {
        LabelVector(iter.into_iter().collect())
    }
}
