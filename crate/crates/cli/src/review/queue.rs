//! Review queue: screened posts the screening model called negative for their
//! origin disorder, awaiting a keep/remove decision.

use std::collections::BTreeMap;
use std::path::Path;

use labelforge_core::dataset_io::write_atomic;
use labelforge_core::{DisorderId, LabelState, ParseStatus};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const QUEUE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Pending,
    Keep,
    Remove,
}

impl Decision {
    pub fn parse(s: &str) -> Option<Decision> {
        match s {
            "pending" => Some(Decision::Pending),
            "keep" => Some(Decision::Keep),
            "remove" => Some(Decision::Remove),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Pending => "pending",
            Decision::Keep => "keep",
            Decision::Remove => "remove",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewItem {
    pub post_id: String,
    pub text: String,
    pub origin_disorder: Option<DisorderId>,
    /// Screening prediction; always negative for queued items.
    pub prediction: LabelState,
    pub raw_response: String,
    pub parse_status: ParseStatus,
    pub decision: Decision,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decided_at: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewQueue {
    pub schema_version: u32,
    pub screening_model: String,
    pub items: Vec<ReviewItem>,
    /// Screened posts predicted positive; they skip review.
    pub auto_kept: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueueError {
    UnknownPost(String),
    IllegalTransition {
        post_id: String,
        from: Decision,
        to: Decision,
    },
}

impl std::fmt::Display for QueueError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QueueError::UnknownPost(id) => write!(f, "post `{id}` is not in the review queue"),
            QueueError::IllegalTransition { post_id, from, to } => write!(
                f,
                "post `{post_id}` is already decided `{}`; undo before deciding `{}`",
                from.as_str(),
                to.as_str()
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgressCounts {
    pub total: usize,
    pub pending: usize,
    pub keep: usize,
    pub remove: usize,
    pub decided: usize,
}

impl ProgressCounts {
    fn add(&mut self, d: Decision) {
        self.total += 1;
        match d {
            Decision::Pending => self.pending += 1,
            Decision::Keep => self.keep += 1,
            Decision::Remove => self.remove += 1,
        }
        self.decided = self.keep + self.remove;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub total: ProgressCounts,
    pub disorders: BTreeMap<String, ProgressCounts>,
}

impl ReviewQueue {
    pub fn new(screening_model: &str) -> Self {
        ReviewQueue {
            schema_version: QUEUE_SCHEMA_VERSION,
            screening_model: screening_model.to_string(),
            items: Vec::new(),
            auto_kept: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let q: ReviewQueue = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::user(format!("{}: malformed review queue: {e}", path.display())))?;
        if q.schema_version != QUEUE_SCHEMA_VERSION {
            return Err(CliError::user(format!(
                "{}: review queue schema {} (expected {QUEUE_SCHEMA_VERSION})",
                path.display(),
                q.schema_version
            )));
        }
        Ok(q)
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("queue serializes");
        bytes.push(b'\n');
        write_atomic(path, &bytes).map_err(|e| CliError::io(path, e))
    }

    pub fn contains(&self, post_id: &str) -> bool {
        self.auto_kept.iter().any(|p| p == post_id) || self.items.iter().any(|i| i.post_id == post_id)
    }

    pub fn item(&self, post_id: &str) -> Option<&ReviewItem> {
        self.items.iter().find(|i| i.post_id == post_id)
    }

    pub fn pending(&self) -> usize {
        self.items.iter().filter(|i| i.decision == Decision::Pending).count()
    }

    /// Records a keep/remove decision. Repeating the current decision is a
    /// no-op; switching between keep and remove requires an undo first.
    /// Returns whether anything changed.
    pub fn decide(
        &mut self,
        post_id: &str,
        decision: Decision,
        note: Option<String>,
        at: Option<String>,
    ) -> Result<bool, QueueError> {
        let item = self
            .items
            .iter_mut()
            .find(|i| i.post_id == post_id)
            .ok_or_else(|| QueueError::UnknownPost(post_id.to_string()))?;
        if decision != Decision::Pending && item.decision == decision {
            return Ok(false);
        }
        if item.decision != Decision::Pending || decision == Decision::Pending {
            return Err(QueueError::IllegalTransition {
                post_id: post_id.to_string(),
                from: item.decision,
                to: decision,
            });
        }
        item.decision = decision;
        item.decided_at = at;
        item.note = note;
        Ok(true)
    }

    /// Resets a decided item to pending; undoing a pending item is a no-op.
    pub fn undo(&mut self, post_id: &str) -> Result<bool, QueueError> {
        let item = self
            .items
            .iter_mut()
            .find(|i| i.post_id == post_id)
            .ok_or_else(|| QueueError::UnknownPost(post_id.to_string()))?;
        if item.decision == Decision::Pending {
            return Ok(false);
        }
        item.decision = Decision::Pending;
        item.decided_at = None;
        item.note = None;
        Ok(true)
    }

    /// Decides every pending item as keep. Returns how many changed.
    pub fn auto_keep_all(&mut self) -> usize {
        let mut n = 0;
        for item in self.items.iter_mut().filter(|i| i.decision == Decision::Pending) {
            item.decision = Decision::Keep;
            item.note = Some("auto-keep-all".into());
            n += 1;
        }
        n
    }

    pub fn progress(&self) -> Progress {
        let mut total = ProgressCounts::default();
        let mut disorders: BTreeMap<String, ProgressCounts> = BTreeMap::new();
        for i in &self.items {
            total.add(i.decision);
            let key = i.origin_disorder.as_ref().map(|d| d.to_string()).unwrap_or_default();
            disorders.entry(key).or_default().add(i.decision);
        }
        Progress { total, disorders }
    }
}
