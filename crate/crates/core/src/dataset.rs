//! Posts, truth labels and stored model annotations.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::DatasetError;
use crate::labels::{LabelSource, LabelState, LabelVector};
use crate::parser::{ParseOutcome, ParseStatus};
use crate::prompt::PromptKind;
use crate::registry::{DisorderId, Registry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusTag {
    Dreaddit,
    Depseverity,
    Rmhd,
    Merged,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    pub text: String,
    pub source: CorpusTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_subreddit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_disorder: Option<DisorderId>,
    #[serde(default)]
    pub is_control: bool,
}

impl Post {
    pub fn new(id: impl Into<String>, text: impl Into<String>, source: CorpusTag) -> Self {
        Post {
            id: id.into(),
            text: text.into(),
            source,
            origin_subreddit: None,
            origin_disorder: None,
            is_control: false,
        }
    }
}

/// One completion request and its parsed response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRecord {
    /// Disorders the prompt asked about (empty for unrestricted prompts).
    pub disorders: Vec<DisorderId>,
    pub raw_response: String,
    pub outcome: ParseOutcome,
    pub latency_ms: u64,
    pub cached: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

/// Everything one model said about one post under one prompt kind.
///
/// Single-label passes hold one response per disorder; the other kinds hold one
/// response per post. `labels` is the merged result with failed parses scored
/// as negative.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub post_id: String,
    pub model_id: String,
    pub prompt_kind: PromptKind,
    pub responses: Vec<ResponseRecord>,
    pub labels: LabelVector,
}

impl Annotation {
    pub fn key(&self) -> AnnotationKey {
        AnnotationKey {
            post_id: self.post_id.clone(),
            model_id: self.model_id.clone(),
            prompt_kind: self.prompt_kind,
        }
    }

    pub fn count_status(&self, status: ParseStatus) -> usize {
        self.responses.iter().filter(|r| r.outcome.status == status).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnnotationKey {
    pub post_id: String,
    pub model_id: String,
    pub prompt_kind: PromptKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Creation parameters and statistics recorded by the producing stage.
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
}

/// Which labels an analysis reads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LabelsSource {
    Truth,
    Model { model_id: String, prompt_kind: PromptKind },
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub meta: DatasetMeta,
    posts: Vec<Post>,
    index: HashMap<String, usize>,
    truth: BTreeMap<String, LabelVector>,
    truth_sources: BTreeMap<String, BTreeMap<DisorderId, LabelSource>>,
    annotations: BTreeMap<AnnotationKey, Annotation>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.meta == other.meta
            && self.posts == other.posts
            && self.truth == other.truth
            && self.truth_sources == other.truth_sources
            && self.annotations == other.annotations
    }
}

impl Dataset {
    pub fn new(meta: DatasetMeta) -> Self {
        Dataset {
            meta,
            ..Default::default()
        }
    }

    pub fn from_posts(meta: DatasetMeta, posts: Vec<Post>) -> Result<Self, DatasetError> {
        let mut d = Dataset::new(meta);
        for p in posts {
            d.push_post(p)?;
        }
        Ok(d)
    }

    pub fn push_post(&mut self, post: Post) -> Result<(), DatasetError> {
        if post.text.trim().is_empty() {
            return Err(DatasetError::EmptyText(post.id));
        }
        if post.is_control && post.origin_disorder.is_some() {
            return Err(DatasetError::ControlWithOrigin(post.id));
        }
        if self.index.contains_key(&post.id) {
            return Err(DatasetError::DuplicatePost(post.id));
        }
        self.index.insert(post.id.clone(), self.posts.len());
        self.posts.push(post);
        Ok(())
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn post(&self, id: &str) -> Option<&Post> {
        self.index.get(id).map(|&i| &self.posts[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn truth(&self, post_id: &str) -> Option<&LabelVector> {
        self.truth.get(post_id)
    }

    pub fn truth_map(&self) -> &BTreeMap<String, LabelVector> {
        &self.truth
    }

    pub fn truth_sources(&self, post_id: &str) -> Option<&BTreeMap<DisorderId, LabelSource>> {
        self.truth_sources.get(post_id)
    }

    pub fn set_truth(
        &mut self,
        post_id: &str,
        disorder: DisorderId,
        state: LabelState,
        source: LabelSource,
    ) -> Result<(), DatasetError> {
        if !self.contains(post_id) {
            return Err(DatasetError::DanglingReference {
                what: "truth",
                post_id: post_id.to_string(),
            });
        }
        self.truth
            .entry(post_id.to_string())
            .or_default()
            .set(disorder.clone(), state);
        self.truth_sources
            .entry(post_id.to_string())
            .or_default()
            .insert(disorder, source);
        Ok(())
    }

    pub fn annotations(&self) -> impl Iterator<Item = &Annotation> {
        self.annotations.values()
    }

    pub fn annotation(&self, post_id: &str, model_id: &str, kind: PromptKind) -> Option<&Annotation> {
        self.annotations.get(&AnnotationKey {
            post_id: post_id.to_string(),
            model_id: model_id.to_string(),
            prompt_kind: kind,
        })
    }

    pub fn insert_annotation(&mut self, annotation: Annotation) -> Result<(), DatasetError> {
        if !self.contains(&annotation.post_id) {
            return Err(DatasetError::DanglingReference {
                what: "annotation",
                post_id: annotation.post_id,
            });
        }
        self.annotations.insert(annotation.key(), annotation);
        Ok(())
    }

    /// Distinct model ids with at least one annotation of `kind`, sorted.
    pub fn models(&self, kind: PromptKind) -> Vec<String> {
        let mut m: Vec<String> = self
            .annotations
            .keys()
            .filter(|k| k.prompt_kind == kind)
            .map(|k| k.model_id.clone())
            .collect();
        m.sort();
        m.dedup();
        m
    }

    /// Labels of `post_id` as seen by `source`. Model views are the model's
    /// annotation overlaid with provenance-retained (origin) truth cells.
    pub fn labels(&self, post_id: &str, source: &LabelsSource) -> Option<LabelVector> {
        match source {
            LabelsSource::Truth => self.truth(post_id).cloned(),
            LabelsSource::Model { model_id, prompt_kind } => {
                let ann = self.annotation(post_id, model_id, *prompt_kind)?;
                let mut labels = ann.labels.clone();
                if let (Some(truth), Some(sources)) = (self.truth(post_id), self.truth_sources(post_id)) {
                    for (id, src) in sources {
                        if *src == LabelSource::Origin {
                            labels.set(id.clone(), truth.get(id.as_str()));
                        }
                    }
                }
                Some(labels)
            }
        }
    }

    /// A dataset holding only the listed posts (in this dataset's order) with
    /// their truth and annotations.
    pub fn subset<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Dataset {
        let keep: std::collections::HashSet<&str> = ids.into_iter().collect();
        let mut out = Dataset::new(self.meta.clone());
        for p in &self.posts {
            if keep.contains(p.id.as_str()) {
                out.push_post(p.clone()).expect("source dataset is valid");
            }
        }
        out.truth = self
            .truth
            .iter()
            .filter(|(k, _)| out.contains(k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        out.truth_sources = self
            .truth_sources
            .iter()
            .filter(|(k, _)| out.contains(k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        out.annotations = self
            .annotations
            .iter()
            .filter(|(k, _)| out.contains(&k.post_id))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        out
    }

    /// Checks every cross-reference and that every disorder id exists in `registry`.
    pub fn validate(&self, registry: &Registry) -> Result<(), DatasetError> {
        let unknown = |post_id: &str, id: &DisorderId| DatasetError::UnknownDisorder {
            post_id: post_id.to_string(),
            disorder: id.to_string(),
        };
        for p in &self.posts {
            if let Some(o) = &p.origin_disorder {
                if !registry.contains(o.as_str()) {
                    return Err(unknown(&p.id, o));
                }
            }
        }
        for (pid, v) in &self.truth {
            if !self.contains(pid) {
                return Err(DatasetError::DanglingReference {
                    what: "truth",
                    post_id: pid.clone(),
                });
            }
            if let Some(id) = v.keys().find(|id| !registry.contains(id.as_str())) {
                return Err(unknown(pid, id));
            }
        }
        for a in self.annotations.values() {
            if !self.contains(&a.post_id) {
                return Err(DatasetError::DanglingReference {
                    what: "annotation",
                    post_id: a.post_id.clone(),
                });
            }
            if let Some(id) = a.labels.keys().find(|id| !registry.contains(id.as_str())) {
                return Err(unknown(&a.post_id, id));
            }
        }
        Ok(())
    }

    pub(crate) fn post_record(&self, post: &Post) -> PostRecord {
        PostRecord {
            post: post.clone(),
            truth: self.truth.get(&post.id).cloned(),
            truth_sources: self.truth_sources.get(&post.id).cloned(),
            annotations: self
                .annotations
                .range(
                    AnnotationKey {
                        post_id: post.id.clone(),
                        model_id: String::new(),
                        prompt_kind: PromptKind::SingleLabel,
                    }..,
                )
                .take_while(|(k, _)| k.post_id == post.id)
                .map(|(_, a)| a.clone())
                .collect(),
        }
    }

    pub(crate) fn absorb_record(&mut self, rec: PostRecord) -> Result<(), DatasetError> {
        let id = rec.post.id.clone();
        self.push_post(rec.post)?;
        if let Some(t) = rec.truth {
            self.truth.insert(id.clone(), t);
        }
        if let Some(s) = rec.truth_sources {
            self.truth_sources.insert(id.clone(), s);
        }
        for a in rec.annotations {
            if a.post_id != id {
                return Err(DatasetError::DanglingReference {
                    what: "annotation",
                    post_id: a.post_id,
                });
            }
            self.annotations.insert(a.key(), a);
        }
        Ok(())
    }
}

/// One line of the dataset file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct PostRecord {
    pub post: Post,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<LabelVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_sources: Option<BTreeMap<DisorderId, LabelSource>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<Annotation>,
}
