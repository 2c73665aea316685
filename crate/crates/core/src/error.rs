use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("registry table line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("duplicate disorder id `{0}`")]
    DuplicateId(String),
    #[error("unknown disorder `{0}`")]
    UnknownDisorder(String),
    #[error("token `{token}` maps to both `{first}` and `{second}`")]
    AmbiguousSynonym {
        token: String,
        first: String,
        second: String,
    },
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: unrecognized severity value(s): {values:?}")]
    UnrecognizedSeverity { path: PathBuf, values: Vec<String> },
}

#[derive(Debug, Error)]
pub enum MergeError {
    #[error(
        "join rate {rate:.4} below threshold {threshold:.4} \
         (matched {matched}, dreaddit {dreaddit}, depseverity {depseverity})"
    )]
    LowJoinRate {
        rate: f64,
        threshold: f64,
        matched: usize,
        dreaddit: usize,
        depseverity: usize,
    },
}

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("group `{group}` has {available} posts, {requested} requested")]
    ShortGroup {
        group: String,
        available: usize,
        requested: usize,
    },
    #[error("power-set class `{0}` is empty")]
    EmptyClass(String),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("duplicate post id `{0}`")]
    DuplicatePost(String),
    #[error("{what} references unknown post `{post_id}`")]
    DanglingReference { what: &'static str, post_id: String },
    #[error("post `{0}` has empty text")]
    EmptyText(String),
    #[error("post `{0}` is a control post but carries an origin disorder")]
    ControlWithOrigin(String),
    #[error("unknown disorder `{disorder}` referenced by post `{post_id}`")]
    UnknownDisorder { post_id: String, disorder: String },
}

#[derive(Debug, Error)]
pub enum DatasetIoError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at byte offset {offset} (line {line}): {message}")]
    Parse {
        offset: usize,
        line: usize,
        message: String,
    },
    #[error("schema version mismatch: file has {found}, this build reads {expected}")]
    Version { found: u32, expected: u32 },
    #[error("invalid dataset: {0}")]
    Invalid(#[from] DatasetError),
}

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("unknown disorder `{0}`")]
    UnknownDisorder(String),
    #[error("{kind} prompt needs {expected}, got {got} disorder(s)")]
    DisorderCount {
        kind: &'static str,
        expected: &'static str,
        got: usize,
    },
    #[error("post text is empty")]
    EmptyPost,
    #[error("template: {0}")]
    Template(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no scored cells: prediction and truth do not overlap")]
    EmptyOverlap,
    #[error("shape mismatch: prediction {pred:?} vs truth {truth:?}")]
    ShapeMismatch {
        pred: (usize, usize),
        truth: (usize, usize),
    },
    #[error("missing annotations for {} cell(s), first: {:?}", .0.len(), .0.first())]
    MissingAnnotations(Vec<(String, String)>),
    #[error("no annotations for model `{0}`")]
    UnknownModel(String),
    #[error(transparent)]
    Vote(#[from] VoteError),
}

#[derive(Debug, Error, PartialEq)]
pub enum VoteError {
    #[error("majority vote needs at least two label vectors, got {0}")]
    TooFewVoters(usize),
    #[error("label vectors cover different or indefinite disorders (voter {voter})")]
    CoverageMismatch { voter: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("contingency needs two distinct disorders, got `{0}` twice")]
    SameDisorder(String),
    #[error("no posts with definite labels for both `{a}` and `{b}`")]
    NoEligiblePosts { a: String, b: String },
    #[error("comorbidity analysis needs at least two disorders")]
    TooFewDisorders,
}
