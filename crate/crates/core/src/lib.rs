//! Core of the multi-label annotation pipeline: disorder registry, corpus
//! ingestion and merging, prompt templates and their parsers, evaluation
//! metrics, majority voting and comorbidity analysis.

pub mod analysis;
pub mod corpus;
pub mod dataset;
pub mod dataset_io;
pub mod error;
pub mod labels;
pub mod metrics;
pub mod parser;
pub mod prompt;
pub mod registry;
pub mod strategy;
pub mod vote;

pub use dataset::{Annotation, CorpusTag, Dataset, DatasetMeta, LabelsSource, Post, ResponseRecord};
pub use labels::{LabelSource, LabelState, LabelVector};
pub use parser::{ParseOutcome, ParseStatus};
pub use prompt::{PromptKind, RenderedPrompt};
pub use registry::{Disorder, DisorderId, Registry};
pub use strategy::{PromptStrategy, StrategyRegistry};
