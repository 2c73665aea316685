//! Provider access for annotation passes: a registry of completion backends
//! (OpenAI-style HTTP profiles and a deterministic stub), a persistent
//! response cache, sliding-window rate limiting, retries, and the concurrent
//! annotation pass with its checkpoint journal.

pub mod annotate;
pub mod backend;
pub mod cache;
pub mod client;
pub mod config;
pub mod error;
pub mod manifest;
pub mod rate;
pub mod stub;

pub use annotate::{annotate, run_pass, AnnotateSummary, DisorderScope, FailedPost, PassOptions, PassOutcome};
pub use backend::{BackendRegistry, CompletionBackend, CompletionRequest, HttpBackend, HttpProfile};
pub use cache::{cache_key, CacheRecord, ResponseCache};
pub use client::{Completion, Gateway};
pub use config::{ProviderConfig, RetryPolicy, StubSettings};
pub use error::{AnnotateError, AttemptError, GatewayError, ManifestError};
pub use labelforge_core::vote::majority_vote;
pub use manifest::{manifest_path, Manifest, PassHeader};
pub use rate::{Clock, RateLimiter, SystemClock, VirtualClock};
pub use stub::{StubBackend, StubDraw};
