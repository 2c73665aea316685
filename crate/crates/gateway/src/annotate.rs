//! Annotation passes: render every prompt a post needs, complete them
//! concurrently and store the parsed result per post.

use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use labelforge_core::dataset::ResponseRecord;
use labelforge_core::{Annotation, Dataset, DisorderId, LabelVector, Post, PromptKind, PromptStrategy, Registry};

use crate::client::Gateway;
use crate::error::{AnnotateError, GatewayError};
use crate::manifest::{Manifest, PassHeader};

/// Which disorders each post is asked about.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DisorderScope {
    Fixed(Vec<DisorderId>),
    /// Only the post's origin disorder; posts without one are skipped.
    Origin,
}

#[derive(Debug, Clone)]
pub struct PassOptions {
    pub scope: DisorderScope,
    /// Leave the origin disorder out of the request (its label is kept from provenance).
    pub skip_origin: bool,
    /// Record wall-clock timestamps and latencies. Off keeps outputs reproducible.
    pub record_timing: bool,
}

impl PassOptions {
    pub fn describe(&self) -> String {
        let scope = match &self.scope {
            DisorderScope::Fixed(ids) => ids.iter().map(DisorderId::as_str).collect::<Vec<_>>().join(","),
            DisorderScope::Origin => "origin".into(),
        };
        if self.skip_origin {
            format!("{scope};skip-origin")
        } else {
            scope
        }
    }

    pub fn disorders_for(&self, post: &Post) -> Vec<DisorderId> {
        let mut ids = match &self.scope {
            DisorderScope::Fixed(ids) => ids.clone(),
            DisorderScope::Origin => post.origin_disorder.iter().cloned().collect(),
        };
        if self.skip_origin {
            if let Some(o) = &post.origin_disorder {
                ids.retain(|d| d != o);
            }
        }
        ids
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailedPost {
    pub post_id: String,
    pub error: String,
}

#[derive(Debug, Default)]
pub struct PassOutcome {
    /// In input order.
    pub annotations: Vec<Annotation>,
    pub failed: Vec<FailedPost>,
    pub prompts: usize,
}

/// Annotates `posts` without touching any dataset. Posts with nothing to ask
/// (no disorders left in scope) are skipped.
pub fn run_pass(
    posts: &[&Post],
    opts: &PassOptions,
    gateway: &Gateway,
    strategy: &dyn PromptStrategy,
    registry: &Registry,
    manifest: Option<&mut Manifest>,
) -> Result<PassOutcome, AnnotateError> {
    let kind = strategy.kind();
    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let prompts = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<Annotation, FailedPost>>>> = Mutex::new(vec![None; posts.len()]);
    let journal_error: Mutex<Option<AnnotateError>> = Mutex::new(None);
    let manifest = Mutex::new(manifest);
    let workers = gateway.config().max_concurrent.clamp(1, posts.len().max(1));

    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= posts.len() {
                    break;
                }
                let post = posts[i];
                let result = if abort.load(Ordering::SeqCst) {
                    Err(FailedPost {
                        post_id: post.id.clone(),
                        error: "pass aborted after a configuration error".into(),
                    })
                } else {
                    match annotate_post(post, opts, gateway, strategy, registry, kind, &prompts) {
                        Ok(Some(a)) => Ok(a),
                        Ok(None) => continue,
                        Err(e) => {
                            if matches!(e, GatewayError::Auth { .. } | GatewayError::Config(_)) {
                                abort.store(true, Ordering::SeqCst);
                            }
                            Err(FailedPost {
                                post_id: post.id.clone(),
                                error: e.to_string(),
                            })
                        }
                    }
                };
                if let Some(m) = manifest.lock().expect("manifest lock").as_deref_mut() {
                    let written = match &result {
                        Ok(a) => m.record_done(a),
                        Err(f) => m.record_failed(&f.post_id, &f.error),
                    };
                    if let Err(e) = written {
                        journal_error.lock().expect("error lock").get_or_insert(e.into());
                        abort.store(true, Ordering::SeqCst);
                    }
                }
                slots.lock().expect("slots lock")[i] = Some(result);
            });
        }
    });

    if let Some(e) = journal_error.into_inner().expect("error lock") {
        return Err(e);
    }
    let mut out = PassOutcome {
        prompts: prompts.into_inner(),
        ..PassOutcome::default()
    };
    for slot in slots.into_inner().expect("slots lock").into_iter().flatten() {
        match slot {
            Ok(a) => out.annotations.push(a),
            Err(f) => out.failed.push(f),
        }
    }
    Ok(out)
}

fn annotate_post(
    post: &Post,
    opts: &PassOptions,
    gateway: &Gateway,
    strategy: &dyn PromptStrategy,
    registry: &Registry,
    kind: PromptKind,
    prompts_issued: &AtomicUsize,
) -> Result<Option<Annotation>, GatewayError> {
    let disorders = opts.disorders_for(post);
    if disorders.is_empty() && kind != PromptKind::Unrestricted {
        return Ok(None);
    }
    let prompts = strategy.prompts(registry, post, &disorders)?;
    let mut labels = LabelVector::new();
    let mut responses = Vec::with_capacity(prompts.len());
    for prompt in &prompts {
        prompts_issued.fetch_add(1, Ordering::SeqCst);
        let completion = gateway.complete(prompt)?;
        let outcome = strategy.parse(registry, prompt, &completion.text);
        let scored = if kind == PromptKind::Unrestricted {
            outcome.scored_labels(registry.ids())
        } else {
            outcome.scored_labels(&prompt.disorders)
        };
        labels.overlay(&scored);
        responses.push(ResponseRecord {
            disorders: prompt.disorders.clone(),
            raw_response: completion.text,
            outcome,
            latency_ms: if opts.record_timing { completion.latency_ms } else { 0 },
            cached: completion.cached,
            timestamp: opts
                .record_timing
                .then(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)),
        });
    }
    Ok(Some(Annotation {
        post_id: post.id.clone(),
        model_id: gateway.model_id().to_string(),
        prompt_kind: kind,
        responses,
        labels,
    }))
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct AnnotateSummary {
    pub requested: usize,
    pub already_present: usize,
    pub restored: usize,
    pub annotated: usize,
    pub prompts: usize,
    pub provider_calls: u64,
    pub failed: Vec<FailedPost>,
}

/// Annotates `post_ids` (all posts when `None`) of `dataset` in place.
///
/// Posts that already carry an annotation for this model and prompt kind are
/// left alone. With a manifest path, finished posts are journaled as they
/// complete so an interrupted pass resumes where it stopped; the journal is
/// removed once every post succeeded.
pub fn annotate(
    dataset: &mut Dataset,
    post_ids: Option<&[String]>,
    opts: &PassOptions,
    gateway: &Gateway,
    strategy: &dyn PromptStrategy,
    registry: &Registry,
    manifest_path: Option<&Path>,
) -> Result<AnnotateSummary, AnnotateError> {
    let kind = strategy.kind();
    let model = gateway.model_id().to_string();
    let ids: Vec<String> = match post_ids {
        Some(ids) => ids.to_vec(),
        None => dataset.posts().iter().map(|p| p.id.clone()).collect(),
    };
    for id in &ids {
        if !dataset.contains(id) {
            return Err(AnnotateError::UnknownPost(id.clone()));
        }
    }
    let mut summary = AnnotateSummary {
        requested: ids.len(),
        ..AnnotateSummary::default()
    };
    let calls_before = gateway.provider_calls();

    let mut manifest = match manifest_path {
        Some(p) => Some(Manifest::open(
            p,
            &PassHeader {
                model_id: model.clone(),
                prompt_kind: kind,
                scope: opts.describe(),
            },
        )?),
        None => None,
    };

    let mut todo: Vec<&Post> = Vec::new();
    let mut restored = Vec::new();
    for id in &ids {
        if dataset.annotation(id, &model, kind).is_some() {
            summary.already_present += 1;
        } else if let Some(a) = manifest.as_ref().and_then(|m| m.done().get(id)) {
            restored.push(a.clone());
        } else {
            todo.push(dataset.post(id).expect("checked above"));
        }
    }
    let outcome = run_pass(&todo, opts, gateway, strategy, registry, manifest.as_mut())?;
    summary.restored = restored.len();
    summary.annotated = outcome.annotations.len();
    summary.prompts = outcome.prompts;
    summary.failed = outcome.failed;
    for a in restored.into_iter().chain(outcome.annotations) {
        dataset.insert_annotation(a)?;
    }
    summary.provider_calls = gateway.provider_calls() - calls_before;

    if let Some(m) = manifest {
        if summary.failed.is_empty() {
            m.finish()?;
        }
    }
    Ok(summary)
}
