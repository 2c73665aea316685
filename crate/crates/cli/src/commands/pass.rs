//! Running (or planning, under --dry-run) an annotation pass.

use std::path::Path;

use labelforge_core::{Dataset, PromptKind};
use labelforge_gateway::{annotate, cache_key, manifest_path, AnnotateSummary, PassOptions};
use serde_json::{json, Value};

use crate::context::Context;
use crate::error::{CliError, CliResult};

/// What a pass would request: prompts not yet annotated and how many of
/// those the cache already answers.
pub fn plan(
    ctx: &mut Context,
    dataset: &Dataset,
    post_ids: &[String],
    model: &str,
    kind: PromptKind,
    opts: &PassOptions,
) -> CliResult<Value> {
    let strategy = ctx.strategy(kind)?;
    let temperature = ctx.cfg.provider(model)?.temperature;
    let cache = ctx.cache()?;
    let (mut posts, mut prompts, mut cached) = (0usize, 0usize, 0usize);
    for id in post_ids {
        if dataset.annotation(id, model, kind).is_some() {
            continue;
        }
        let post = dataset
            .post(id)
            .ok_or_else(|| CliError::user(format!("unknown post `{id}`")))?;
        let disorders = opts.disorders_for(post);
        if disorders.is_empty() && kind != PromptKind::Unrestricted {
            continue;
        }
        posts += 1;
        for p in strategy.prompts(&ctx.registry, post, &disorders)? {
            prompts += 1;
            if cache.get(&cache_key(model, temperature, &p.text)).is_some() {
                cached += 1;
            }
        }
    }
    Ok(json!({
        "model": model,
        "prompt_kind": kind,
        "posts": posts,
        "prompts": prompts,
        "cached": cached,
        "requests": prompts - cached,
    }))
}

/// Annotates in place, journaling progress beside `journal_beside`.
pub fn run(
    ctx: &mut Context,
    dataset: &mut Dataset,
    post_ids: &[String],
    model: &str,
    kind: PromptKind,
    opts: &PassOptions,
    journal_beside: &Path,
) -> CliResult<AnnotateSummary> {
    let strategy = ctx.strategy(kind)?;
    let gateway = ctx.gateway(model)?;
    let manifest = manifest_path(journal_beside, model, kind);
    Ok(annotate(
        dataset,
        Some(post_ids),
        opts,
        &gateway,
        strategy.as_ref(),
        &ctx.registry,
        Some(&manifest),
    )?)
}

/// Turns a pass with failed posts into a provider error. `saved` names where
/// the partial results went.
pub fn check(summary: &AnnotateSummary, model: &str, saved: &Path) -> CliResult<()> {
    if summary.failed.is_empty() {
        return Ok(());
    }
    Err(CliError::Provider {
        message: format!(
            "{} of {} posts failed for model `{model}`: {}; partial results saved to {}, rerun the same command to resume",
            summary.failed.len(),
            summary.requested,
            summary.failed[0].error,
            saved.display()
        ),
        failed_posts: summary.failed.iter().map(|f| f.post_id.clone()).collect(),
    })
}

pub fn summary_json(model: &str, s: &AnnotateSummary) -> Value {
    json!({
        "model": model,
        "posts": s.requested,
        "already_present": s.already_present,
        "restored": s.restored,
        "annotated": s.annotated,
        "prompts": s.prompts,
        "provider_calls": s.provider_calls,
    })
}
