//! screen, review-serve, finalize: the clean-up round over a fresh sample.

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use clap::Args;
use labelforge_core::corpus::{draw, groups, GroupKey, CONTROL_GROUP};
use labelforge_core::{Dataset, DatasetMeta, LabelState, PromptKind};
use labelforge_gateway::{DisorderScope, PassOptions};
use serde_json::{json, Value};

use super::pass;
use crate::context::Context;
use crate::error::{CliError, CliResult};
use crate::review::{serve, Decision, ReviewItem, ReviewQueue, ReviewState};

#[derive(Debug, Clone, Args)]
pub struct ScreenArgs {
    /// Sampled dataset.
    #[arg(long)]
    pub input: PathBuf,
    /// Review queue file; created when missing, extended otherwise.
    #[arg(long)]
    pub queue: PathBuf,
    /// Screening model (default: `screening_model` from the config).
    #[arg(long)]
    pub model: Option<String>,
    /// Decide every pending item as keep (unattended runs).
    #[arg(long)]
    pub auto_keep_all: bool,
}

/// Asks the screening model about each post's origin disorder. Positive
/// answers are kept outright; the rest wait for a reviewer.
pub fn screen(ctx: &mut Context, args: &ScreenArgs) -> CliResult<Value> {
    let ds = ctx.load(&args.input)?;
    let model = args.model.clone().unwrap_or_else(|| ctx.cfg.screening_model());
    ctx.cfg.provider(&model)?;
    let mut queue = if args.queue.exists() {
        ReviewQueue::load(&args.queue)?
    } else {
        ReviewQueue::new(&model)
    };
    if queue.screening_model != model {
        return Err(CliError::user(format!(
            "{} was screened with `{}`, not `{model}`",
            args.queue.display(),
            queue.screening_model
        )));
    }

    let posts: Vec<_> = ds
        .posts()
        .iter()
        .filter(|p| p.origin_disorder.is_some() && !queue.contains(&p.id))
        .cloned()
        .collect();
    let ids: Vec<String> = posts.iter().map(|p| p.id.clone()).collect();
    // Screening answers live in the queue, never in the dataset.
    let mut scratch = Dataset::from_posts(DatasetMeta::default(), posts)?;
    let opts = PassOptions {
        scope: DisorderScope::Origin,
        skip_origin: false,
        record_timing: ctx.cfg.config.record_timing,
    };
    let kind = PromptKind::SingleLabel;
    if ctx.dry_run {
        let plan = pass::plan(ctx, &scratch, &ids, &model, kind, &opts)?;
        return Ok(json!({"dry_run": true, "already_screened": ds.len() - ids.len(), "pass": plan}));
    }

    let summary = pass::run(ctx, &mut scratch, &ids, &model, kind, &opts, &args.queue)?;
    let (mut kept, mut queued) = (0usize, 0usize);
    for id in &ids {
        let Some(ann) = scratch.annotation(id, &model, kind) else {
            continue;
        };
        let post = scratch.post(id).expect("scratch holds every screened post");
        let origin = post.origin_disorder.clone().expect("filtered on origin");
        if ann.labels.get(origin.as_str()) == LabelState::Positive {
            queue.auto_kept.push(id.clone());
            kept += 1;
            continue;
        }
        let resp = &ann.responses[0];
        queue.items.push(ReviewItem {
            post_id: id.clone(),
            text: post.text.clone(),
            origin_disorder: Some(origin),
            prediction: LabelState::Negative,
            raw_response: resp.raw_response.clone(),
            parse_status: resp.outcome.status,
            decision: Decision::Pending,
            decided_at: None,
            note: None,
        });
        queued += 1;
    }
    let auto = if args.auto_keep_all { queue.auto_keep_all() } else { 0 };
    queue.save(&args.queue)?;
    pass::check(&summary, &model, &args.queue)?;

    let mut record = ctx.run_record("screen");
    record.input(&args.input)?;
    record.provider_calls = summary.provider_calls;
    record.decoding.insert(model.clone(), ctx.decoding_entry(&model)?);
    record.params = json!({"screening_model": model, "auto_keep_all": args.auto_keep_all});
    record.write_beside(ctx, &args.queue)?;
    Ok(json!({
        "queue": args.queue,
        "screened": ids.len(),
        "auto_kept": kept,
        "queued": queued,
        "auto_decided_keep": auto,
        "pending": queue.pending(),
        "provider_calls": summary.provider_calls,
    }))
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub queue: PathBuf,
    /// Default: `review.port` from the config.
    #[arg(long)]
    pub port: Option<u16>,
    /// Directory of UI assets served at `/`.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
    /// Comorbidity export served at /api/matrix (default: `paths.matrix`).
    #[arg(long)]
    pub matrix: Option<PathBuf>,
}

pub fn review_serve(ctx: &mut Context, args: &ServeArgs) -> CliResult<Value> {
    let port = args.port.unwrap_or(ctx.cfg.config.review.port);
    let matrix = args
        .matrix
        .clone()
        .or_else(|| ctx.cfg.config.paths.matrix.as_ref().map(|p| ctx.cfg.resolve(p)));
    let static_dir = args
        .static_dir
        .clone()
        .or_else(|| ctx.cfg.config.review.static_dir.as_ref().map(|p| ctx.cfg.resolve(p)));
    let state = ReviewState::open(&args.queue, matrix.as_deref())?;
    if ctx.dry_run {
        return Ok(json!({"dry_run": true, "port": port, "queue": args.queue}));
    }
    serve(state, port, static_dir.as_deref())?;
    Ok(json!({"stopped": true}))
}

#[derive(Debug, Clone, Args)]
pub struct FinalizeArgs {
    /// Sampled dataset the queue was built from.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub queue: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Posts kept per disorder (default: `sample.final_per_disorder`).
    #[arg(long)]
    pub target: Option<usize>,
    /// Decide every pending item as keep before finalizing.
    #[arg(long)]
    pub auto_keep_all: bool,
}

/// Drops removed posts and draws the final per-disorder sample from the
/// survivors. Control posts pass through unchanged.
pub fn finalize(ctx: &mut Context, args: &FinalizeArgs) -> CliResult<Value> {
    let ds = ctx.load(&args.input)?;
    let mut queue = ReviewQueue::load(&args.queue)?;
    if args.auto_keep_all && queue.auto_keep_all() > 0 && !ctx.dry_run {
        queue.save(&args.queue)?;
    }
    let pending = queue.pending();
    if pending > 0 {
        return Err(CliError::user(format!(
            "queue not fully decided: {pending} pending (decide them in the review server or pass --auto-keep-all)"
        )));
    }
    let unscreened: Vec<&str> = ds
        .posts()
        .iter()
        .filter(|p| p.origin_disorder.is_some() && !queue.contains(&p.id))
        .map(|p| p.id.as_str())
        .collect();
    if !unscreened.is_empty() {
        return Err(CliError::user(format!(
            "{} sampled posts were never screened (first: `{}`); run `labelforge screen` first",
            unscreened.len(),
            unscreened[0]
        )));
    }

    let removed: HashSet<String> = queue
        .items
        .iter()
        .filter(|i| i.decision == Decision::Remove)
        .map(|i| i.post_id.clone())
        .filter(|id| ds.contains(id))
        .collect();
    let target = args.target.unwrap_or(ctx.cfg.config.sample.final_per_disorder);
    let seed = ctx.seed();
    let survivors = groups(&ds, GroupKey::OriginDisorder, &removed);
    let mut chosen: Vec<String> = Vec::new();
    let mut shortfalls = Vec::new();
    let mut survivor_counts: BTreeMap<String, usize> = BTreeMap::new();
    for (group, cands) in &survivors {
        if group == CONTROL_GROUP {
            chosen.extend(cands.iter().map(|s| s.to_string()));
            continue;
        }
        survivor_counts.insert(group.clone(), cands.len());
        match draw(cands, target, seed, group) {
            Ok(ids) => chosen.extend(ids),
            Err(_) => shortfalls.push(format!(
                "{group} {} of {target} (short {})",
                cands.len(),
                target - cands.len()
            )),
        }
    }
    if !shortfalls.is_empty() {
        return Err(CliError::user(format!(
            "not enough posts survived review: {}; draw replacements with `labelforge sample --top-up {} --count N`, screen them, then finalize again",
            shortfalls.join(", "),
            args.input.display()
        )));
    }

    let mut out = ds.subset(chosen.iter().map(String::as_str));
    let params = json!({
        "target_per_disorder": target,
        "removed": removed.len(),
        "survivors": survivor_counts,
        "selection": "seeded uniform draw per disorder group from review survivors",
        "seed": seed,
        "screening_model": queue.screening_model,
    });
    out.meta.name = "cleaned".into();
    out.meta.seed = Some(seed);
    out.meta.params.insert("finalize".into(), params.clone());
    if ctx.dry_run {
        return Ok(json!({"dry_run": true, "posts": out.len(), "params": params}));
    }
    ctx.save(&out, &args.output)?;
    let mut record = ctx.run_record("finalize");
    record.input(&args.input)?;
    record.input(&args.queue)?;
    record.params = params;
    record.write_beside(ctx, &args.output)?;
    Ok(json!({"output": args.output, "posts": out.len(), "removed": removed.len()}))
}
