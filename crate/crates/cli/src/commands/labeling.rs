//! annotate, build: attach model labels to a dataset.

use std::path::PathBuf;

use clap::Args;
use labelforge_core::analysis::label_distribution;
use labelforge_core::{DisorderId, LabelSource, LabelState, LabelsSource, PromptKind};
use labelforge_gateway::{DisorderScope, PassOptions};
use serde_json::{json, Value};

use super::{parse_disorders, parse_kind, pass};
use crate::context::{sidecar, Context};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Args)]
pub struct AnnotateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, value_parser = parse_kind)]
    pub prompt: Option<PromptKind>,
    /// Model ids to run (default: the configured annotation models).
    #[arg(long = "model")]
    pub models: Vec<String>,
    /// Comma-separated disorder ids (default: the configured disorders).
    #[arg(long, value_delimiter = ',')]
    pub disorders: Vec<String>,
    /// Do not ask about a post's origin disorder.
    #[arg(long)]
    pub skip_origin: bool,
}

pub fn annotate(ctx: &mut Context, args: &AnnotateArgs) -> CliResult<Value> {
    let mut ds = ctx.load(&args.input)?;
    let kind = args.prompt.unwrap_or(ctx.cfg.config.prompt_kind);
    let disorders = parse_disorders(ctx, &args.disorders)?;
    let models = if args.models.is_empty() {
        ctx.cfg.annotation_models()
    } else {
        args.models.clone()
    };
    let opts = PassOptions {
        scope: DisorderScope::Fixed(disorders),
        skip_origin: args.skip_origin,
        record_timing: ctx.cfg.config.record_timing,
    };
    let ids: Vec<String> = ds.posts().iter().map(|p| p.id.clone()).collect();
    if ctx.dry_run {
        let plans = models
            .iter()
            .map(|m| pass::plan(ctx, &ds, &ids, m, kind, &opts))
            .collect::<CliResult<Vec<_>>>()?;
        return Ok(json!({"dry_run": true, "passes": plans}));
    }

    let mut record = ctx.run_record("annotate");
    record.input(&args.input)?;
    let mut passes = Vec::new();
    for m in &models {
        let s = pass::run(ctx, &mut ds, &ids, m, kind, &opts, &args.output)?;
        if !s.failed.is_empty() {
            ctx.save(&ds, &args.output)?;
            pass::check(&s, m, &args.output)?;
        }
        record.provider_calls += s.provider_calls;
        record.decoding.insert(m.clone(), ctx.decoding_entry(m)?);
        passes.push(pass::summary_json(m, &s));
    }
    ctx.save(&ds, &args.output)?;
    record.params = json!({"prompt_kind": kind, "scope": opts.describe(), "models": models});
    record.write_beside(ctx, &args.output)?;
    Ok(json!({"output": args.output, "passes": passes}))
}

#[derive(Debug, Clone, Args)]
pub struct BuildArgs {
    /// Finalized dataset.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long = "model")]
    pub models: Vec<String>,
    #[arg(long, value_parser = parse_kind)]
    pub prompt: Option<PromptKind>,
    /// Where to write the label distribution (default: beside the output).
    #[arg(long)]
    pub distribution: Option<PathBuf>,
}

/// Origin cells become positive truth from provenance; every other disorder
/// is labeled by each configured model.
pub fn build(ctx: &mut Context, args: &BuildArgs) -> CliResult<Value> {
    let mut ds = ctx.load(&args.input)?;
    let disorders = ctx.cfg.config.disorders.clone();
    let kind = args.prompt.unwrap_or(PromptKind::SingleLabel);
    let models = if args.models.is_empty() {
        ctx.cfg.annotation_models()
    } else {
        args.models.clone()
    };
    let canonical = ctx.cfg.canonical_model();
    if !models.contains(&canonical) {
        return Err(CliError::user(format!(
            "canonical model `{canonical}` is not among the build models ({})",
            models.join(", ")
        )));
    }

    let origins: Vec<(String, DisorderId)> = ds
        .posts()
        .iter()
        .filter_map(|p| p.origin_disorder.clone().map(|o| (p.id.clone(), o)))
        .collect();
    for (id, o) in &origins {
        if !disorders.contains(o) {
            return Err(CliError::user(format!(
                "post `{id}` comes from `{o}`, which is not among the configured disorders"
            )));
        }
        ds.set_truth(id, o.clone(), LabelState::Positive, LabelSource::Origin)?;
    }
    let ids: Vec<String> = ds
        .posts()
        .iter()
        .filter(|p| ctx.cfg.config.annotate_controls || !p.is_control)
        .map(|p| p.id.clone())
        .collect();
    let opts = PassOptions {
        scope: DisorderScope::Fixed(disorders.clone()),
        skip_origin: true,
        record_timing: ctx.cfg.config.record_timing,
    };
    if ctx.dry_run {
        let plans = models
            .iter()
            .map(|m| pass::plan(ctx, &ds, &ids, m, kind, &opts))
            .collect::<CliResult<Vec<_>>>()?;
        return Ok(json!({"dry_run": true, "origin_cells": origins.len(), "passes": plans}));
    }

    let mut record = ctx.run_record("build");
    record.input(&args.input)?;
    let mut passes = Vec::new();
    for m in &models {
        let s = pass::run(ctx, &mut ds, &ids, m, kind, &opts, &args.output)?;
        if !s.failed.is_empty() {
            ctx.save(&ds, &args.output)?;
            pass::check(&s, m, &args.output)?;
        }
        record.provider_calls += s.provider_calls;
        record.decoding.insert(m.clone(), ctx.decoding_entry(m)?);
        passes.push(pass::summary_json(m, &s));
    }
    ds.meta.name = "spaade".into();
    ds.meta.seed = Some(ctx.seed());
    let params = json!({
        "models": models,
        "canonical_model": canonical,
        "prompt_kind": kind,
        "disorders": disorders,
        "annotate_controls": ctx.cfg.config.annotate_controls,
        "origin_cells": origins.len(),
    });
    ds.meta.params.insert("build".into(), params.clone());
    ctx.save(&ds, &args.output)?;

    let sources: Vec<(String, LabelsSource)> = models
        .iter()
        .map(|m| {
            (
                m.clone(),
                LabelsSource::Model {
                    model_id: m.clone(),
                    prompt_kind: kind,
                },
            )
        })
        .collect();
    let dist = label_distribution(&ds, &sources, &disorders);
    let dist_path = args
        .distribution
        .clone()
        .unwrap_or_else(|| sidecar(&args.output, "distribution.json"));
    ctx.write_json(&dist_path, &dist)?;
    ctx.write_text(&sidecar(&dist_path, "txt"), &dist.render_table())?;

    record.params = params;
    record.write_beside(ctx, &args.output)?;
    Ok(json!({
        "output": args.output,
        "posts": ds.len(),
        "distribution": dist_path,
        "passes": passes,
    }))
}
