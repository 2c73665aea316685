//! evaluate, analyze, report: scoring and co-occurrence exports.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use labelforge_core::analysis::{comorbidity_matrix, ComorbidityMatrix};
use labelforge_core::metrics::{balanced_subset, evaluate as score, render_table, MetricsReport, ModelSelection};
use labelforge_core::{DisorderId, LabelsSource, PromptKind};
use labelforge_gateway::{DisorderScope, PassOptions};
use serde_json::{json, Value};

use super::{parse_disorders, parse_kind, pass};
use crate::context::{sidecar, Context};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Dataset with truth labels.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_parser = parse_kind)]
    pub prompt: Option<PromptKind>,
    #[arg(long, conflicts_with = "vote")]
    pub model: Option<String>,
    /// Majority vote over these models (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub vote: Vec<String>,
    /// Score the power-set balanced subset instead of every post.
    #[arg(long)]
    pub balanced: bool,
    /// Default: every disorder with truth in the dataset.
    #[arg(long, value_delimiter = ',')]
    pub disorders: Vec<String>,
    /// Report path (JSON); an aligned table goes beside it as `.txt`.
    #[arg(short, long)]
    pub output: PathBuf,
}

/// Disorders that carry truth somewhere in the dataset, in registry order.
fn truth_disorders(ctx: &Context, ds: &labelforge_core::Dataset) -> CliResult<Vec<DisorderId>> {
    let mut seen: Vec<String> = ds
        .truth_map()
        .values()
        .flat_map(|v| v.iter().map(|(id, _)| id.to_string()))
        .collect();
    seen.sort();
    seen.dedup();
    if seen.is_empty() {
        return Err(CliError::user("dataset has no truth labels to evaluate against"));
    }
    parse_disorders(ctx, &seen)
}

pub fn evaluate(ctx: &mut Context, args: &EvaluateArgs) -> CliResult<Value> {
    let full = ctx.load(&args.input)?;
    let kind = args.prompt.unwrap_or(ctx.cfg.config.prompt_kind);
    let (selection, models) = match (&args.model, args.vote.is_empty()) {
        (Some(m), true) => (ModelSelection::Single { model_id: m.clone() }, vec![m.clone()]),
        (None, false) => (
            ModelSelection::MajorityVote {
                model_ids: args.vote.clone(),
            },
            args.vote.clone(),
        ),
        _ => return Err(CliError::user("pass exactly one of --model or --vote")),
    };
    let disorders = if args.disorders.is_empty() {
        truth_disorders(ctx, &full)?
    } else {
        parse_disorders(ctx, &args.disorders)?
    };
    let mut ds = if args.balanced {
        let mut b = balanced_subset(&full, &disorders, ctx.seed())?;
        b.meta = full.meta.clone();
        b
    } else {
        full
    };
    let ids: Vec<String> = ds
        .posts()
        .iter()
        .filter(|p| ds.truth(&p.id).is_some())
        .map(|p| p.id.clone())
        .collect();
    let opts = PassOptions {
        scope: DisorderScope::Fixed(disorders.clone()),
        skip_origin: false,
        record_timing: ctx.cfg.config.record_timing,
    };
    if ctx.dry_run {
        let plans = models
            .iter()
            .map(|m| pass::plan(ctx, &ds, &ids, m, kind, &opts))
            .collect::<CliResult<Vec<_>>>()?;
        return Ok(json!({"dry_run": true, "posts": ids.len(), "passes": plans}));
    }

    // Missing annotations are produced in memory only; the input is left as is.
    let mut record = ctx.run_record("evaluate");
    record.input(&args.input)?;
    for m in &models {
        let s = pass::run(ctx, &mut ds, &ids, m, kind, &opts, &args.output)?;
        pass::check(&s, m, &args.output)?;
        record.provider_calls += s.provider_calls;
        record.decoding.insert(m.clone(), ctx.decoding_entry(m)?);
    }
    let report = score(&ds, &selection, kind, &disorders)?;
    ctx.write_json(&args.output, &report)?;
    ctx.write_text(
        &sidecar(&args.output, "txt"),
        &render_table(std::slice::from_ref(&report)),
    )?;
    record.params = json!({
        "selection": selection,
        "prompt_kind": kind,
        "disorders": disorders,
        "balanced": args.balanced,
        "posts": ids.len(),
    });
    record.write_beside(ctx, &args.output)?;
    Ok(json!({
        "output": args.output,
        "model": selection.label(),
        "posts": report.posts,
        "micro_f1": report.overall.of1,
        "parse_failures": report.parse_failures,
    }))
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// `truth`, `canonical` or a model id.
    #[arg(long, default_value = "canonical")]
    pub labels: String,
    /// Prompt kind of the model labels (default: single_label).
    #[arg(long, value_parser = parse_kind)]
    pub prompt: Option<PromptKind>,
    #[arg(long, value_delimiter = ',')]
    pub disorders: Vec<String>,
    /// Matrix export (JSON); a text rendering goes beside it as `.txt`.
    #[arg(short, long)]
    pub output: PathBuf,
}

pub fn analyze(ctx: &mut Context, args: &AnalyzeArgs) -> CliResult<Value> {
    let ds = ctx.load(&args.input)?;
    let kind = args.prompt.unwrap_or(PromptKind::SingleLabel);
    let source = match args.labels.as_str() {
        "truth" => LabelsSource::Truth,
        "canonical" => LabelsSource::Model {
            model_id: ctx.cfg.canonical_model(),
            prompt_kind: kind,
        },
        m => LabelsSource::Model {
            model_id: m.to_string(),
            prompt_kind: kind,
        },
    };
    if let LabelsSource::Model { model_id, .. } = &source {
        if !ds.models(kind).contains(model_id) {
            return Err(CliError::user(format!(
                "{} has no {kind} annotations from `{model_id}`",
                args.input.display()
            )));
        }
    }
    let disorders = parse_disorders(ctx, &args.disorders)?;
    let matrix = comorbidity_matrix(&ds, &source, &disorders)?;
    if ctx.dry_run {
        return Ok(json!({"dry_run": true, "pairs": matrix.odds_ratios.len()}));
    }
    ctx.write_json(&args.output, &matrix)?;
    ctx.write_text(&sidecar(&args.output, "txt"), &render_matrix(&matrix))?;
    let mut record = ctx.run_record("analyze");
    record.input(&args.input)?;
    record.params = json!({"labels": source, "disorders": disorders});
    record.write_beside(ctx, &args.output)?;
    let top = matrix
        .odds_ratios
        .iter()
        .max_by(|a, b| a.odds_ratio.value.total_cmp(&b.odds_ratio.value))
        .map(|p| json!({"a": p.disorder_a, "b": p.disorder_b, "odds_ratio": p.odds_ratio.value}));
    Ok(json!({"output": args.output, "strongest_pair": top}))
}

/// OR grid followed by the row-conditional proportions.
pub fn render_matrix(m: &ComorbidityMatrix) -> String {
    let names: Vec<&str> = m.disorders.iter().map(DisorderId::as_str).collect();
    let w = names.iter().map(|n| n.len()).max().unwrap_or(0).max(8);
    let mut out = String::from("Odds ratios\n");
    let _ = write!(out, "{:w$}", "");
    for n in &names {
        let _ = write!(out, "  {n:>w$}");
    }
    out.push('\n');
    for (i, row) in m.or_matrix.iter().enumerate() {
        let _ = write!(out, "{:w$}", names[i]);
        for cell in row {
            match cell {
                Some(v) => {
                    let _ = write!(out, "  {v:>w$.3}");
                }
                None => {
                    let _ = write!(out, "  {:>w$}", "-");
                }
            }
        }
        out.push('\n');
    }
    out.push_str("\nP(B | A)\n");
    for r in &m.conditional {
        let p = &r.proportions;
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
        let _ = writeln!(
            out,
            "{} -> {}: P(B+|A+)={} P(B+|A-)={} [a={} b={} c={} d={}]",
            r.disorder_a,
            r.disorder_b,
            fmt(p.pos_given_pos),
            fmt(p.pos_given_neg),
            r.table.a,
            r.table.b,
            r.table.c,
            r.table.d
        );
    }
    out
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Evaluation reports written by `evaluate`.
    #[arg(long, num_args = 1.., required = true)]
    pub evaluations: Vec<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
}

pub fn report(ctx: &mut Context, args: &ReportArgs) -> CliResult<Value> {
    let mut reports: Vec<MetricsReport> = Vec::new();
    for p in &args.evaluations {
        let bytes = std::fs::read(p).map_err(|e| CliError::io(p, e))?;
        let r = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::user(format!("{}: not an evaluation report: {e}", p.display())))?;
        reports.push(r);
    }
    let table = render_table(&reports);
    if ctx.dry_run {
        return Ok(json!({"dry_run": true, "rows": reports.len()}));
    }
    ctx.write_text(&args.output, &table)?;
    let mut record = ctx.run_record("report");
    for p in &args.evaluations {
        record.input(p)?;
    }
    record.write_beside(ctx, &args.output)?;
    Ok(json!({"output": args.output, "rows": reports.len()}))
}
