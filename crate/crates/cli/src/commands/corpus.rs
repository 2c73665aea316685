//! merge, sample: building the source datasets.

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use clap::Args;
use labelforge_core::analysis::{conditional_proportions, contingency, odds_ratio};
use labelforge_core::corpus::{
    groups, load_depseverity, load_dreaddit, load_rmhd, merge_depseverity_dreaddit, sample_groups, sample_rmhd,
    DepSeverityColumns, DreadditColumns, GroupKey, RmhdColumns, SubredditFilter, CONTROL_GROUP,
};
use labelforge_core::{Dataset, DatasetMeta, LabelsSource};
use serde_json::{json, Value};

use crate::context::{sidecar, Context};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Args)]
pub struct MergeArgs {
    #[arg(long)]
    pub dreaddit: PathBuf,
    #[arg(long)]
    pub depseverity: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Overrides `merge.min_join_rate` from the config.
    #[arg(long)]
    pub min_join_rate: Option<f64>,
}

pub fn merge(ctx: &mut Context, args: &MergeArgs) -> CliResult<Value> {
    let d = load_dreaddit(&args.dreaddit, &DreadditColumns::default())?;
    let s = load_depseverity(&args.depseverity, &DepSeverityColumns::default())?;
    let min = args.min_join_rate.unwrap_or(ctx.cfg.config.merge.min_join_rate);
    let outcome = merge_depseverity_dreaddit(&d.records, &s.records, min)?;
    let ds = outcome.dataset;

    let t = contingency(&ds, &LabelsSource::Truth, "depression", "stress")?;
    let summary = json!({
        "posts": ds.len(),
        "cells": {
            "depression+ stress+": t.a,
            "depression+ stress-": t.b,
            "depression- stress+": t.c,
            "depression- stress-": t.d,
        },
        "table": t,
        "conditional": conditional_proportions(&t),
        "odds_ratio": odds_ratio(&t),
        "skipped_rows": {"dreaddit": d.skipped.len(), "depseverity": s.skipped.len()},
        "join": outcome.report,
    });
    if ctx.dry_run {
        return Ok(json!({"dry_run": true, "summary": summary}));
    }
    ctx.save(&ds, &args.output)?;
    ctx.write_json(&sidecar(&args.output, "summary.json"), &summary)?;
    let mut record = ctx.run_record("merge");
    record.input(&args.dreaddit)?;
    record.input(&args.depseverity)?;
    record.params = json!({"min_join_rate": min});
    record.write_beside(ctx, &args.output)?;
    Ok(json!({"output": args.output, "posts": ds.len(), "cells": summary["cells"]}))
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    /// RMHD export (CSV).
    #[arg(long)]
    pub rmhd: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Posts per disorder subreddit (default: `sample.initial_per_disorder`).
    #[arg(long)]
    pub per_disorder: Option<usize>,
    /// Control posts in total (default: `sample.controls`).
    #[arg(long)]
    pub controls: Option<usize>,
    /// Extend this earlier sample with fresh posts instead of drawing anew.
    #[arg(long, requires = "count")]
    pub top_up: Option<PathBuf>,
    /// Fresh posts per disorder in a top-up round.
    #[arg(long)]
    pub count: Option<usize>,
    /// Restrict a top-up round to these disorder groups.
    #[arg(long, value_delimiter = ',')]
    pub groups: Vec<String>,
    #[arg(long, default_value = "subreddit")]
    pub subreddit_column: String,
    #[arg(long, default_value = "post")]
    pub text_column: String,
    #[arg(long)]
    pub id_column: Option<String>,
}

pub fn sample(ctx: &mut Context, args: &SampleArgs) -> CliResult<Value> {
    let cols = RmhdColumns {
        subreddit: args.subreddit_column.clone(),
        text: args.text_column.clone(),
        id: args.id_column.clone(),
    };
    let loaded = load_rmhd(&args.rmhd, &cols, &SubredditFilter::default())?;
    let pool_size = loaded.records.len();
    let pool = Dataset::from_posts(DatasetMeta::default(), loaded.records)?;
    let seed = ctx.seed();

    let (out, params) = match &args.top_up {
        None => {
            let per = args.per_disorder.unwrap_or(ctx.cfg.config.sample.initial_per_disorder);
            let controls = args.controls.unwrap_or(ctx.cfg.config.sample.controls);
            let ids = sample_rmhd(&pool, per, controls, seed, &HashSet::new())?;
            let mut out = pool.subset(ids.iter().map(String::as_str));
            out.meta.name = "rmhd-sample".into();
            let params = json!({
                "per_disorder": per,
                "controls": controls,
                "seed": seed,
                "pool": pool_size,
                "skipped_rows": loaded.skipped.len(),
            });
            (out, params)
        }
        Some(prev_path) => {
            let mut prev = ctx.load(prev_path)?;
            let count = args.count.expect("clap requires --count");
            let exclude: HashSet<String> = prev.posts().iter().map(|p| p.id.clone()).collect();
            let present = groups(&pool, GroupKey::OriginDisorder, &HashSet::new());
            let mut sizes: BTreeMap<String, usize> = BTreeMap::new();
            for g in present.keys().filter(|g| *g != CONTROL_GROUP) {
                if args.groups.is_empty() || args.groups.contains(g) {
                    sizes.insert(g.clone(), count);
                }
            }
            if let Some(bad) = args.groups.iter().find(|g| !sizes.contains_key(*g)) {
                return Err(CliError::user(format!("unknown disorder group `{bad}` for --groups")));
            }
            // Each round draws from a distinct stream so repeated top-ups never
            // replay an earlier round's choices.
            let round = prev
                .meta
                .params
                .get("top_up_rounds")
                .and_then(Value::as_u64)
                .unwrap_or(0)
                + 1;
            let round_seed = seed.wrapping_add(round.wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let ids = sample_groups(&pool, GroupKey::OriginDisorder, &sizes, round_seed, &exclude)?;
            let fresh = pool.subset(ids.iter().map(String::as_str));
            for p in fresh.posts() {
                prev.push_post(p.clone())?;
            }
            prev.meta.params.insert("top_up_rounds".into(), json!(round));
            let params = json!({
                "top_up_of": prev_path.file_name().map(|n| n.to_string_lossy().into_owned()),
                "round": round,
                "count": count,
                "groups": sizes.keys().collect::<Vec<_>>(),
                "seed": seed,
                "added": ids.len(),
            });
            (prev, params)
        }
    };

    let mut out = out;
    out.meta.seed = Some(seed);
    let key = if args.top_up.is_some() { "top_up" } else { "sample" };
    out.meta.params.insert(key.into(), params.clone());
    if ctx.dry_run {
        return Ok(json!({"dry_run": true, "posts": out.len(), "params": params}));
    }
    ctx.save(&out, &args.output)?;
    let mut record = ctx.run_record("sample");
    record.input(&args.rmhd)?;
    if let Some(p) = &args.top_up {
        record.input(p)?;
    }
    record.params = params;
    record.write_beside(ctx, &args.output)?;
    Ok(json!({"output": args.output, "posts": out.len()}))
}
