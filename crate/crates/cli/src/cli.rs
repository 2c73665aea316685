use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{corpus, evaluation, labeling, review};

#[derive(Debug, Parser)]
#[command(
    name = "labelforge",
    version,
    about = "LLM-assisted multi-label annotation of mental-health posts"
)]
pub struct Cli {
    /// Pipeline config (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Report what would run without calling providers or writing artifacts.
    #[arg(long, global = true)]
    pub dry_run: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Join Dreaddit and DepSeverity into one depression/stress dataset.
    Merge(corpus::MergeArgs),
    /// Draw the initial RMHD sample, or top one up.
    Sample(corpus::SampleArgs),
    /// Screen sampled posts against their origin disorder.
    Screen(review::ScreenArgs),
    /// Serve the review API (and UI assets).
    ReviewServe(review::ServeArgs),
    /// Apply review decisions and draw the final sample.
    Finalize(review::FinalizeArgs),
    /// Label a finalized dataset with every configured model.
    Build(labeling::BuildArgs),
    /// Run annotation passes over a dataset.
    Annotate(labeling::AnnotateArgs),
    /// Score model labels against truth.
    Evaluate(evaluation::EvaluateArgs),
    /// Export the pairwise co-occurrence matrix.
    Analyze(evaluation::AnalyzeArgs),
    /// Render evaluation reports as one table.
    Report(evaluation::ReportArgs),
}
