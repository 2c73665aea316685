//! One module per pipeline stage group.

pub mod corpus;
pub mod evaluation;
pub mod labeling;
pub mod pass;
pub mod review;

use labelforge_core::{DisorderId, PromptKind};

use crate::context::Context;
use crate::error::{CliError, CliResult};

pub fn parse_kind(s: &str) -> Result<PromptKind, String> {
    s.parse()
}

/// Registry-ordered disorder ids; an empty list means the configured set.
pub fn parse_disorders(ctx: &Context, raw: &[String]) -> CliResult<Vec<DisorderId>> {
    if raw.is_empty() {
        return Ok(ctx.cfg.config.disorders.clone());
    }
    let ordered = ctx
        .registry
        .ordered(raw.iter().map(|s| s.trim()))
        .map_err(|e| CliError::user(e.to_string()))?;
    Ok(ordered.iter().map(|d| d.id.clone()).collect())
}
