//! Prompt templates and renderers.
//!
//! Templates live under `templates/` as plain text with `{The ...}` slots. A
//! template is split once into literal and slot segments; rendering concatenates
//! segments with slot values, so placeholder-looking text inside a post is never
//! expanded.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::RenderError;
use crate::registry::{Disorder, DisorderId, Registry};

const SINGLE_LABEL: &str = include_str!("../../../templates/single_label.txt");
const MULTI_LABEL_1: &str = include_str!("../../../templates/multi_label_1.txt");
const MULTI_LABEL_2: &str = include_str!("../../../templates/multi_label_2.txt");
const UNRESTRICTED: &str = include_str!("../../../templates/unrestricted.txt");

/// Residual class for the multi-label prompts.
pub const NORMAL: &str = "Normal";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    SingleLabel,
    #[serde(rename = "multi_label_1")]
    MultiLabel1,
    #[serde(rename = "multi_label_2")]
    MultiLabel2,
    Unrestricted,
}

impl PromptKind {
    pub const ALL: [PromptKind; 4] = [
        PromptKind::SingleLabel,
        PromptKind::MultiLabel1,
        PromptKind::MultiLabel2,
        PromptKind::Unrestricted,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptKind::SingleLabel => "single_label",
            PromptKind::MultiLabel1 => "multi_label_1",
            PromptKind::MultiLabel2 => "multi_label_2",
            PromptKind::Unrestricted => "unrestricted",
        }
    }

    pub fn template(self) -> &'static Template {
        static TEMPLATES: OnceLock<[Template; 4]> = OnceLock::new();
        let all = TEMPLATES.get_or_init(|| {
            [
                Template::parse(SINGLE_LABEL).expect("single_label template"),
                Template::parse(MULTI_LABEL_1).expect("multi_label_1 template"),
                Template::parse(MULTI_LABEL_2).expect("multi_label_2 template"),
                Template::parse(UNRESTRICTED).expect("unrestricted template"),
            ]
        });
        &all[self as usize]
    }

    /// Inverse of `template().hash()`.
    pub fn from_template_hash(hash: &str) -> Option<PromptKind> {
        PromptKind::ALL.into_iter().find(|k| k.template().hash() == hash)
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PromptKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| {
            format!("unknown prompt kind `{s}` (expected single_label, multi_label_1, multi_label_2 or unrestricted)")
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    TargetDisorder,
    TargetDisorders,
    ClassCount,
    ClassList,
    LabelCount,
    LabelList,
    Post,
}

impl Slot {
    const ALL: [Slot; 7] = [
        Slot::TargetDisorder,
        Slot::TargetDisorders,
        Slot::ClassCount,
        Slot::ClassList,
        Slot::LabelCount,
        Slot::LabelList,
        Slot::Post,
    ];

    pub fn placeholder(self) -> &'static str {
        match self {
            Slot::TargetDisorder => "{The target disorder}",
            Slot::TargetDisorders => "{The target disorders}",
            Slot::ClassCount => "{The class count}",
            Slot::ClassList => "{The class list}",
            Slot::LabelCount => "{The label count}",
            Slot::LabelList => "{The label list}",
            Slot::Post => "{The Post}",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Literal(String),
    Slot(Slot),
}

#[derive(Debug, Clone)]
pub struct Template {
    source: String,
    segments: Vec<Segment>,
    hash: String,
}

impl Template {
    pub fn parse(source: &str) -> Result<Self, RenderError> {
        let mut segments = Vec::new();
        let mut rest = source;
        let mut literal = String::new();
        while !rest.is_empty() {
            if let Some(slot) = Slot::ALL.into_iter().find(|s| rest.starts_with(s.placeholder())) {
                if !literal.is_empty() {
                    segments.push(Segment::Literal(std::mem::take(&mut literal)));
                }
                segments.push(Segment::Slot(slot));
                rest = &rest[slot.placeholder().len()..];
            } else {
                let ch = rest.chars().next().unwrap();
                literal.push(ch);
                rest = &rest[ch.len_utf8()..];
            }
        }
        if !literal.is_empty() {
            segments.push(Segment::Literal(literal));
        }
        let posts = segments.iter().filter(|s| **s == Segment::Slot(Slot::Post)).count();
        if posts != 1 || segments.last() != Some(&Segment::Slot(Slot::Post)) {
            return Err(RenderError::Template(
                "template must end with exactly one `{The Post}` slot".into(),
            ));
        }
        for pair in segments.windows(2) {
            if matches!(pair, [Segment::Slot(_), Segment::Slot(_)]) {
                return Err(RenderError::Template("adjacent slots are ambiguous".into()));
            }
        }
        Ok(Template {
            hash: sha256_hex(source.as_bytes()),
            source: source.to_string(),
            segments,
        })
    }

    /// SHA-256 (hex) of the template text with slots unfilled.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn slots(&self) -> impl Iterator<Item = Slot> + '_ {
        self.segments.iter().filter_map(|s| match s {
            Segment::Slot(slot) => Some(*slot),
            Segment::Literal(_) => None,
        })
    }

    fn fill(&self, value: impl Fn(Slot) -> String) -> String {
        let mut out = String::with_capacity(self.source.len() + 256);
        for seg in &self.segments {
            match seg {
                Segment::Literal(l) => out.push_str(l),
                Segment::Slot(s) => out.push_str(&value(*s)),
            }
        }
        out
    }

    /// Recovers slot values from a rendered prompt. Each non-final slot extends to
    /// the next literal; the post slot takes the remainder. Returns `None` when the
    /// literals do not line up or a repeated slot has inconsistent values.
    pub fn extract(&self, rendered: &str) -> Option<Vec<(Slot, String)>> {
        let mut rest = rendered;
        let mut values: Vec<(Slot, String)> = Vec::new();
        let mut iter = self.segments.iter().peekable();
        while let Some(seg) = iter.next() {
            match seg {
                Segment::Literal(l) => rest = rest.strip_prefix(l.as_str())?,
                Segment::Slot(slot) => {
                    let value = match iter.peek() {
                        Some(Segment::Literal(next)) => {
                            let end = rest.find(next.as_str())?;
                            let v = &rest[..end];
                            rest = &rest[end..];
                            v
                        }
                        _ => std::mem::take(&mut rest),
                    };
                    if let Some((_, prev)) = values.iter().find(|(s, _)| s == slot) {
                        if prev != value {
                            return None;
                        }
                    } else {
                        values.push((*slot, value.to_string()));
                    }
                }
            }
        }
        rest.is_empty().then_some(values)
    }

    /// The rendered text with every slot value replaced by its placeholder.
    pub fn reblank(&self, rendered: &str) -> Option<String> {
        self.extract(rendered)?;
        Some(self.fill(|s| s.placeholder().to_string()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub kind: PromptKind,
    /// Registry-ordered; empty for the unrestricted prompt.
    pub disorders: Vec<DisorderId>,
    pub post_id: String,
    pub text: String,
    pub template_hash: String,
}

impl RenderedPrompt {
    /// The rendered text with every slot re-blanked.
    pub fn reblank(&self) -> Option<String> {
        self.kind.template().reblank(&self.text)
    }

    pub fn post_text(&self) -> Option<String> {
        self.kind
            .template()
            .extract(&self.text)?
            .into_iter()
            .find(|(s, _)| *s == Slot::Post)
            .map(|(_, v)| v)
    }
}

/// One power-set class of the multi-class prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PowerSetClass {
    pub label: String,
    /// Positive disorders; empty for "Normal".
    pub members: Vec<DisorderId>,
}

/// All 2^n classes for `disorders` (registry-ordered): non-empty subsets by size,
/// then lexicographic by registry position, adjectives joined with " and ",
/// followed by "Normal".
pub fn power_set_classes(disorders: &[&Disorder]) -> Vec<PowerSetClass> {
    let n = disorders.len();
    let mut classes = Vec::with_capacity(1 << n);
    for size in 1..=n {
        for combo in combinations(n, size) {
            classes.push(PowerSetClass {
                label: combo
                    .iter()
                    .map(|&i| disorders[i].adjective.as_str())
                    .collect::<Vec<_>>()
                    .join(" and "),
                members: combo.iter().map(|&i| disorders[i].id.clone()).collect(),
            });
        }
    }
    classes.push(PowerSetClass {
        label: NORMAL.to_string(),
        members: Vec::new(),
    });
    classes
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

fn quoted_list<'a>(items: impl IntoIterator<Item = &'a str>) -> String {
    items
        .into_iter()
        .map(|s| format!("\"{s}\""))
        .collect::<Vec<_>>()
        .join(", ")
}

fn check_post(text: &str) -> Result<(), RenderError> {
    if text.trim().is_empty() {
        Err(RenderError::EmptyPost)
    } else {
        Ok(())
    }
}

fn resolve<'r, S: AsRef<str>>(registry: &'r Registry, ids: &[S]) -> Result<Vec<&'r Disorder>, RenderError> {
    registry.ordered(ids.iter().map(|s| s.as_ref())).map_err(|e| match e {
        crate::error::RegistryError::UnknownDisorder(id) => RenderError::UnknownDisorder(id),
        other => RenderError::Template(other.to_string()),
    })
}

pub fn render_single(
    registry: &Registry,
    disorder: &str,
    post_id: &str,
    post_text: &str,
) -> Result<RenderedPrompt, RenderError> {
    check_post(post_text)?;
    let d = registry
        .get(disorder)
        .ok_or_else(|| RenderError::UnknownDisorder(disorder.to_string()))?;
    let kind = PromptKind::SingleLabel;
    let template = kind.template();
    let text = template.fill(|slot| match slot {
        Slot::Post => post_text.to_string(),
        _ => d.display_name.clone(),
    });
    Ok(RenderedPrompt {
        kind,
        disorders: vec![d.id.clone()],
        post_id: post_id.to_string(),
        text,
        template_hash: template.hash().to_string(),
    })
}

fn target_disorders(disorders: &[&Disorder]) -> String {
    disorders
        .iter()
        .map(|d| d.display_name.as_str())
        .collect::<Vec<_>>()
        .join(" or ")
}

fn multi_label<S: AsRef<str>>(
    kind: PromptKind,
    registry: &Registry,
    disorders: &[S],
    post_id: &str,
    post_text: &str,
) -> Result<RenderedPrompt, RenderError> {
    let resolved = resolve(registry, disorders)?;
    if resolved.len() < 2 {
        return Err(RenderError::DisorderCount {
            kind: kind.as_str(),
            expected: "at least 2",
            got: resolved.len(),
        });
    }
    check_post(post_text)?;
    let classes = power_set_classes(&resolved);
    let template = kind.template();
    let text = template.fill(|slot| match slot {
        Slot::TargetDisorders => target_disorders(&resolved),
        Slot::ClassCount => classes.len().to_string(),
        Slot::ClassList => quoted_list(classes.iter().map(|c| c.label.as_str())),
        Slot::LabelCount => resolved.len().to_string(),
        Slot::LabelList => quoted_list(resolved.iter().map(|d| d.adjective.as_str())),
        Slot::Post => post_text.to_string(),
        Slot::TargetDisorder => unreachable!("multi-label templates have no single target slot"),
    });
    Ok(RenderedPrompt {
        kind,
        disorders: resolved.iter().map(|d| d.id.clone()).collect(),
        post_id: post_id.to_string(),
        text,
        template_hash: template.hash().to_string(),
    })
}

/// Multi-class prompt: one answer out of the 2^n power-set classes.
pub fn render_multilabel_1<S: AsRef<str>>(
    registry: &Registry,
    disorders: &[S],
    post_id: &str,
    post_text: &str,
) -> Result<RenderedPrompt, RenderError> {
    multi_label(PromptKind::MultiLabel1, registry, disorders, post_id, post_text)
}

/// Multi-label prompt: any combination of the n adjectives, or "Normal".
pub fn render_multilabel_2<S: AsRef<str>>(
    registry: &Registry,
    disorders: &[S],
    post_id: &str,
    post_text: &str,
) -> Result<RenderedPrompt, RenderError> {
    multi_label(PromptKind::MultiLabel2, registry, disorders, post_id, post_text)
}

pub fn render_unrestricted(post_id: &str, post_text: &str) -> Result<RenderedPrompt, RenderError> {
    check_post(post_text)?;
    let kind = PromptKind::Unrestricted;
    let template = kind.template();
    Ok(RenderedPrompt {
        kind,
        disorders: Vec::new(),
        post_id: post_id.to_string(),
        text: template.fill(|_| post_text.to_string()),
        template_hash: template.hash().to_string(),
    })
}
