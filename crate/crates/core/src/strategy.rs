//! Prompt strategies: each prompt kind pairs a renderer with its parser behind
//! one trait, registered by name and selected at runtime.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::dataset::Post;
use crate::error::RenderError;
use crate::parser::{self, ParseOutcome};
use crate::prompt::{self, PromptKind, RenderedPrompt};
use crate::registry::{DisorderId, Registry};

pub trait PromptStrategy: Send + Sync {
    fn kind(&self) -> PromptKind;

    /// Every prompt needed to label `post` for `disorders`.
    fn prompts(
        &self,
        registry: &Registry,
        post: &Post,
        disorders: &[DisorderId],
    ) -> Result<Vec<RenderedPrompt>, RenderError>;

    fn parse(&self, registry: &Registry, prompt: &RenderedPrompt, raw: &str) -> ParseOutcome;
}

pub struct SingleLabel;

impl PromptStrategy for SingleLabel {
    fn kind(&self) -> PromptKind {
        PromptKind::SingleLabel
    }

    fn prompts(
        &self,
        registry: &Registry,
        post: &Post,
        disorders: &[DisorderId],
    ) -> Result<Vec<RenderedPrompt>, RenderError> {
        let ordered = registry
            .ordered(disorders.iter().map(DisorderId::as_str))
            .map_err(|e| RenderError::UnknownDisorder(e.to_string()))?;
        ordered
            .iter()
            .map(|d| prompt::render_single(registry, d.id.as_str(), &post.id, &post.text))
            .collect()
    }

    fn parse(&self, _registry: &Registry, prompt: &RenderedPrompt, raw: &str) -> ParseOutcome {
        match prompt.disorders.first() {
            Some(d) => parser::parse_single(raw, d),
            None => parser::parse_single(raw, &DisorderId::new("")),
        }
    }
}

pub struct MultiClass;

impl PromptStrategy for MultiClass {
    fn kind(&self) -> PromptKind {
        PromptKind::MultiLabel1
    }

    fn prompts(
        &self,
        registry: &Registry,
        post: &Post,
        disorders: &[DisorderId],
    ) -> Result<Vec<RenderedPrompt>, RenderError> {
        Ok(vec![prompt::render_multilabel_1(
            registry, disorders, &post.id, &post.text,
        )?])
    }

    fn parse(&self, registry: &Registry, prompt: &RenderedPrompt, raw: &str) -> ParseOutcome {
        parser::parse_multiclass(raw, registry, &prompt.disorders)
    }
}

pub struct MultiLabel;

impl PromptStrategy for MultiLabel {
    fn kind(&self) -> PromptKind {
        PromptKind::MultiLabel2
    }

    fn prompts(
        &self,
        registry: &Registry,
        post: &Post,
        disorders: &[DisorderId],
    ) -> Result<Vec<RenderedPrompt>, RenderError> {
        Ok(vec![prompt::render_multilabel_2(
            registry, disorders, &post.id, &post.text,
        )?])
    }

    fn parse(&self, registry: &Registry, prompt: &RenderedPrompt, raw: &str) -> ParseOutcome {
        parser::parse_multilabel(raw, registry, &prompt.disorders)
    }
}

pub struct Unrestricted;

impl PromptStrategy for Unrestricted {
    fn kind(&self) -> PromptKind {
        PromptKind::Unrestricted
    }

    fn prompts(
        &self,
        _registry: &Registry,
        post: &Post,
        _disorders: &[DisorderId],
    ) -> Result<Vec<RenderedPrompt>, RenderError> {
        Ok(vec![prompt::render_unrestricted(&post.id, &post.text)?])
    }

    fn parse(&self, registry: &Registry, _prompt: &RenderedPrompt, raw: &str) -> ParseOutcome {
        parser::parse_unrestricted(raw, registry)
    }
}

#[derive(Clone)]
pub struct StrategyRegistry {
    strategies: BTreeMap<String, Arc<dyn PromptStrategy>>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        StrategyRegistry {
            strategies: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &str, strategy: Arc<dyn PromptStrategy>) {
        self.strategies.insert(name.to_string(), strategy);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn PromptStrategy>> {
        self.strategies.get(name).cloned()
    }

    pub fn for_kind(&self, kind: PromptKind) -> Option<Arc<dyn PromptStrategy>> {
        self.get(kind.as_str())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.strategies.keys().map(String::as_str)
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        let mut r = StrategyRegistry::empty();
        let all: [Arc<dyn PromptStrategy>; 4] = [
            Arc::new(SingleLabel),
            Arc::new(MultiClass),
            Arc::new(MultiLabel),
            Arc::new(Unrestricted),
        ];
        for s in all {
            r.register(s.kind().as_str(), s);
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::CorpusTag;

    #[test]
    fn default_registry_covers_all_kinds() {
        let r = StrategyRegistry::default();
        for k in PromptKind::ALL {
            assert_eq!(r.for_kind(k).unwrap().kind(), k);
        }
        assert_eq!(r.names().count(), 4);
    }

    #[test]
    fn single_label_issues_one_prompt_per_disorder() {
        let reg = Registry::builtin();
        let post = Post::new("p", "text", CorpusTag::Rmhd);
        let ds: Vec<DisorderId> = ["ptsd", "adhd", "anxiety"]
            .iter()
            .map(|s| DisorderId::new(*s))
            .collect();
        let s = StrategyRegistry::default();
        let single = s.get("single_label").unwrap().prompts(&reg, &post, &ds).unwrap();
        assert_eq!(single.len(), 3);
        assert_eq!(single[0].disorders, vec![DisorderId::new("anxiety")]);
        let multi = s.get("multi_label_2").unwrap().prompts(&reg, &post, &ds).unwrap();
        assert_eq!(multi.len(), 1);
        let unres = s.get("unrestricted").unwrap().prompts(&reg, &post, &ds).unwrap();
        assert!(unres[0].disorders.is_empty());
    }
}
