//! Deterministic stand-in for a real provider.
//!
//! The answer is a pure function of the prompt bytes and the seed, so runs
//! are reproducible across processes without touching the network.

use labelforge_core::prompt::NORMAL;
use labelforge_core::{PromptKind, Registry, RenderedPrompt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::backend::{CompletionBackend, CompletionRequest};
use crate::config::StubSettings;
use crate::error::AttemptError;

/// Off-contract answers. Every one is long free text naming no disorder, so no
/// parser accepts it as on-contract.
pub const NOISE_RESPONSES: [&str; 5] = [
    "I am not able to make a diagnosis from a single social media post.",
    "It is hard to tell from this post alone what the writer is going through.",
    "The writer seems to be going through a difficult time right now.",
    "There is not enough information here to give a confident answer.",
    "As an assistant I would recommend the writer talks to a professional.",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StubDraw {
    pub response: String,
    pub noisy: bool,
}

pub struct StubBackend {
    settings: StubSettings,
    registry: Registry,
}

impl StubBackend {
    pub fn new(settings: StubSettings, registry: Registry) -> Self {
        StubBackend { settings, registry }
    }

    fn rng_for(&self, prompt: &RenderedPrompt) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.settings.seed.to_le_bytes());
        h.update(prompt.text.as_bytes());
        ChaCha8Rng::from_seed(h.finalize().into())
    }

    pub fn draw(&self, prompt: &RenderedPrompt) -> Option<StubDraw> {
        let kind = PromptKind::from_template_hash(&prompt.template_hash)?;
        let mut rng = self.rng_for(prompt);
        if rng.random_bool(self.settings.noise_rate) {
            let i = rng.random_range(0..NOISE_RESPONSES.len());
            return Some(StubDraw {
                response: NOISE_RESPONSES[i].to_string(),
                noisy: true,
            });
        }
        let p = self.settings.positive_rate;
        let response = match kind {
            PromptKind::SingleLabel => if rng.random_bool(p) { "Yes" } else { "No" }.to_string(),
            PromptKind::MultiLabel1 | PromptKind::MultiLabel2 => {
                let ordered = self
                    .registry
                    .ordered(prompt.disorders.iter().map(|d| d.as_str()))
                    .ok()?;
                let picked: Vec<&str> = ordered
                    .iter()
                    .filter(|_| rng.random_bool(p))
                    .map(|d| d.adjective.as_str())
                    .collect();
                let sep = if kind == PromptKind::MultiLabel1 { " and " } else { ", " };
                join_or_normal(&picked, sep)
            }
            PromptKind::Unrestricted => {
                let picked: Vec<&str> = self
                    .registry
                    .disorders()
                    .iter()
                    .filter(|_| rng.random_bool(p))
                    .map(|d| d.display_name.as_str())
                    .collect();
                join_or_normal(&picked, ", ")
            }
        };
        Some(StubDraw { response, noisy: false })
    }
}

fn join_or_normal(picked: &[&str], sep: &str) -> String {
    if picked.is_empty() {
        NORMAL.to_string()
    } else {
        picked.join(sep)
    }
}

impl CompletionBackend for StubBackend {
    fn name(&self) -> &str {
        "stub"
    }

    fn complete(&self, req: &CompletionRequest<'_>) -> Result<String, AttemptError> {
        self.draw(req.prompt)
            .map(|d| d.response)
            .ok_or_else(|| AttemptError::Fatal {
                status: None,
                message: "stub cannot recognize the prompt template".into(),
            })
    }
}
