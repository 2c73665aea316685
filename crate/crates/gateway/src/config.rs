//! Provider configuration as read from the pipeline config file.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::GatewayError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    /// Backend profile name: openai, groq, mistral, azure or stub.
    pub provider: String,
    pub model_id: String,
    #[serde(default)]
    pub base_url: Option<String>,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_concurrency")]
    pub max_concurrent: usize,
    #[serde(default = "default_rpm")]
    pub requests_per_minute: u32,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_output_tokens: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Azure deployments need an api-version query parameter.
    #[serde(default)]
    pub api_version: Option<String>,
    #[serde(default)]
    pub retry: RetryPolicy,
    #[serde(default)]
    pub stub: StubSettings,
}

fn default_concurrency() -> usize {
    4
}
fn default_rpm() -> u32 {
    60
}
fn default_max_tokens() -> u32 {
    64
}
fn default_timeout() -> u64 {
    60
}

impl ProviderConfig {
    pub fn stub(model_id: &str, seed: u64) -> Self {
        ProviderConfig {
            provider: "stub".into(),
            model_id: model_id.into(),
            base_url: None,
            api_key_env: None,
            max_concurrent: default_concurrency(),
            requests_per_minute: 600_000,
            temperature: 0.0,
            max_output_tokens: default_max_tokens(),
            timeout_secs: default_timeout(),
            api_version: None,
            retry: RetryPolicy::default(),
            stub: StubSettings {
                seed,
                ..StubSettings::default()
            },
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.max_concurrent == 0 {
            return Err(GatewayError::Config(format!(
                "{}: max_concurrent must be at least 1",
                self.model_id
            )));
        }
        if self.requests_per_minute == 0 {
            return Err(GatewayError::Config(format!(
                "{}: requests_per_minute must be at least 1",
                self.model_id
            )));
        }
        if self.max_output_tokens == 0 {
            return Err(GatewayError::Config(format!(
                "{}: max_output_tokens must be at least 1",
                self.model_id
            )));
        }
        if !(0.0..=1.0).contains(&self.stub.positive_rate) || !(0.0..=1.0).contains(&self.stub.noise_rate) {
            return Err(GatewayError::Config(format!(
                "{}: stub rates must lie in [0, 1]",
                self.model_id
            )));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
    pub multiplier: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            initial_backoff_ms: 500,
            max_backoff_ms: 30_000,
            multiplier: 2.0,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (1-based).
    pub fn backoff(&self, retry: u32) -> Duration {
        let factor = self.multiplier.max(1.0).powi(retry.saturating_sub(1) as i32);
        let ms = (self.initial_backoff_ms as f64 * factor).min(self.max_backoff_ms as f64);
        Duration::from_millis(ms as u64)
    }
}

/// Knobs for the deterministic stub backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StubSettings {
    pub seed: u64,
    /// Per-disorder probability of a positive answer.
    pub positive_rate: f64,
    /// Probability of an off-contract answer.
    pub noise_rate: f64,
}

impl Default for StubSettings {
    fn default() -> Self {
        StubSettings {
            seed: 0,
            positive_rate: 0.3,
            noise_rate: 0.0,
        }
    }
}
