//! Cache-first, rate-limited, retrying completion client for one provider.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use labelforge_core::prompt::sha256_hex;
use labelforge_core::{Registry, RenderedPrompt};

use crate::backend::{BackendRegistry, CompletionBackend, CompletionRequest};
use crate::cache::{cache_key, CacheRecord, ResponseCache};
use crate::config::ProviderConfig;
use crate::error::{AttemptError, GatewayError};
use crate::rate::{Clock, RateLimiter, SystemClock};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub cached: bool,
    pub latency_ms: u64,
    pub attempts: u32,
}

pub struct Gateway {
    config: ProviderConfig,
    backend: Box<dyn CompletionBackend>,
    cache: Option<Arc<ResponseCache>>,
    limiter: RateLimiter,
    clock: Arc<dyn Clock>,
    calls: AtomicU64,
}

impl Gateway {
    pub fn new(config: ProviderConfig, backend: Box<dyn CompletionBackend>, cache: Option<Arc<ResponseCache>>) -> Self {
        Self::with_clock(config, backend, cache, Arc::new(SystemClock::new()))
    }

    pub fn with_clock(
        config: ProviderConfig,
        backend: Box<dyn CompletionBackend>,
        cache: Option<Arc<ResponseCache>>,
        clock: Arc<dyn Clock>,
    ) -> Self {
        let limiter = RateLimiter::per_minute(config.requests_per_minute, clock.clone());
        Gateway {
            config,
            backend,
            cache,
            limiter,
            clock,
            calls: AtomicU64::new(0),
        }
    }

    /// Builds the backend named in `config` and resolves its credentials.
    pub fn from_config(
        config: ProviderConfig,
        backends: &BackendRegistry,
        registry: &Registry,
        cache: Option<Arc<ResponseCache>>,
    ) -> Result<Self, GatewayError> {
        let backend = backends.build(&config, registry)?;
        Ok(Self::new(config, backend, cache))
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    pub fn model_id(&self) -> &str {
        &self.config.model_id
    }

    /// Backend attempts made so far; cache hits do not count.
    pub fn provider_calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn complete(&self, prompt: &RenderedPrompt) -> Result<Completion, GatewayError> {
        let key = cache_key(&self.config.model_id, self.config.temperature, &prompt.text);
        if let Some(text) = self.cache.as_ref().and_then(|c| c.get(&key)) {
            return Ok(Completion {
                text,
                cached: true,
                latency_ms: 0,
                attempts: 0,
            });
        }

        let request = CompletionRequest {
            prompt,
            model_id: &self.config.model_id,
            temperature: self.config.temperature,
            max_output_tokens: self.config.max_output_tokens,
        };
        let max_attempts = self.config.retry.max_attempts.max(1);
        let mut attempt = 0;
        loop {
            attempt += 1;
            let started = self.limiter.acquire();
            self.calls.fetch_add(1, Ordering::SeqCst);
            let result = self.backend.complete(&request);
            let latency_ms = self.clock.now().saturating_sub(started).as_millis() as u64;
            match result {
                Ok(text) => {
                    if let Some(cache) = &self.cache {
                        cache.put(CacheRecord {
                            key,
                            model_id: self.config.model_id.clone(),
                            temperature: self.config.temperature,
                            prompt_sha256: sha256_hex(prompt.text.as_bytes()),
                            response: text.clone(),
                        })?;
                    }
                    return Ok(Completion {
                        text,
                        cached: false,
                        latency_ms,
                        attempts: attempt,
                    });
                }
                Err(AttemptError::Auth { status }) => {
                    return Err(GatewayError::Auth {
                        provider: self.backend.name().to_string(),
                        status,
                    })
                }
                Err(AttemptError::Fatal { status, message }) => {
                    return Err(GatewayError::Transport {
                        provider: self.backend.name().to_string(),
                        attempts: attempt,
                        last_status: status,
                        message,
                    })
                }
                Err(AttemptError::Transient { status, message }) => {
                    if attempt >= max_attempts {
                        return Err(GatewayError::Transport {
                            provider: self.backend.name().to_string(),
                            attempts: attempt,
                            last_status: status,
                            message,
                        });
                    }
                    let wait = self.config.retry.backoff(attempt);
                    log::warn!(
                        "{}: attempt {attempt} failed ({message}); retrying in {} ms",
                        self.config.model_id,
                        wait.as_millis()
                    );
                    self.clock.sleep(wait);
                }
            }
        }
    }
}
