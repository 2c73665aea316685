//! Completion backends, registered by profile name and chosen from config.

use std::collections::BTreeMap;
use std::sync::Arc;

use labelforge_core::{Registry, RenderedPrompt};
use serde::Deserialize;
use serde_json::json;

use crate::config::ProviderConfig;
use crate::error::{AttemptError, GatewayError};
use crate::stub::StubBackend;

pub struct CompletionRequest<'a> {
    pub prompt: &'a RenderedPrompt,
    pub model_id: &'a str,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

/// One attempt at one completion. Retries, caching and rate limiting live in
/// [`crate::Gateway`].
pub trait CompletionBackend: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, req: &CompletionRequest<'_>) -> Result<String, AttemptError>;
}

impl<T: CompletionBackend + ?Sized> CompletionBackend for Arc<T> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn complete(&self, req: &CompletionRequest<'_>) -> Result<String, AttemptError> {
        (**self).complete(req)
    }
}

pub type BackendFactory =
    Arc<dyn Fn(&ProviderConfig, &Registry) -> Result<Box<dyn CompletionBackend>, GatewayError> + Send + Sync>;

#[derive(Clone)]
pub struct BackendRegistry {
    factories: BTreeMap<String, BackendFactory>,
}

impl BackendRegistry {
    pub fn empty() -> Self {
        BackendRegistry {
            factories: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &str, factory: BackendFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn build(
        &self,
        config: &ProviderConfig,
        registry: &Registry,
    ) -> Result<Box<dyn CompletionBackend>, GatewayError> {
        config.validate()?;
        let factory = self.factories.get(&config.provider).ok_or_else(|| {
            GatewayError::Config(format!(
                "unknown provider {:?}; known: {}",
                config.provider,
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })?;
        factory(config, registry)
    }
}

impl Default for BackendRegistry {
    fn default() -> Self {
        let mut r = BackendRegistry::empty();
        for profile in HttpProfile::ALL {
            r.register(
                profile.name,
                Arc::new(move |c: &ProviderConfig, _: &Registry| {
                    Ok(Box::new(HttpBackend::new(profile, c)?) as Box<dyn CompletionBackend>)
                }),
            );
        }
        r.register(
            "stub",
            Arc::new(|c: &ProviderConfig, reg: &Registry| {
                Ok(Box::new(StubBackend::new(c.stub.clone(), reg.clone())) as Box<dyn CompletionBackend>)
            }),
        );
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AuthStyle {
    Bearer,
    ApiKeyHeader,
}

/// An OpenAI-style chat-completions endpoint family.
#[derive(Debug, Clone, Copy)]
pub struct HttpProfile {
    pub name: &'static str,
    default_base_url: Option<&'static str>,
    default_key_env: &'static str,
    auth: AuthStyle,
    deployment_path: bool,
}

impl HttpProfile {
    pub const ALL: [HttpProfile; 4] = [
        HttpProfile {
            name: "openai",
            default_base_url: Some("https://api.openai.com/v1"),
            default_key_env: "OPENAI_API_KEY",
            auth: AuthStyle::Bearer,
            deployment_path: false,
        },
        HttpProfile {
            name: "groq",
            default_base_url: Some("https://api.groq.com/openai/v1"),
            default_key_env: "GROQ_API_KEY",
            auth: AuthStyle::Bearer,
            deployment_path: false,
        },
        HttpProfile {
            name: "mistral",
            default_base_url: Some("https://api.mistral.ai/v1"),
            default_key_env: "MISTRAL_API_KEY",
            auth: AuthStyle::Bearer,
            deployment_path: false,
        },
        HttpProfile {
            name: "azure",
            default_base_url: None,
            default_key_env: "AZURE_OPENAI_API_KEY",
            auth: AuthStyle::ApiKeyHeader,
            deployment_path: true,
        },
    ];
}

const AZURE_DEFAULT_API_VERSION: &str = "2024-06-01";

pub struct HttpBackend {
    profile: HttpProfile,
    url: String,
    api_key: String,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(profile: HttpProfile, config: &ProviderConfig) -> Result<Self, GatewayError> {
        let base = config
            .base_url
            .as_deref()
            .or(profile.default_base_url)
            .ok_or_else(|| {
                GatewayError::Config(format!(
                    "{}: base_url is required for {}",
                    config.model_id, profile.name
                ))
            })?
            .trim_end_matches('/');
        let url = if profile.deployment_path {
            format!(
                "{base}/openai/deployments/{}/chat/completions?api-version={}",
                config.model_id,
                config.api_version.as_deref().unwrap_or(AZURE_DEFAULT_API_VERSION)
            )
        } else {
            format!("{base}/chat/completions")
        };
        let key_env = config.api_key_env.as_deref().unwrap_or(profile.default_key_env);
        let api_key = std::env::var(key_env).map_err(|_| {
            GatewayError::Config(format!(
                "{}: environment variable {key_env} is not set",
                config.model_id
            ))
        })?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout()))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpBackend {
            profile,
            url,
            api_key,
            agent,
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    #[serde(default)]
    content: Option<String>,
}

impl CompletionBackend for HttpBackend {
    fn name(&self) -> &str {
        self.profile.name
    }

    fn complete(&self, req: &CompletionRequest<'_>) -> Result<String, AttemptError> {
        // the whole prompt goes out as one user message
        let body = json!({
            "model": req.model_id,
            "messages": [{"role": "user", "content": req.prompt.text}],
            "temperature": req.temperature,
            "max_tokens": req.max_output_tokens,
        });
        let request = self.agent.post(&self.url);
        let request = match self.profile.auth {
            AuthStyle::Bearer => request.header("Authorization", &format!("Bearer {}", self.api_key)),
            AuthStyle::ApiKeyHeader => request.header("api-key", &self.api_key),
        };
        let mut response = request.send_json(&body).map_err(transport_error)?;
        let status = response.status().as_u16();
        match status {
            200..=299 => {}
            401 | 403 => return Err(AttemptError::Auth { status }),
            408 | 429 | 500..=599 => {
                return Err(AttemptError::Transient {
                    status: Some(status),
                    message: snippet(response.body_mut().read_to_string().unwrap_or_default()),
                })
            }
            _ => {
                return Err(AttemptError::Fatal {
                    status: Some(status),
                    message: snippet(response.body_mut().read_to_string().unwrap_or_default()),
                })
            }
        }
        let parsed: ChatResponse = response.body_mut().read_json().map_err(|e| AttemptError::Fatal {
            status: Some(status),
            message: format!("malformed completion body: {e}"),
        })?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or(AttemptError::Fatal {
                status: Some(status),
                message: "completion has no message content".into(),
            })
    }
}

fn transport_error(e: ureq::Error) -> AttemptError {
    match e {
        ureq::Error::Timeout(_) | ureq::Error::Io(_) | ureq::Error::ConnectionFailed | ureq::Error::BodyStalled => {
            AttemptError::Transient {
                status: None,
                message: e.to_string(),
            }
        }
        other => AttemptError::Fatal {
            status: None,
            message: other.to_string(),
        },
    }
}

fn snippet(mut s: String) -> String {
    if s.len() > 200 {
        let mut cut = 200;
        while !s.is_char_boundary(cut) {
            cut -= 1;
        }
        s.truncate(cut);
    }
    s
}
