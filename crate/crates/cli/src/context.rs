//! State shared by every command: config, registries and output helpers.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use labelforge_core::dataset_io::{load_dataset, save_dataset, write_atomic};
use labelforge_core::metrics::FAILED_PARSE_POLICY;
use labelforge_core::prompt::sha256_hex;
use labelforge_core::{Dataset, PromptKind, PromptStrategy, Registry, StrategyRegistry};
use labelforge_gateway::{BackendRegistry, Gateway, ResponseCache};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::LoadedConfig;
use crate::error::{CliError, CliResult};

pub struct Context {
    pub cfg: LoadedConfig,
    pub registry: Registry,
    pub strategies: StrategyRegistry,
    pub backends: BackendRegistry,
    pub dry_run: bool,
    cache: Option<Arc<ResponseCache>>,
}

impl Context {
    pub fn new(cfg: LoadedConfig, dry_run: bool) -> CliResult<Self> {
        let registry = cfg.registry()?;
        Ok(Context {
            cfg,
            registry,
            strategies: StrategyRegistry::default(),
            backends: BackendRegistry::default(),
            dry_run,
            cache: None,
        })
    }

    pub fn seed(&self) -> u64 {
        self.cfg.config.seed
    }

    pub fn strategy(&self, kind: PromptKind) -> CliResult<Arc<dyn PromptStrategy>> {
        self.strategies
            .for_kind(kind)
            .ok_or_else(|| CliError::user(format!("no prompt strategy registered for {kind}")))
    }

    pub fn cache(&mut self) -> CliResult<Arc<ResponseCache>> {
        if let Some(c) = &self.cache {
            return Ok(c.clone());
        }
        let c = Arc::new(ResponseCache::open(&self.cfg.cache_path())?);
        self.cache = Some(c.clone());
        Ok(c)
    }

    pub fn gateway(&mut self, model_id: &str) -> CliResult<Gateway> {
        let config = self.cfg.provider(model_id)?.clone();
        let cache = self.cache()?;
        Ok(Gateway::from_config(
            config,
            &self.backends,
            &self.registry,
            Some(cache),
        )?)
    }

    pub fn load(&self, path: &Path) -> CliResult<Dataset> {
        Ok(load_dataset(path)?)
    }

    pub fn save(&self, dataset: &Dataset, path: &Path) -> CliResult<()> {
        Ok(save_dataset(dataset, path)?)
    }

    /// Writes `value` as pretty JSON with a trailing newline.
    pub fn write_json<T: Serialize>(&self, path: &Path, value: &T) -> CliResult<()> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("value serializes");
        bytes.push(b'\n');
        write_atomic(path, &bytes).map_err(|e| CliError::io(path, e))
    }

    pub fn write_text(&self, path: &Path, text: &str) -> CliResult<()> {
        write_atomic(path, text.as_bytes()).map_err(|e| CliError::io(path, e))
    }

    /// Starts the run-metadata record for `command`.
    pub fn run_record(&self, command: &str) -> RunRecord {
        RunRecord {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_digest: self.cfg.digest.clone(),
            seed: self.seed(),
            template_hashes: PromptKind::ALL
                .iter()
                .map(|k| (k.as_str().to_string(), k.template().hash().to_string()))
                .collect(),
            inputs: Vec::new(),
            provider_calls: 0,
            decoding: BTreeMap::new(),
            failed_parse_policy: FAILED_PARSE_POLICY.to_string(),
            params: json!({}),
        }
    }

    pub fn decoding_entry(&self, model_id: &str) -> CliResult<Value> {
        let p = self.cfg.provider(model_id)?;
        Ok(json!({
            "provider": p.provider,
            "temperature": p.temperature,
            "max_output_tokens": p.max_output_tokens,
            "message_layout": "entire prompt as one user message",
        }))
    }
}

/// Provenance written beside every artifact as `<artifact>.run.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub command: String,
    pub version: String,
    pub config_digest: String,
    pub seed: u64,
    pub template_hashes: BTreeMap<String, String>,
    pub inputs: Vec<InputDigest>,
    pub provider_calls: u64,
    pub decoding: BTreeMap<String, Value>,
    pub failed_parse_policy: String,
    pub params: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub name: String,
    pub sha256: String,
}

impl RunRecord {
    pub fn input(&mut self, path: &Path) -> CliResult<()> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        self.inputs.push(InputDigest {
            name: path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn write_beside(&self, ctx: &Context, artifact: &Path) -> CliResult<PathBuf> {
        let path = sidecar(artifact, "run.json");
        ctx.write_json(&path, self)?;
        Ok(path)
    }
}

/// `out/x.jsonl` + `run.json` -> `out/x.jsonl.run.json`.
pub fn sidecar(artifact: &Path, suffix: &str) -> PathBuf {
    let mut name = artifact.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(suffix);
    artifact.with_file_name(name)
}
