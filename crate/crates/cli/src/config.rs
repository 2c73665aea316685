//! Pipeline configuration file (TOML).

use std::path::{Path, PathBuf};

use labelforge_core::prompt::sha256_hex;
use labelforge_core::registry::SPAADE_IDS;
use labelforge_core::{DisorderId, PromptKind, Registry};
use labelforge_gateway::ProviderConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub registry: RegistryPaths,
    /// Disorders the multi-label dataset covers.
    pub disorders: Vec<DisorderId>,
    pub prompt_kind: PromptKind,
    pub sample: SampleSizes,
    pub paths: Paths,
    pub review: ReviewSettings,
    pub merge: MergeSettings,
    /// Model used to screen sampled posts against their origin disorder.
    pub screening_model: Option<String>,
    /// Models that label the remaining disorders during `build`.
    pub annotation_models: Vec<String>,
    /// Model whose labels downstream analysis reads.
    pub canonical_model: Option<String>,
    /// Control posts get labels for every disorder.
    pub annotate_controls: bool,
    /// Record wall-clock timestamps and latencies in annotations.
    pub record_timing: bool,
    pub providers: Vec<ProviderConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegistryPaths {
    pub disorders: Option<PathBuf>,
    pub synonyms: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleSizes {
    pub initial_per_disorder: usize,
    pub final_per_disorder: usize,
    pub controls: usize,
}

impl Default for SampleSizes {
    fn default() -> Self {
        SampleSizes {
            initial_per_disorder: 600,
            final_per_disorder: 500,
            controls: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub cache: PathBuf,
    /// Analysis export served to the heatmap view.
    pub matrix: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            cache: PathBuf::from("labelforge-cache.jsonl"),
            matrix: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReviewSettings {
    pub port: u16,
    pub static_dir: Option<PathBuf>,
}

impl Default for ReviewSettings {
    fn default() -> Self {
        ReviewSettings {
            port: 8765,
            static_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MergeSettings {
    pub min_join_rate: f64,
}

impl Default for MergeSettings {
    fn default() -> Self {
        MergeSettings {
            min_join_rate: labelforge_core::corpus::DEFAULT_MIN_JOIN_RATE,
        }
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            registry: RegistryPaths::default(),
            disorders: SPAADE_IDS.iter().map(|d| DisorderId::new(*d)).collect(),
            prompt_kind: PromptKind::SingleLabel,
            sample: SampleSizes::default(),
            paths: Paths::default(),
            review: ReviewSettings::default(),
            merge: MergeSettings::default(),
            screening_model: None,
            annotation_models: Vec::new(),
            canonical_model: None,
            annotate_controls: true,
            record_timing: false,
            providers: vec![ProviderConfig::stub("stub", 0)],
        }
    }
}

/// A parsed config plus where it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: PipelineConfig,
    /// Relative paths in the file resolve against this directory.
    pub base_dir: PathBuf,
    /// Digest of the config as written (before path resolution).
    pub digest: String,
}

impl LoadedConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let (config, base_dir) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                let config: PipelineConfig =
                    toml::from_str(&text).map_err(|e| CliError::user(format!("{}: {e}", p.display())))?;
                let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (config, base)
            }
            None => (PipelineConfig::default(), PathBuf::new()),
        };
        let digest = sha256_hex(&serde_json::to_vec(&config).expect("config serializes"));
        let loaded = LoadedConfig {
            config,
            base_dir,
            digest,
        };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.config.seed = s;
        }
        self
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn cache_path(&self) -> PathBuf {
        self.resolve(&self.config.paths.cache)
    }

    pub fn registry(&self) -> CliResult<Registry> {
        match &self.config.registry.disorders {
            None => Ok(Registry::builtin()),
            Some(d) => {
                let syn = self.config.registry.synonyms.as_ref().map(|s| self.resolve(s));
                Ok(Registry::load(&self.resolve(d), syn.as_deref())?)
            }
        }
    }

    pub fn provider(&self, model_id: &str) -> CliResult<&ProviderConfig> {
        self.config
            .providers
            .iter()
            .find(|p| p.model_id == model_id)
            .ok_or_else(|| {
                CliError::user(format!(
                    "no provider configured for model `{model_id}` (configured: {})",
                    self.model_ids().join(", ")
                ))
            })
    }

    pub fn model_ids(&self) -> Vec<String> {
        self.config.providers.iter().map(|p| p.model_id.clone()).collect()
    }

    pub fn screening_model(&self) -> String {
        self.config
            .screening_model
            .clone()
            .unwrap_or_else(|| self.config.providers[0].model_id.clone())
    }

    pub fn annotation_models(&self) -> Vec<String> {
        if self.config.annotation_models.is_empty() {
            self.model_ids()
        } else {
            self.config.annotation_models.clone()
        }
    }

    pub fn canonical_model(&self) -> String {
        self.config
            .canonical_model
            .clone()
            .unwrap_or_else(|| self.annotation_models()[0].clone())
    }

    fn validate(&self) -> CliResult<()> {
        let c = &self.config;
        if c.sample.final_per_disorder > c.sample.initial_per_disorder {
            return Err(CliError::user(format!(
                "sample.final_per_disorder ({}) exceeds sample.initial_per_disorder ({})",
                c.sample.final_per_disorder, c.sample.initial_per_disorder
            )));
        }
        if c.providers.is_empty() {
            return Err(CliError::user("at least one provider must be configured"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for p in &c.providers {
            if !seen.insert(p.model_id.as_str()) {
                return Err(CliError::user(format!("model `{}` configured twice", p.model_id)));
            }
            p.validate()?;
        }
        for m in c
            .screening_model
            .iter()
            .chain(&c.annotation_models)
            .chain(c.canonical_model.iter())
        {
            self.provider(m)?;
        }
        let registry = self.registry()?;
        for d in &c.disorders {
            registry.require(d.as_str())?;
        }
        for p in [
            &c.registry.disorders,
            &c.registry.synonyms,
            &c.paths.matrix,
            &c.review.static_dir,
        ]
        .into_iter()
        .flatten()
        {
            let r = self.resolve(p);
            if r.parent().is_some_and(|d| !d.as_os_str().is_empty() && !d.exists()) {
                return Err(CliError::io(&r, "parent directory does not exist"));
            }
        }
        Ok(())
    }
}
