//! Client configuration: named profiles (one backend plus optional LoRA
//! adapter metadata each) and routing of prompt templates to profiles.
//!
//! ```toml
//! default_profile = "base"
//!
//! [profiles.base]
//! backend = "scripted"
//! options = { path = "replies.jsonl" }
//!
//! [profiles.api]
//! backend = "scripted"
//! options = { path = "api_replies.jsonl" }
//! lora = { lora_r = 8 }
//!
//! [routing]
//! p_api_gen = "api"
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::client::{client_registry, GenerationClient};
use super::template::TemplateId;
use crate::registry::{BackendOptions, RegistryError};

/// Fine-tuning hyperparameters of a LoRA adapter, kept as metadata only.
/// Defaults are the values the adapters in this system were tuned with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoraMetadata {
    pub lora_alpha: u32,
    pub lora_dropout: f64,
    pub lora_r: u32,
    pub target_modules: Vec<String>,
    pub bias: String,
    pub load_in_4bit: bool,
    pub max_seq_length: Vec<u32>,
    pub per_device_train_batch_size: u32,
    pub gradient_accumulation_steps: u32,
    pub optim: String,
    pub learning_rate: f64,
    pub max_grad_norm: f64,
    pub scheduler: String,
    pub warmup_ratio: f64,
}

impl Default for LoraMetadata {
    fn default() -> Self {
        Self {
            lora_alpha: 16,
            lora_dropout: 0.1,
            lora_r: 8,
            target_modules: ["k_proj", "q_proj", "v_proj", "up_proj", "down_proj", "gate_proj"]
                .map(String::from)
                .to_vec(),
            bias: "none".into(),
            load_in_4bit: true,
            max_seq_length: vec![2048, 4096],
            per_device_train_batch_size: 1,
            gradient_accumulation_steps: 4,
            optim: "adamw_hf".into(),
            learning_rate: 2e-4,
            max_grad_norm: 0.3,
            scheduler: "cosine".into(),
            warmup_ratio: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoraProfile {
    pub backend: String,
    #[serde(default)]
    pub options: toml::Table,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lora: Option<LoraMetadata>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientConfig {
    pub default_profile: String,
    pub profiles: BTreeMap<String, LoraProfile>,
    #[serde(default)]
    pub routing: BTreeMap<TemplateId, String>,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read client config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid client config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("client config refers to missing profile `{0}`")]
    MissingProfile(String),
    #[error(transparent)]
    Backend(#[from] RegistryError),
}

impl ClientConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ClientConfig = toml::from_str(text)?;
        for name in std::iter::once(&cfg.default_profile).chain(cfg.routing.values()) {
            if !cfg.profiles.contains_key(name) {
                return Err(ConfigError::MissingProfile(name.clone()));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("client config always serializes")
    }

    pub fn profile_for(&self, template: TemplateId) -> &str {
        self.routing.get(&template).unwrap_or(&self.default_profile)
    }
}

/// Built clients for every profile of a [`ClientConfig`].
#[derive(Clone)]
pub struct ClientSet {
    config: ClientConfig,
    clients: BTreeMap<String, Arc<dyn GenerationClient>>,
}

impl std::fmt::Debug for ClientSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClientSet").field("config", &self.config).finish()
    }
}

impl ClientSet {
    pub fn build(config: ClientConfig, base_dir: &Path) -> Result<Self, ConfigError> {
        let registry = client_registry();
        let mut clients = BTreeMap::new();
        for (name, profile) in &config.profiles {
            let values = serde_json::to_value(&profile.options).unwrap_or_default();
            let client = registry.build(&profile.backend, &BackendOptions::new(values, base_dir))?;
            clients.insert(name.clone(), client);
        }
        Ok(Self { config, clients })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::build(ClientConfig::from_toml_str(&text)?, base)
    }

    /// One client serving every template.
    pub fn single(client: Arc<dyn GenerationClient>) -> Self {
        let profile = LoraProfile {
            backend: client.name().to_string(),
            options: toml::Table::new(),
            lora: None,
        };
        Self {
            config: ClientConfig {
                default_profile: "default".into(),
                profiles: BTreeMap::from([("default".to_string(), profile)]),
                routing: BTreeMap::new(),
            },
            clients: BTreeMap::from([("default".to_string(), client)]),
        }
    }

    pub fn config(&self) -> &ClientConfig {
        &self.config
    }

    pub fn client_for(&self, template: TemplateId) -> &Arc<dyn GenerationClient> {
        &self.clients[self.config.profile_for(template)]
    }
}
