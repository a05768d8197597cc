//! The generation-client contract and the deterministic clients shipped for
//! tests and fixtures.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::template::{Message, TemplateId};
use crate::registry::{BackendOptions, Registry, RegistryError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationRequest {
    pub template: Option<TemplateId>,
    /// The user question the prompt was rendered for, when there is one.
    pub query: Option<String>,
    pub messages: Vec<Message>,
    pub max_new_tokens: Option<usize>,
}

impl GenerationRequest {
    pub fn new(template: TemplateId, query: impl Into<String>, messages: Vec<Message>) -> Self {
        Self {
            template: Some(template),
            query: Some(query.into()),
            messages,
            max_new_tokens: None,
        }
    }

    fn message_text(&self) -> String {
        self.messages
            .iter()
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }

    fn match_text(&self) -> String {
        match &self.query {
            Some(q) => q.clone(),
            None => self.message_text(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("generation client `{client}` failed: {detail}")]
pub struct GenerationError {
    pub client: String,
    pub detail: String,
}

pub trait GenerationClient: Send + Sync {
    fn name(&self) -> &str;

    fn generate(&self, request: &GenerationRequest) -> Result<String, GenerationError>;

    fn batch_generate(&self, requests: &[GenerationRequest]) -> Vec<Result<String, GenerationError>> {
        requests.iter().map(|r| self.generate(r)).collect()
    }

    /// Whether `generate` may be called from several threads at once.
    fn concurrent(&self) -> bool {
        true
    }
}

pub const DEFAULT_REPLY: &str = "i don't know";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptRule {
    /// Case-insensitive substring of the request's query (or of the joined
    /// message text when the request carries no query).
    #[serde(rename = "match")]
    pub pattern: String,
    pub reply: String,
    /// Restrict the rule to requests rendered from this template.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<TemplateId>,
    /// Restrict the rule to requests whose rendered messages contain this
    /// text (case-insensitive).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contains: Option<String>,
}

/// Replays a rule table: the first rule whose pattern and template filter
/// match supplies the reply; otherwise the default reply.
#[derive(Debug, Clone)]
pub struct ScriptedClient {
    rules: Vec<ScriptRule>,
    default_reply: String,
}

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("cannot read script {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("script {path} line {line}: {source}")]
    Parse {
        path: String,
        line: usize,
        source: serde_json::Error,
    },
}

impl ScriptedClient {
    pub fn new(rules: Vec<ScriptRule>) -> Self {
        Self {
            rules,
            default_reply: DEFAULT_REPLY.to_string(),
        }
    }

    pub fn with_default_reply(mut self, reply: impl Into<String>) -> Self {
        self.default_reply = reply.into();
        self
    }

    pub fn from_jsonl_str(text: &str, origin: &str) -> Result<Self, ScriptError> {
        let mut rules = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            rules.push(serde_json::from_str(line).map_err(|source| ScriptError::Parse {
                path: origin.to_string(),
                line: i + 1,
                source,
            })?);
        }
        Ok(Self::new(rules))
    }

    pub fn from_jsonl(path: &Path) -> Result<Self, ScriptError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScriptError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_jsonl_str(&text, &path.display().to_string())
    }

    pub fn rules(&self) -> &[ScriptRule] {
        &self.rules
    }
}

impl GenerationClient for ScriptedClient {
    fn name(&self) -> &str {
        "scripted"
    }

    fn generate(&self, request: &GenerationRequest) -> Result<String, GenerationError> {
        let haystack = request.match_text().to_lowercase();
        let mut messages: Option<String> = None;
        let reply = self
            .rules
            .iter()
            .find(|r| {
                r.prompt.is_none_or(|p| request.template == Some(p))
                    && haystack.contains(&r.pattern.to_lowercase())
                    && r.contains.as_ref().is_none_or(|c| {
                        messages
                            .get_or_insert_with(|| request.message_text().to_lowercase())
                            .contains(&c.to_lowercase())
                    })
            })
            .map_or(&self.default_reply, |r| &r.reply);
        Ok(reply.clone())
    }
}

/// Returns the same reply for every request.
#[derive(Debug, Clone)]
pub struct ConstantClient(pub String);

impl GenerationClient for ConstantClient {
    fn name(&self) -> &str {
        "constant"
    }

    fn generate(&self, _: &GenerationRequest) -> Result<String, GenerationError> {
        Ok(self.0.clone())
    }
}

/// Fails every request; stands in for an unreachable model server.
#[derive(Debug, Clone, Default)]
pub struct UnavailableClient;

impl GenerationClient for UnavailableClient {
    fn name(&self) -> &str {
        "unavailable"
    }

    fn generate(&self, _: &GenerationRequest) -> Result<String, GenerationError> {
        Err(GenerationError {
            client: "unavailable".into(),
            detail: "no model server configured".into(),
        })
    }
}

pub fn client_registry() -> Registry<dyn GenerationClient> {
    let mut r: Registry<dyn GenerationClient> = Registry::new("generation client");
    r.register("scripted", |opts: &BackendOptions| {
        let invalid = |detail: String| RegistryError::InvalidOptions {
            family: "generation client",
            name: "scripted".into(),
            detail,
        };
        let mut client = match opts.str("path") {
            Some(p) => ScriptedClient::from_jsonl(&opts.resolve_path(p)).map_err(|e| invalid(e.to_string()))?,
            None => match opts.values.get("rules") {
                Some(rules) => ScriptedClient::new(
                    serde_json::from_value(rules.clone()).map_err(|e| invalid(format!("rules: {e}")))?,
                ),
                None => ScriptedClient::new(Vec::new()),
            },
        };
        if let Some(d) = opts.str("default_reply") {
            client = client.with_default_reply(d);
        }
        Ok(Arc::new(client) as Arc<dyn GenerationClient>)
    });
    r.register("constant", |opts: &BackendOptions| {
        let reply = opts.str("reply").unwrap_or(DEFAULT_REPLY).to_string();
        Ok(Arc::new(ConstantClient(reply)) as Arc<dyn GenerationClient>)
    });
    r.register("unavailable", |_: &BackendOptions| {
        Ok(Arc::new(UnavailableClient) as Arc<dyn GenerationClient>)
    });
    r
}
