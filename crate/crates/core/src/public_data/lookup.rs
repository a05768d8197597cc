use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Domain;
use crate::kg::normalize_key;
use crate::llm::{
    entity_template, is_abstention, render_prompt, render_template, GenerationClient, GenerationRequest, PromptInputs,
    TemplateId,
};
use crate::web::{cosine, Embedder};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityDoc {
    pub domain: Domain,
    pub key: String,
    pub paragraph: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchLevel {
    Exact,
    Substring,
    Embedding,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchPolicy {
    pub level: MatchLevel,
    #[serde(default)]
    pub threshold: f64,
}

impl MatchPolicy {
    pub const EXACT: MatchPolicy = MatchPolicy {
        level: MatchLevel::Exact,
        threshold: 0.0,
    };
    pub const SUBSTRING: MatchPolicy = MatchPolicy {
        level: MatchLevel::Substring,
        threshold: 0.0,
    };

    pub fn embedding(threshold: f64) -> Result<Self, LookupError> {
        if threshold > 0.0 && threshold <= 1.0 {
            Ok(MatchPolicy {
                level: MatchLevel::Embedding,
                threshold,
            })
        } else {
            Err(LookupError::Threshold(threshold))
        }
    }
}

/// Titles and names tolerate partial mentions; tickers must match exactly.
/// Sports and other domains have no index.
pub fn default_policy(domain: Domain) -> Option<MatchPolicy> {
    match domain {
        Domain::Movie | Domain::Music => Some(MatchPolicy::SUBSTRING),
        Domain::Finance => Some(MatchPolicy::EXACT),
        Domain::Sports | Domain::Other => None,
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LookupError {
    #[error("embedding match level needs an embedder")]
    NoEmbedder,
    #[error("embedding threshold must be in (0, 1], got {0}")]
    Threshold(f64),
    #[error("embedder failed: {0}")]
    Embedder(String),
}

/// Route a query to a domain with the domain prompt. Replies other than
/// one of the known domain words, and client failures, map to `other`.
pub fn classify_domain(query: &str, llm: &dyn GenerationClient) -> Domain {
    let messages = match render_prompt(TemplateId::Domain, &PromptInputs::query(query)) {
        Ok(m) => m,
        Err(e) => {
            log::warn!("domain prompt: {e}");
            return Domain::Other;
        }
    };
    match llm.generate(&GenerationRequest::new(TemplateId::Domain, query, messages)) {
        Ok(reply) => reply
            .split(|c: char| !c.is_alphanumeric())
            .find(|w| !w.is_empty())
            .and_then(|w| w.parse().ok())
            .unwrap_or(Domain::Other),
        Err(e) => {
            log::warn!("domain classification degraded: {e}");
            Domain::Other
        }
    }
}

/// Entity names for `query` via the domain's entity prompt, split on `&&`,
/// trimmed and lowercased. Abstentions and failures give no entities.
pub fn extract_entities(query: &str, domain: Domain, llm: &dyn GenerationClient) -> Vec<String> {
    let Some(template) = entity_template(domain) else {
        return Vec::new();
    };
    let Ok(messages) = render_template(template, &PromptInputs::query(query)) else {
        return Vec::new();
    };
    let reply = match llm.generate(&GenerationRequest::new(TemplateId::Entity, query, messages)) {
        Ok(r) => r,
        Err(e) => {
            log::warn!("entity extraction degraded: {e}");
            return Vec::new();
        }
    };
    if is_abstention(&reply) {
        return Vec::new();
    }
    reply
        .split("&&")
        .map(|e| normalize_key(e.trim().trim_end_matches('.')))
        .filter(|e| !e.is_empty())
        .collect()
}

/// Paragraphs of `domain` docs matching any entity, in entity order, each
/// paragraph at most once.
pub fn lookup_paragraphs(
    entities: &[String],
    index: &[EntityDoc],
    domain: Domain,
    policy: MatchPolicy,
    embedder: Option<&dyn Embedder>,
) -> Result<Vec<String>, LookupError> {
    let docs: Vec<&EntityDoc> = index.iter().filter(|d| d.domain == domain).collect();
    let doc_vectors = match policy.level {
        MatchLevel::Embedding => {
            if !(policy.threshold > 0.0 && policy.threshold <= 1.0) {
                return Err(LookupError::Threshold(policy.threshold));
            }
            let e = embedder.ok_or(LookupError::NoEmbedder)?;
            docs.iter()
                .map(|d| e.embed(&d.key).map_err(|err| LookupError::Embedder(err.to_string())))
                .collect::<Result<Vec<_>, _>>()?
        }
        _ => Vec::new(),
    };
    let mut out: Vec<String> = Vec::new();
    for entity in entities {
        let q = normalize_key(entity);
        if q.is_empty() {
            continue;
        }
        let q_vec = match (policy.level, embedder) {
            (MatchLevel::Embedding, Some(e)) => {
                Some(e.embed(&q).map_err(|err| LookupError::Embedder(err.to_string()))?)
            }
            _ => None,
        };
        for (i, doc) in docs.iter().enumerate() {
            let hit = match policy.level {
                MatchLevel::Exact => doc.key == q,
                MatchLevel::Substring => doc.key.contains(&q) || q.contains(&doc.key),
                MatchLevel::Embedding => {
                    cosine(q_vec.as_deref().unwrap_or_default(), &doc_vectors[i]) >= policy.threshold
                }
            };
            if hit && !out.contains(&doc.paragraph) {
                out.push(doc.paragraph.clone());
            }
        }
    }
    Ok(out)
}
