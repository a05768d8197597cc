//! Prompt templates and rendering.
//!
//! Template texts live in `assets/prompts` as TOML message lists; a
//! placeholder is `{name}` where `name` is declared in the template's
//! `placeholders`. Any other brace text is left alone, and substituted
//! values are never rescanned.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::public_data::Domain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TemplateId {
    #[serde(rename = "p_basic")]
    Basic,
    #[serde(rename = "p_ctrl")]
    Ctrl,
    #[serde(rename = "p_domain")]
    Domain,
    #[serde(rename = "p_entity")]
    Entity,
    #[serde(rename = "p_api_gen")]
    ApiGen,
    #[serde(rename = "p_check_gt")]
    CheckGt,
    #[serde(rename = "p_context")]
    Context,
}

impl TemplateId {
    pub const ALL: [TemplateId; 7] = [
        TemplateId::Basic,
        TemplateId::Ctrl,
        TemplateId::Domain,
        TemplateId::Entity,
        TemplateId::ApiGen,
        TemplateId::CheckGt,
        TemplateId::Context,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TemplateId::Basic => "p_basic",
            TemplateId::Ctrl => "p_ctrl",
            TemplateId::Domain => "p_domain",
            TemplateId::Entity => "p_entity",
            TemplateId::ApiGen => "p_api_gen",
            TemplateId::CheckGt => "p_check_gt",
            TemplateId::Context => "p_context",
        }
    }
}

impl std::str::FromStr for TemplateId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateId::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown template `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn new(role: impl Into<String>, content: impl Into<String>) -> Self {
        Self {
            role: role.into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct PromptTemplate {
    pub id: TemplateId,
    pub placeholders: Vec<String>,
    pub messages: Vec<Message>,
}

pub const DEFAULT_TOKEN_LIMIT: usize = 75;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptInputs {
    pub token_limit: usize,
    pub query_time: String,
    pub context_str: String,
    pub query_str: String,
    pub gt_str: Option<String>,
    pub our_str: Option<String>,
    pub icl_examples: Option<String>,
    pub schema_info: Option<String>,
    pub api_rules: Option<String>,
}

impl Default for PromptInputs {
    fn default() -> Self {
        Self {
            token_limit: DEFAULT_TOKEN_LIMIT,
            query_time: String::new(),
            context_str: String::new(),
            query_str: String::new(),
            gt_str: None,
            our_str: None,
            icl_examples: None,
            schema_info: None,
            api_rules: None,
        }
    }
}

impl PromptInputs {
    pub fn query(query_str: impl Into<String>) -> Self {
        Self {
            query_str: query_str.into(),
            ..Self::default()
        }
    }

    fn value(&self, name: &str) -> Option<String> {
        match name {
            "token_limit" => Some(self.token_limit.to_string()),
            "query_time" => Some(self.query_time.clone()),
            "context_str" => Some(self.context_str.clone()),
            "query_str" => Some(self.query_str.clone()),
            "gt_str" => self.gt_str.clone(),
            "our_str" => self.our_str.clone(),
            "ICL_examples" => self.icl_examples.clone(),
            "Schema_info" => self.schema_info.clone(),
            "API_rules" => self.api_rules.clone(),
            _ => None,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RenderError {
    #[error("template {template} needs a value for `{placeholder}`")]
    MissingPlaceholder {
        template: &'static str,
        placeholder: String,
    },
    #[error("token_limit must be positive")]
    ZeroTokenLimit,
    #[error("no {template} template for domain {domain}")]
    NoTemplateForDomain { template: &'static str, domain: Domain },
}

fn parse_asset(text: &str) -> PromptTemplate {
    toml::from_str(text).unwrap_or_else(|e| panic!("bundled prompt asset is invalid: {e}"))
}

fn bundled() -> &'static BTreeMap<TemplateId, PromptTemplate> {
    static T: OnceLock<BTreeMap<TemplateId, PromptTemplate>> = OnceLock::new();
    T.get_or_init(|| {
        [
            include_str!("../../assets/prompts/p_basic.toml"),
            include_str!("../../assets/prompts/p_ctrl.toml"),
            include_str!("../../assets/prompts/p_domain.toml"),
            include_str!("../../assets/prompts/p_entity_movie.toml"),
            include_str!("../../assets/prompts/p_api_gen.toml"),
            include_str!("../../assets/prompts/p_check_gt.toml"),
            include_str!("../../assets/prompts/p_context.toml"),
        ]
        .into_iter()
        .map(|t| {
            let t = parse_asset(t);
            (t.id, t)
        })
        .collect()
    })
}

pub fn template(id: TemplateId) -> &'static PromptTemplate {
    &bundled()[&id]
}

/// The entity-extraction prompt for a domain; sports and other have none.
pub fn entity_template(domain: Domain) -> Option<&'static PromptTemplate> {
    static T: OnceLock<BTreeMap<Domain, PromptTemplate>> = OnceLock::new();
    T.get_or_init(|| {
        BTreeMap::from([
            (
                Domain::Movie,
                parse_asset(include_str!("../../assets/prompts/p_entity_movie.toml")),
            ),
            (
                Domain::Finance,
                parse_asset(include_str!("../../assets/prompts/p_entity_finance.toml")),
            ),
            (
                Domain::Music,
                parse_asset(include_str!("../../assets/prompts/p_entity_music.toml")),
            ),
        ])
    })
    .get(&domain)
}

pub const CHECK_GT_EXAMPLES: &str = include_str!("../../assets/prompts/check_gt_icl.txt");

/// Schema description, API rules and examples that fill `p_api_gen`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ApiGenAssets {
    pub schema_info: &'static str,
    pub api_rules: &'static str,
    pub icl_examples: &'static str,
}

pub fn api_gen_assets(domain: Domain) -> Option<ApiGenAssets> {
    match domain {
        Domain::Movie => Some(ApiGenAssets {
            schema_info: include_str!("../../assets/movie/schema.txt").trim_end(),
            api_rules: include_str!("../../assets/movie/api_rules.txt").trim_end(),
            icl_examples: include_str!("../../assets/movie/icl_examples.txt").trim_end(),
        }),
        _ => None,
    }
}

pub fn render_prompt(id: TemplateId, inputs: &PromptInputs) -> Result<Vec<Message>, RenderError> {
    render_template(template(id), inputs)
}

pub fn render_template(t: &PromptTemplate, inputs: &PromptInputs) -> Result<Vec<Message>, RenderError> {
    if inputs.token_limit == 0 && t.placeholders.iter().any(|p| p == "token_limit") {
        return Err(RenderError::ZeroTokenLimit);
    }
    t.messages
        .iter()
        .map(|m| {
            Ok(Message {
                role: m.role.clone(),
                content: substitute(t, &m.content, inputs)?,
            })
        })
        .collect()
}

fn substitute(t: &PromptTemplate, text: &str, inputs: &PromptInputs) -> Result<String, RenderError> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let name = after.find('}').map(|close| &after[..close]);
        match name {
            Some(name) if t.placeholders.iter().any(|p| p == name) => {
                let value = inputs.value(name).ok_or_else(|| RenderError::MissingPlaceholder {
                    template: t.id.name(),
                    placeholder: name.to_string(),
                })?;
                out.push_str(&value);
                rest = &after[name.len() + 1..];
            }
            _ => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}
