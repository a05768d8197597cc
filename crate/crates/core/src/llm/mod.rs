//! Prompt rendering, context assembly, generation clients and judge-reply
//! parsing.

mod client;
mod config;
mod judge;
mod template;
mod tokens;

pub use client::{
    client_registry, ConstantClient, GenerationClient, GenerationError, GenerationRequest, ScriptError, ScriptRule,
    ScriptedClient, UnavailableClient, DEFAULT_REPLY,
};
pub use config::{ClientConfig, ClientSet, ConfigError, LoraMetadata, LoraProfile};
pub use judge::{is_abstention, normalize_answer, parse_judgement, parse_yes};
pub use template::{
    api_gen_assets, entity_template, render_prompt, render_template, template, ApiGenAssets, Message, PromptInputs,
    PromptTemplate, RenderError, TemplateId, CHECK_GT_EXAMPLES, DEFAULT_TOKEN_LIMIT,
};
pub use tokens::{
    build_context, token_counter_registry, truncate_to_tokens, TokenCounter, WordPieceCounter, MAX_CONTEXT_TOKENS,
};
