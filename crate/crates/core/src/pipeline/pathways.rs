//! The web and knowledge-graph answering pathways.

use std::time::{Duration, Instant};

use super::{PipelineDeps, QueryCase};
use crate::exec::{execute_program, to_natural_language};
use crate::kg::KgDatabase;
use crate::kgql::parse_program;
use crate::llm::{
    api_gen_assets, build_context, render_prompt, truncate_to_tokens, GenerationRequest, PromptInputs, TemplateId,
};
use crate::public_data::{classify_domain, default_policy, extract_entities, lookup_paragraphs, Domain};
use crate::sft::IDK;
use crate::web::{preselect_pages, rerank, retrieve_children, split_page_chunks, ScoredChunk};

/// Cooperative per-case time budget, checked between stages.
#[derive(Debug, Clone, Copy)]
pub struct Budget {
    start: Instant,
    limit: Duration,
}

impl Budget {
    pub fn new(limit: Duration) -> Self {
        Self {
            start: Instant::now(),
            limit,
        }
    }

    pub fn expired(&self) -> bool {
        self.limit.is_zero() || self.start.elapsed() >= self.limit
    }

    pub fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }
}

#[derive(Debug)]
pub(crate) struct TimedOut;

fn check(budget: &Budget) -> Result<(), TimedOut> {
    if budget.expired() {
        Err(TimedOut)
    } else {
        Ok(())
    }
}

/// Render `p_basic` over `context`, generate, and cut the reply to the
/// token limit. Client failures abstain.
fn answer_with_context(deps: &PipelineDeps, case: &QueryCase, context: String) -> String {
    let inputs = PromptInputs {
        token_limit: deps.token_limit,
        query_time: case.query_time.clone(),
        context_str: context,
        ..PromptInputs::query(&case.query)
    };
    let Ok(messages) = render_prompt(TemplateId::Basic, &inputs) else {
        return IDK.to_string();
    };
    match deps
        .clients
        .client_for(TemplateId::Basic)
        .generate(&GenerationRequest::new(TemplateId::Basic, &case.query, messages))
    {
        Ok(reply) => {
            let cut = truncate_to_tokens(&reply, deps.token_limit, deps.counter.as_ref());
            if cut.is_empty() {
                IDK.to_string()
            } else {
                cut
            }
        }
        Err(e) => {
            log::warn!("answer generation failed: {e}");
            IDK.to_string()
        }
    }
}

pub(crate) fn classify(deps: &PipelineDeps, query: &str) -> Domain {
    classify_domain(query, deps.clients.client_for(TemplateId::Domain).as_ref())
}

/// Ranked parent chunks for the case's pages.
fn web_chunks(deps: &PipelineDeps, case: &QueryCase, task: u8, budget: &Budget) -> Result<Vec<ScoredChunk>, TimedOut> {
    let pages = if task == 3 {
        preselect_pages(&case.query, &case.pages, deps.reranker.as_ref()).items
    } else {
        case.pages.clone()
    };
    check(budget)?;
    let mut chunks = Vec::new();
    for page in &pages {
        chunks.extend(split_page_chunks(&page.page_id, &page.text(), &deps.retrieval));
    }
    check(budget)?;
    if chunks.is_empty() {
        return Ok(Vec::new());
    }
    let parents = match retrieve_children(&case.query, &chunks, deps.embedder.as_ref(), deps.retrieval.recall_k) {
        Ok(p) => p,
        Err(e) => {
            log::warn!("retrieval failed, using snippets: {e}");
            pages
                .iter()
                .map(|p| p.snippet.clone())
                .filter(|s| !s.trim().is_empty())
                .collect()
        }
    };
    check(budget)?;
    if parents.is_empty() {
        return Ok(Vec::new());
    }
    Ok(rerank(&case.query, &parents, deps.reranker.as_ref(), deps.retrieval.reranker_k).items)
}

pub(crate) fn answer_web_pathway(
    deps: &PipelineDeps,
    case: &QueryCase,
    task: u8,
    domain: Option<Domain>,
    budget: &Budget,
) -> Result<String, TimedOut> {
    let chunks = web_chunks(deps, case, task, budget)?;
    let public = match (task, domain) {
        (1, Some(domain)) => match default_policy(domain) {
            Some(policy) => {
                let client = deps.clients.client_for(TemplateId::Entity);
                let entities = extract_entities(&case.query, domain, client.as_ref());
                check(budget)?;
                lookup_paragraphs(
                    &entities,
                    &deps.public_index,
                    domain,
                    policy,
                    Some(deps.embedder.as_ref()),
                )
                .unwrap_or_else(|e| {
                    log::warn!("public-data lookup failed: {e}");
                    Vec::new()
                })
            }
            None => Vec::new(),
        },
        _ => Vec::new(),
    };
    let context = build_context(&public, &chunks, deps.max_context_tokens, deps.counter.as_ref());
    check(budget)?;
    Ok(answer_with_context(deps, case, context))
}

/// Generate a KGQL program, run it, and answer from its sentences. Every
/// failure along the way abstains.
pub(crate) fn answer_kg_pathway(
    deps: &PipelineDeps,
    db: &KgDatabase,
    case: &QueryCase,
    domain: Domain,
    budget: &Budget,
) -> Result<String, TimedOut> {
    let idk = || Ok(IDK.to_string());
    let Some(assets) = api_gen_assets(domain) else {
        return idk();
    };
    let inputs = PromptInputs {
        schema_info: Some(assets.schema_info.to_string()),
        api_rules: Some(assets.api_rules.to_string()),
        icl_examples: Some(assets.icl_examples.to_string()),
        ..PromptInputs::query(&case.query)
    };
    let Ok(messages) = render_prompt(TemplateId::ApiGen, &inputs) else {
        return idk();
    };
    let program_text = match deps
        .clients
        .client_for(TemplateId::ApiGen)
        .generate(&GenerationRequest::new(TemplateId::ApiGen, &case.query, messages))
    {
        Ok(t) => t,
        Err(e) => {
            log::warn!("program generation failed: {e}");
            return idk();
        }
    };
    check(budget)?;
    let program = match parse_program(&program_text) {
        Ok(p) => p,
        Err(e) => {
            log::debug!("unparseable program for `{}`: {e}", case.query);
            return idk();
        }
    };
    let results = match execute_program(&program, db) {
        Ok(r) => r,
        Err(e) => {
            log::debug!("program failed for `{}`: {e}", case.query);
            return idk();
        }
    };
    if results.iter().all(|r| r.is_empty()) {
        return idk();
    }
    let context = to_natural_language(&results, &program);
    check(budget)?;
    Ok(answer_with_context(deps, case, context))
}
