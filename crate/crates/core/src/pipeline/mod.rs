//! Query answering: the web pathway for every task, the knowledge-graph
//! pathway for tasks 2 and 3, knowledge-graph-first arbitration, scoring
//! and batch evaluation.

mod pathways;
mod score;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg::KgDatabase;
use crate::llm::{ClientSet, TemplateId, TokenCounter, WordPieceCounter, DEFAULT_TOKEN_LIMIT, MAX_CONTEXT_TOKENS};
use crate::public_data::{Domain, EntityDoc};
use crate::sft::IDK;
use crate::web::{Embedder, HashedTfEmbedder, Reranker, RetrievalConfig, TermOverlapReranker, WebPage};

pub use pathways::Budget;
pub use score::{arbitrate, score_answer, Pathway};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryCase {
    pub query: String,
    #[serde(default)]
    pub query_time: String,
    #[serde(default)]
    pub task: Option<u8>,
    #[serde(default)]
    pub ground_truth: Option<String>,
    #[serde(default)]
    pub pages: Vec<WebPage>,
    /// Optional domain label, used only for the per-domain summary.
    #[serde(default)]
    pub domain: Option<Domain>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub query: String,
    pub task: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Domain>,
    pub kg_answer: Option<String>,
    pub web_answer: String,
    #[serde(rename = "final")]
    pub final_answer: String,
    pub pathway_used: Pathway,
    pub score: Option<i32>,
    pub timed_out: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

/// Everything a case needs besides the case itself. All parts are
/// immutable and shared across worker threads.
#[derive(Clone)]
pub struct PipelineDeps {
    pub clients: ClientSet,
    pub embedder: Arc<dyn Embedder>,
    pub reranker: Arc<dyn Reranker>,
    pub counter: Arc<dyn TokenCounter>,
    pub retrieval: RetrievalConfig,
    pub public_index: Vec<EntityDoc>,
    pub kg: Option<Arc<KgDatabase>>,
    pub token_limit: usize,
    pub max_context_tokens: usize,
    /// Scores with the `p_check_gt` judge instead of exact match when set.
    pub judge: Option<ClientSet>,
}

impl PipelineDeps {
    /// Test backends, default retrieval sizes, no public data, no KG.
    pub fn new(clients: ClientSet) -> Self {
        Self {
            clients,
            embedder: Arc::new(HashedTfEmbedder::default()),
            reranker: Arc::new(TermOverlapReranker),
            counter: Arc::new(WordPieceCounter),
            retrieval: RetrievalConfig::default(),
            public_index: Vec::new(),
            kg: None,
            token_limit: DEFAULT_TOKEN_LIMIT,
            max_context_tokens: MAX_CONTEXT_TOKENS,
            judge: None,
        }
    }
}

impl std::fmt::Debug for PipelineDeps {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PipelineDeps")
            .field("embedder", &self.embedder.name())
            .field("reranker", &self.reranker.name())
            .field("counter", &self.counter.name())
            .field("retrieval", &self.retrieval)
            .field("public_docs", &self.public_index.len())
            .field("kg", &self.kg.is_some())
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchConfig {
    pub deadline: Duration,
    pub parallelism: usize,
    pub record_timing: bool,
    pub task_override: Option<u8>,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self {
            deadline: Duration::from_secs(30),
            parallelism: 4,
            record_timing: false,
            task_override: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path} line {line}: {detail}")]
    Case { path: PathBuf, line: usize, detail: String },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("tasks 2 and 3 need a knowledge graph")]
    MissingKg,
}

fn validate_case(case: &QueryCase, task: Option<u8>) -> Result<u8, String> {
    let task = task.ok_or("no task given in the case or on the command line")?;
    if !(1..=3).contains(&task) {
        return Err(format!("task must be 1, 2 or 3, got {task}"));
    }
    if task < 3 && case.pages.len() > 5 {
        return Err(format!("task {task} allows at most 5 pages, got {}", case.pages.len()));
    }
    let mut ids = std::collections::HashSet::new();
    if let Some(dup) = case.pages.iter().find(|p| !ids.insert(&p.page_id)) {
        return Err(format!("duplicate page_id `{}`", dup.page_id));
    }
    Ok(task)
}

/// Parse and validate a case file completely before anything runs.
pub fn read_cases(path: &Path, task_override: Option<u8>) -> Result<Vec<QueryCase>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cases = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |detail: String| PipelineError::Case {
            path: path.to_path_buf(),
            line: i + 1,
            detail,
        };
        let case: QueryCase = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        validate_case(&case, task_override.or(case.task)).map_err(bad)?;
        cases.push(case);
    }
    Ok(cases)
}

/// Answer one case within `deadline`. On expiry the answer is forced to
/// "i don't know" and the record is flagged.
pub fn answer_case(case: &QueryCase, deps: &PipelineDeps, config: &BatchConfig) -> Result<AnswerRecord, PipelineError> {
    let budget = Budget::new(config.deadline);
    let task = validate_case(case, config.task_override.or(case.task)).map_err(|detail| PipelineError::Case {
        path: PathBuf::new(),
        line: 0,
        detail,
    })?;
    let db = match task {
        1 => None,
        _ => Some(deps.kg.as_deref().ok_or(PipelineError::MissingKg)?),
    };

    let outcome = (|| {
        if budget.expired() {
            return Err(pathways::TimedOut);
        }
        let needs_domain = task > 1 || !deps.public_index.is_empty();
        let domain = needs_domain.then(|| pathways::classify(deps, &case.query));
        let kg_answer = match (db, domain) {
            (Some(db), Some(domain)) => Some(pathways::answer_kg_pathway(deps, db, case, domain, &budget)?),
            (Some(_), None) => Some(IDK.to_string()),
            _ => None,
        };
        let web_answer = pathways::answer_web_pathway(deps, case, task, domain, &budget)?;
        Ok((kg_answer, web_answer))
    })();

    let (kg_answer, web_answer, timed_out) = match outcome {
        Ok((kg, web)) => (kg, web, false),
        Err(pathways::TimedOut) => (db.map(|_| IDK.to_string()), IDK.to_string(), true),
    };
    let (final_answer, pathway_used) = arbitrate(kg_answer.as_deref(), &web_answer);
    let score = case
        .ground_truth
        .as_deref()
        .map(|gt| score_answer(&final_answer, gt, &case.query, deps.judge.as_ref()));
    Ok(AnswerRecord {
        query: case.query.clone(),
        task,
        domain: case.domain,
        kg_answer,
        web_answer,
        final_answer,
        pathway_used,
        score,
        timed_out,
        elapsed_ms: config.record_timing.then(|| budget.elapsed().as_millis() as u64),
    })
}

/// Answer every case, concurrently up to `config.parallelism` when all
/// clients allow it. Records come back in input order.
pub fn run_batch(
    cases: &[QueryCase],
    deps: &PipelineDeps,
    config: &BatchConfig,
) -> Result<Vec<AnswerRecord>, PipelineError> {
    let concurrent = TemplateId::ALL.iter().all(|t| deps.clients.client_for(*t).concurrent());
    if !concurrent || config.parallelism <= 1 {
        return cases.iter().map(|c| answer_case(c, deps, config)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .expect("thread pool");
    pool.install(|| cases.par_iter().map(|c| answer_case(c, deps, config)).collect())
}

pub fn results_jsonl(records: &[AnswerRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn write_results(path: &Path, records: &[AnswerRecord]) -> Result<(), PipelineError> {
    std::fs::write(path, results_jsonl(records)).map_err(|source| PipelineError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_results(path: &Path) -> Result<Vec<AnswerRecord>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| PipelineError::Case {
                path: path.to_path_buf(),
                line: i + 1,
                detail: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub cases: usize,
    pub scored: usize,
    pub correct: usize,
    pub incorrect: usize,
    pub abstained: usize,
    pub total_score: i64,
    /// `None` when no case carried a ground truth.
    pub mean_score: Option<f64>,
}

impl GroupSummary {
    fn add(&mut self, r: &AnswerRecord) {
        self.cases += 1;
        if let Some(s) = r.score {
            self.scored += 1;
            self.total_score += i64::from(s);
            match s {
                1 => self.correct += 1,
                0 => self.abstained += 1,
                _ => self.incorrect += 1,
            }
        }
        self.mean_score = (self.scored > 0).then(|| self.total_score as f64 / self.scored as f64);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    #[serde(flatten)]
    pub overall: GroupSummary,
    pub timed_out: usize,
    pub pathways: BTreeMap<Pathway, usize>,
    pub per_task: BTreeMap<u8, GroupSummary>,
    pub per_domain: BTreeMap<Domain, GroupSummary>,
}

pub fn summarize(records: &[AnswerRecord]) -> BatchSummary {
    let mut s = BatchSummary::default();
    for r in records {
        s.overall.add(r);
        s.timed_out += usize::from(r.timed_out);
        *s.pathways.entry(r.pathway_used).or_default() += 1;
        s.per_task.entry(r.task).or_default().add(r);
        if let Some(d) = r.domain {
            s.per_domain.entry(d).or_default().add(r);
        }
    }
    s
}
