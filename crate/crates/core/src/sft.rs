//! Label generation for supervised fine-tuning.
//!
//! Each training query gets one of three completions: the ground truth,
//! "i don't know" or "invalid question". A judge model decides between the
//! first two by checking the system's own prediction and, failing that,
//! whether the retrieved context mentions the ground truth.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{
    normalize_answer, parse_judgement, parse_yes, render_prompt, ClientSet, GenerationRequest, Message, PromptInputs,
    RenderError, TemplateId, CHECK_GT_EXAMPLES, DEFAULT_TOKEN_LIMIT,
};

pub const IDK: &str = "i don't know";
pub const INVALID_QUESTION: &str = "invalid question";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainExample {
    pub query_str: String,
    pub query_time: String,
    pub ground_truth: String,
    pub rag_prediction: String,
    #[serde(default)]
    pub context_str: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Invalid,
    Correct,
    Idk,
    ContextSupported,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SftLabel {
    pub query_str: String,
    pub label: String,
    pub branch: Branch,
    /// The judge errored and the conservative label was used.
    pub judge_failed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftRecord {
    pub prompt: Vec<Message>,
    pub completion: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftStats {
    pub total: usize,
    pub invalid: usize,
    pub correct: usize,
    pub idk: usize,
    pub context_supported: usize,
    pub judge_failures: usize,
}

impl SftStats {
    pub fn from_labels(labels: &[SftLabel]) -> Self {
        let mut s = SftStats {
            total: labels.len(),
            ..Default::default()
        };
        for l in labels {
            match l.branch {
                Branch::Invalid => s.invalid += 1,
                Branch::Correct => s.correct += 1,
                Branch::Idk => s.idk += 1,
                Branch::ContextSupported => s.context_supported += 1,
            }
            s.judge_failures += usize::from(l.judge_failed);
        }
        s
    }
}

#[derive(Debug, Error)]
pub enum SftError {
    #[error("cannot read examples {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("examples {path} line {line}: {detail}")]
    Example { path: PathBuf, line: usize, detail: String },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Render(#[from] RenderError),
}

fn judge_reply(judge: &ClientSet, template: TemplateId, query: &str, inputs: &PromptInputs) -> Option<String> {
    let messages = render_prompt(template, inputs).ok()?;
    match judge
        .client_for(template)
        .generate(&GenerationRequest::new(template, query, messages))
    {
        Ok(r) => Some(r),
        Err(e) => {
            log::warn!("judge failed on {}: {e}", template.name());
            None
        }
    }
}

pub fn label_query(example: &TrainExample, judge: &ClientSet) -> SftLabel {
    let label = |label: &str, branch, judge_failed| SftLabel {
        query_str: example.query_str.clone(),
        label: label.to_string(),
        branch,
        judge_failed,
    };
    if normalize_answer(&example.ground_truth) == INVALID_QUESTION {
        return label(INVALID_QUESTION, Branch::Invalid, false);
    }
    let check = PromptInputs {
        icl_examples: Some(CHECK_GT_EXAMPLES.trim_end().to_string()),
        gt_str: Some(example.ground_truth.clone()),
        our_str: Some(example.rag_prediction.clone()),
        ..PromptInputs::query(&example.query_str)
    };
    let Some(verdict) = judge_reply(judge, TemplateId::CheckGt, &example.query_str, &check) else {
        return label(IDK, Branch::Idk, true);
    };
    if parse_judgement(&verdict) {
        return label(&example.ground_truth, Branch::Correct, false);
    }
    let context = PromptInputs {
        context_str: example.context_str.clone(),
        gt_str: Some(example.ground_truth.clone()),
        ..PromptInputs::query(&example.query_str)
    };
    match judge_reply(judge, TemplateId::Context, &example.query_str, &context) {
        None => label(IDK, Branch::Idk, true),
        Some(r) if parse_yes(&r) => label(&example.ground_truth, Branch::ContextSupported, false),
        Some(_) => label(IDK, Branch::Idk, false),
    }
}

/// Labels in input order; examples are judged in parallel when every judge
/// client allows concurrent calls.
pub fn label_examples(examples: &[TrainExample], judge: &ClientSet) -> Vec<SftLabel> {
    let concurrent = [TemplateId::CheckGt, TemplateId::Context]
        .iter()
        .all(|t| judge.client_for(*t).concurrent());
    if concurrent {
        examples.par_iter().map(|e| label_query(e, judge)).collect()
    } else {
        examples.iter().map(|e| label_query(e, judge)).collect()
    }
}

pub fn sft_record(example: &TrainExample, label: &SftLabel) -> Result<SftRecord, RenderError> {
    let inputs = PromptInputs {
        token_limit: DEFAULT_TOKEN_LIMIT,
        query_time: example.query_time.clone(),
        context_str: example.context_str.clone(),
        ..PromptInputs::query(&example.query_str)
    };
    Ok(SftRecord {
        prompt: render_prompt(TemplateId::Basic, &inputs)?,
        completion: label.label.clone(),
    })
}

pub fn read_examples(path: &Path) -> Result<Vec<TrainExample>, SftError> {
    let text = std::fs::read_to_string(path).map_err(|source| SftError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let ex: TrainExample = serde_json::from_str(line).map_err(|e| SftError::Example {
            path: path.to_path_buf(),
            line: i + 1,
            detail: e.to_string(),
        })?;
        if ex.ground_truth.trim().is_empty() {
            return Err(SftError::Example {
                path: path.to_path_buf(),
                line: i + 1,
                detail: "ground_truth is empty".into(),
            });
        }
        out.push(ex);
    }
    Ok(out)
}

pub fn stats_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".stats.json");
    out.with_file_name(name)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), SftError> {
    let err = |source| SftError::Write {
        path: path.to_path_buf(),
        source,
    };
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    tmp.write_all(bytes).map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}

/// Label every example and write `{prompt, completion}` JSONL to `out` plus
/// branch counts to `<out>.stats.json`. Both files are written whole or not
/// at all.
pub fn build_sft_dataset(examples: &[TrainExample], judge: &ClientSet, out: &Path) -> Result<SftStats, SftError> {
    let labels = label_examples(examples, judge);
    let mut body = String::new();
    for (ex, label) in examples.iter().zip(&labels) {
        body.push_str(&serde_json::to_string(&sft_record(ex, label)?).expect("records serialize"));
        body.push('\n');
    }
    let stats = SftStats::from_labels(&labels);
    let mut stats_json = serde_json::to_string_pretty(&stats).expect("stats serialize");
    stats_json.push('\n');
    write_atomic(out, body.as_bytes())?;
    write_atomic(&stats_path(out), stats_json.as_bytes())?;
    Ok(stats)
}
