//! Arbitration between pathways and answer scoring.

use serde::{Deserialize, Serialize};

use crate::llm::{
    is_abstention, normalize_answer, parse_judgement, render_prompt, ClientSet, GenerationRequest, PromptInputs,
    TemplateId, CHECK_GT_EXAMPLES,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pathway {
    Kg,
    Web,
}

/// The knowledge-graph answer wins unless it is absent or an abstention.
pub fn arbitrate(kg_answer: Option<&str>, web_answer: &str) -> (String, Pathway) {
    match kg_answer {
        Some(kg) if !is_abstention(kg) => (kg.to_string(), Pathway::Kg),
        _ => (web_answer.to_string(), Pathway::Web),
    }
}

/// 0 for an abstention, otherwise +1 when correct and -1 when not.
/// Correctness is normalized exact match, or the judge's verdict when a
/// judge is given (falling back to exact match if the judge errors).
pub fn score_answer(final_answer: &str, ground_truth: &str, query: &str, judge: Option<&ClientSet>) -> i32 {
    if is_abstention(final_answer) {
        return 0;
    }
    let exact = normalize_answer(final_answer) == normalize_answer(ground_truth);
    let correct = match judge {
        None => exact,
        Some(judge) => {
            let inputs = PromptInputs {
                icl_examples: Some(CHECK_GT_EXAMPLES.trim_end().to_string()),
                gt_str: Some(ground_truth.to_string()),
                our_str: Some(final_answer.to_string()),
                ..PromptInputs::query(query)
            };
            render_prompt(TemplateId::CheckGt, &inputs)
                .ok()
                .and_then(|messages| {
                    judge
                        .client_for(TemplateId::CheckGt)
                        .generate(&GenerationRequest::new(TemplateId::CheckGt, query, messages))
                        .ok()
                })
                .map_or(exact, |reply| parse_judgement(&reply))
        }
    };
    if correct {
        1
    } else {
        -1
    }
}
