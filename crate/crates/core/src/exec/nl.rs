//! Rendering of execution results as sentences for the answering model.

use serde_json::Value;

use super::{value_text, Aggregate, ResultSet};
use crate::kgql::{format_statement, QueryProgram};

/// One sentence per visible result, in statement order. Results consumed by
/// a following `sort` are skipped since the sorted copy supersedes them.
pub fn to_natural_language(results: &[ResultSet], program: &QueryProgram) -> String {
    results
        .iter()
        .filter(|r| !r.consumed)
        .map(|r| sentence(r, program))
        .collect::<Vec<_>>()
        .join(" ")
}

fn sentence(result: &ResultSet, program: &QueryProgram) -> String {
    if result.rows.is_empty() {
        let stmt = program
            .statements
            .get(result.source_statement)
            .map(format_statement)
            .unwrap_or_default();
        return format!("No result found for {stmt}.");
    }
    let head = match (&result.aggregate, &result.projected_key) {
        (Some(Aggregate::Avg), Some(k)) => format!("average {k}"),
        (_, Some(k)) => k.clone(),
        (_, None) => "record".to_string(),
    };
    let values: Vec<String> = result.presented().iter().map(render_value).collect();
    format!("The {head} of {} is {}.", result.subject, values.join("; "))
}

fn render_value(v: &Value) -> String {
    match v {
        Value::Null => "unknown".to_string(),
        Value::Array(items) if items.is_empty() => "none".to_string(),
        Value::Array(items) => items.iter().map(render_value).collect::<Vec<_>>().join(", "),
        Value::Object(map) => {
            let fields: Vec<String> = map.iter().map(|(k, v)| format!("{k}: {}", render_value(v))).collect();
            format!("{{{}}}", fields.join(", "))
        }
        other => value_text(other),
    }
}
