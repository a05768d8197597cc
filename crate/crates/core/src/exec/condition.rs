//! Condition evaluation and value ordering.

use std::cmp::Ordering;

use serde_json::Value;

use super::{ExecError, ExecErrorKind, Record};
use crate::kg::parse_date;
use crate::kgql::{CmpOp, Condition, Literal};

/// A field counts as present when it exists, is not null and is not an
/// empty string.
pub(crate) fn present<'a>(record: &'a Record, key: &str) -> Option<&'a Value> {
    match record.get(key) {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) if s.trim().is_empty() => None,
        Some(v) => Some(v),
    }
}

pub(crate) fn value_number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse::<f64>().ok().filter(|f| f.is_finite()),
        _ => None,
    }
}

fn literal_number(l: &Literal) -> Option<f64> {
    match l {
        Literal::Number(n) => Some(*n),
        Literal::Str(s) => s.trim().parse::<f64>().ok().filter(|f| f.is_finite()),
        Literal::Bool(_) => None,
    }
}

fn norm(s: &str) -> String {
    s.trim().to_lowercase()
}

pub(crate) fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn scalar_eq(field: &Value, lit: &Literal) -> bool {
    if let (Some(a), Some(b)) = (value_number(field), literal_number(lit)) {
        return a == b;
    }
    norm(&value_text(field)) == norm(&lit.to_string())
}

fn is_iso_date(s: &str) -> bool {
    parse_date(s.trim()).is_some()
}

fn ordered(field: &Value, lit: &Literal, key: &str) -> Result<Ordering, ExecError> {
    if let (Some(a), Some(b)) = (value_number(field), literal_number(lit)) {
        return Ok(a.partial_cmp(&b).unwrap_or(Ordering::Equal));
    }
    if let (Value::String(a), Literal::Str(b)) = (field, lit) {
        if is_iso_date(a) && is_iso_date(b) {
            return Ok(a.trim().cmp(b.trim()));
        }
    }
    Err(ExecError::new(
        ExecErrorKind::TypeMismatch,
        format!("cannot order `{key}` value {field} against {lit:?}"),
    ))
}

pub fn eval_condition(record: &Record, condition: &Condition) -> Result<bool, ExecError> {
    let Some(field) = present(record, &condition.key) else {
        return Ok(false);
    };
    match condition.op {
        CmpOp::Eq | CmpOp::Neq => {
            let hit = match field {
                Value::Array(items) => items.iter().any(|i| scalar_eq(i, &condition.value)),
                other => scalar_eq(other, &condition.value),
            };
            Ok(if condition.op == CmpOp::Eq { hit } else { !hit })
        }
        CmpOp::Ge | CmpOp::Le => {
            let ord = ordered(field, &condition.value, &condition.key)?;
            Ok(if condition.op == CmpOp::Ge {
                ord != Ordering::Less
            } else {
                ord != Ordering::Greater
            })
        }
    }
}

/// All conditions in order, short-circuiting on the first false.
pub(crate) fn eval_all(record: &Record, conditions: &[Condition]) -> Result<bool, ExecError> {
    for c in conditions {
        if !eval_condition(record, c)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, PartialOrd)]
enum SortKey {
    Num(f64),
    Text(String),
}

fn sort_key(v: &Value) -> SortKey {
    match value_number(v) {
        Some(n) => SortKey::Num(n),
        None => SortKey::Text(norm(&value_text(v))),
    }
}

/// Ordering between two present sort values: numbers before text, numbers
/// numerically, text case-insensitively.
pub(crate) fn compare_values(a: &Value, b: &Value) -> Ordering {
    sort_key(a).partial_cmp(&sort_key(b)).unwrap_or(Ordering::Equal)
}
