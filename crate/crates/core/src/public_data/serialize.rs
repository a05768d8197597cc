use indexmap::IndexMap;
use serde_json::Value;

fn scalar_text(v: &Value) -> Option<String> {
    match v {
        Value::Null => None,
        Value::String(s) if s.trim().is_empty() => None,
        Value::String(s) => Some(s.trim().to_string()),
        other => Some(other.to_string()),
    }
}

/// One sentence per attribute: `The {attr} is {value}.`, or
/// `The {attr} are {a} and {b}.` for lists of two or more. A `title` value
/// is quoted with the period inside the quotes. Null or empty values become
/// "unknown".
pub fn serialize_entity(attributes: &IndexMap<String, Value>) -> String {
    attributes
        .iter()
        .map(|(attr, value)| {
            let items: Vec<String> = match value {
                Value::Array(xs) => xs.iter().filter_map(scalar_text).collect(),
                v => scalar_text(v).into_iter().collect(),
            };
            let (verb, text) = match items.len() {
                0 => ("is", "unknown".to_string()),
                1 => ("is", items[0].clone()),
                _ => ("are", items.join(" and ")),
            };
            if attr == "title" {
                format!("The {attr} {verb} \"{text}.\"")
            } else {
                format!("The {attr} {verb} {text}.")
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}
