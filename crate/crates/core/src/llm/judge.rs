//! Parsing of judge replies.

use serde_json::Value;

/// Reads the `Accuracy` field of the first JSON object in `reply`. Keys
/// and string values compare case-insensitively; anything unparseable is
/// judged false.
pub fn parse_judgement(reply: &str) -> bool {
    first_json_object(reply)
        .and_then(|obj| {
            obj.as_object()?
                .iter()
                .find(|(k, _)| k.eq_ignore_ascii_case("accuracy"))
                .map(|(_, v)| match v {
                    Value::Bool(b) => *b,
                    Value::String(s) => s.trim().eq_ignore_ascii_case("true"),
                    _ => false,
                })
        })
        .unwrap_or(false)
}

fn first_json_object(text: &str) -> Option<Value> {
    text.char_indices().filter(|&(_, c)| c == '{').find_map(|(i, _)| {
        let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(v @ Value::Object(_))) => Some(v),
            _ => None,
        }
    })
}

/// A yes/no reply counts as yes when its first word is "yes".
pub fn parse_yes(reply: &str) -> bool {
    reply
        .split(|c: char| !c.is_alphanumeric())
        .find(|w| !w.is_empty())
        .is_some_and(|w| w.eq_ignore_ascii_case("yes"))
}

/// Lowercase, punctuation removed, whitespace collapsed.
pub fn normalize_answer(text: &str) -> String {
    text.chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .collect::<String>()
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn is_abstention(text: &str) -> bool {
    normalize_answer(text) == "i dont know"
}
