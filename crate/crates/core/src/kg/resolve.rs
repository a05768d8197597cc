//! Entity resolution for names produced by a language model.
//!
//! Matching cascade, first tier with a hit wins:
//! 1. exact string equality
//! 2. equality after [`normalize_key`]
//! 3. substring containment in either direction; closest length wins
//! 4. token-overlap (Jaccard over content words); highest score wins
//!
//! Ties inside a tier go to the lexicographically smallest key.

use std::collections::BTreeSet;

use super::{normalize_key, KgDatabase};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntityTable {
    Person,
    Movie,
}

const STOPWORDS: &[&str] = &["a", "an", "and", "the", "of", "in", "on", "to", "for"];

pub(crate) fn content_tokens(s: &str) -> BTreeSet<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| !STOPWORDS.contains(&t.as_str()))
        .collect()
}

pub fn resolve_entity(db: &KgDatabase, table: EntityTable, query_name: &str) -> Option<String> {
    let keys: BTreeSet<&str> = match table {
        EntityTable::Person => db.persons.iter().map(|p| p.name.as_str()).collect(),
        EntityTable::Movie => db.movies.iter().map(|m| m.title.as_str()).collect(),
    };
    resolve_among(keys.iter().copied(), query_name)
}

/// Cascade over an arbitrary candidate set. Candidates are deduplicated and
/// visited in lexicographic order so ties resolve deterministically.
pub fn resolve_among<'a>(candidates: impl IntoIterator<Item = &'a str>, query_name: &str) -> Option<String> {
    let keys: BTreeSet<&str> = candidates.into_iter().collect();
    if query_name.trim().is_empty() {
        return None;
    }
    if let Some(k) = keys.iter().find(|k| **k == query_name) {
        return Some(k.to_string());
    }
    let q = normalize_key(query_name);
    if let Some(k) = keys.iter().find(|k| normalize_key(k) == q) {
        return Some(k.to_string());
    }

    let mut best: Option<(usize, &str)> = None;
    for k in &keys {
        let nk = normalize_key(k);
        if nk.contains(&q) || q.contains(&nk) {
            let diff = nk.len().abs_diff(q.len());
            if best.is_none_or(|(d, _)| diff < d) {
                best = Some((diff, k));
            }
        }
    }
    if let Some((_, k)) = best {
        return Some(k.to_string());
    }

    let qt = content_tokens(&q);
    if qt.is_empty() {
        return None;
    }
    let mut best: Option<(f64, &str)> = None;
    for k in &keys {
        let kt = content_tokens(k);
        let inter = qt.intersection(&kt).count();
        if inter == 0 {
            continue;
        }
        let score = inter as f64 / qt.union(&kt).count() as f64;
        if best.is_none_or(|(s, _)| score > s) {
            best = Some((score, k));
        }
    }
    best.map(|(_, k)| k.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TITLES: &[&str] = &["the greater meaning of water", "small town ecstasy", "Rain Man", "rain"];

    #[test]
    fn drops_leading_article_via_substring() {
        assert_eq!(
            resolve_among(TITLES.iter().copied(), "greater meaning of water").as_deref(),
            Some("the greater meaning of water")
        );
    }

    #[test]
    fn exact_and_case_insensitive() {
        assert_eq!(
            resolve_among(TITLES.iter().copied(), "Rain Man").as_deref(),
            Some("Rain Man")
        );
        assert_eq!(
            resolve_among(TITLES.iter().copied(), "rain  man").as_deref(),
            Some("Rain Man")
        );
        assert_eq!(resolve_among(TITLES.iter().copied(), "RAIN").as_deref(), Some("rain"));
    }

    #[test]
    fn token_overlap_fallback() {
        assert_eq!(
            resolve_among(TITLES.iter().copied(), "ecstasy in a small city").as_deref(),
            Some("small town ecstasy")
        );
    }

    #[test]
    fn no_shared_tokens_is_none() {
        assert_eq!(resolve_among(TITLES.iter().copied(), "zebra quantum"), None);
        assert_eq!(resolve_among(TITLES.iter().copied(), "the of"), None);
        assert_eq!(resolve_among(TITLES.iter().copied(), "   "), None);
    }

    #[test]
    fn substring_ties_break_lexicographically() {
        let keys = ["abx", "aby"];
        assert_eq!(resolve_among(keys.iter().copied(), "ab").as_deref(), Some("abx"));
    }
}
