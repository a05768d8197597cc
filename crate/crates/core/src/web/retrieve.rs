//! Recall over child chunks, reranking of parents and page preselection.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::backends::{cosine, BackendError, Embedder, Reranker};
use super::chunk::ChunkPair;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WebPage {
    pub page_id: String,
    #[serde(default)]
    pub snippet: String,
    #[serde(default)]
    pub html: String,
}

impl WebPage {
    /// Extracted page text, or the trimmed snippet when the HTML has none.
    pub fn text(&self) -> String {
        let text = super::extract_text(&self.html);
        if text.is_empty() {
            self.snippet.trim().to_string()
        } else {
            text
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredChunk {
    pub parent_text: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reranked<T> {
    pub items: Vec<T>,
    /// The reranker failed and `items` are the first inputs, unscored.
    pub degraded: bool,
}

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error(transparent)]
    Embedder(#[from] BackendError),
}

/// Rank children by cosine similarity to the query, keep the top `recall_k`
/// children, and return their parents in rank order without duplicates.
pub fn retrieve_children(
    query: &str,
    chunks: &[ChunkPair],
    embedder: &dyn Embedder,
    recall_k: usize,
) -> Result<Vec<String>, RetrievalError> {
    let q = embedder.embed(query)?;
    let mut scored = Vec::with_capacity(chunks.len());
    for (i, c) in chunks.iter().enumerate() {
        scored.push((cosine(&q, &embedder.embed(&c.child_text)?), i));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut seen = std::collections::HashSet::new();
    Ok(scored
        .into_iter()
        .take(recall_k)
        .filter(|&(_, i)| seen.insert(chunks[i].parent_id.as_str()))
        .map(|(_, i)| chunks[i].parent_text.clone())
        .collect())
}

/// Score every parent and keep the best `reranker_k`, ties in input order.
pub fn rerank(query: &str, parents: &[String], reranker: &dyn Reranker, reranker_k: usize) -> Reranked<ScoredChunk> {
    let scores: Result<Vec<f64>, BackendError> = parents.iter().map(|p| reranker.score(query, p)).collect();
    match scores {
        Ok(scores) => {
            let mut items: Vec<ScoredChunk> = parents
                .iter()
                .zip(scores)
                .map(|(p, score)| ScoredChunk {
                    parent_text: p.clone(),
                    score,
                })
                .collect();
            items.sort_by(|a, b| b.score.total_cmp(&a.score));
            items.truncate(reranker_k);
            Reranked { items, degraded: false }
        }
        Err(e) => {
            log::warn!("reranker degraded: {e}");
            Reranked {
                items: parents
                    .iter()
                    .take(reranker_k)
                    .map(|p| ScoredChunk {
                        parent_text: p.clone(),
                        score: 0.0,
                    })
                    .collect(),
                degraded: true,
            }
        }
    }
}

pub const PRESELECT_PAGES: usize = 5;

/// The five pages whose snippets score highest against the query.
pub fn preselect_pages(query: &str, pages: &[WebPage], reranker: &dyn Reranker) -> Reranked<WebPage> {
    let snippets: Vec<String> = pages.iter().map(|p| p.snippet.clone()).collect();
    let ranked = rerank_indices(query, &snippets, reranker);
    match ranked {
        Some(idx) => Reranked {
            items: idx
                .into_iter()
                .take(PRESELECT_PAGES)
                .map(|i| pages[i].clone())
                .collect(),
            degraded: false,
        },
        None => Reranked {
            items: pages.iter().take(PRESELECT_PAGES).cloned().collect(),
            degraded: true,
        },
    }
}

fn rerank_indices(query: &str, texts: &[String], reranker: &dyn Reranker) -> Option<Vec<usize>> {
    let mut scored = Vec::with_capacity(texts.len());
    for (i, t) in texts.iter().enumerate() {
        match reranker.score(query, t) {
            Ok(s) => scored.push((s, i)),
            Err(e) => {
                log::warn!("reranker degraded: {e}");
                return None;
            }
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Some(scored.into_iter().map(|(_, i)| i).collect())
}
