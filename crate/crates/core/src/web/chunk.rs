//! Parent-child chunking. Sizes count characters; offsets are byte offsets.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalConfig {
    pub parent_chunk_size: usize,
    pub child_chunk_size: usize,
    pub recall_k: usize,
    pub reranker_k: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            parent_chunk_size: 700,
            child_chunk_size: 200,
            recall_k: 50,
            reranker_k: 10,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid retrieval config: {0}")]
pub struct ConfigError(pub String);

impl RetrievalConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.child_chunk_size == 0 {
            return Err(ConfigError("child_chunk_size must be positive".into()));
        }
        if self.child_chunk_size > self.parent_chunk_size {
            return Err(ConfigError(format!(
                "child_chunk_size {} exceeds parent_chunk_size {}",
                self.child_chunk_size, self.parent_chunk_size
            )));
        }
        if self.recall_k == 0 || self.reranker_k > self.recall_k {
            return Err(ConfigError(format!(
                "need 0 < reranker_k <= recall_k, got reranker_k={} recall_k={}",
                self.reranker_k, self.recall_k
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChunkPair {
    pub child_id: String,
    pub parent_id: String,
    pub child_text: String,
    pub parent_text: String,
    /// Byte offset of `child_text` inside `parent_text`.
    pub child_offset: usize,
}

/// Split `text` into consecutive windows of at most `size` characters. A
/// window ends at the last position within the limit that touches
/// whitespace; a run without whitespace is cut hard at the limit. Returns
/// byte ranges that partition `text`.
pub fn split_windows(text: &str, size: usize) -> Vec<(usize, usize)> {
    assert!(size > 0, "window size must be positive");
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let byte_at = |i: usize| chars.get(i).map_or(text.len(), |&(b, _)| b);
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < chars.len() {
        let limit = pos + size;
        let end = if limit >= chars.len() {
            chars.len()
        } else {
            (pos + 1..=limit)
                .rev()
                .find(|&e| chars[e - 1].1.is_whitespace() || chars[e].1.is_whitespace())
                .unwrap_or(limit)
        };
        out.push((byte_at(pos), byte_at(end)));
        pos = end;
    }
    out
}

/// Parent windows of `parent_chunk_size`, each split into child windows of
/// `child_chunk_size`. Ids are `p{n}` and `p{n}c{m}`.
pub fn split_parent_child(text: &str, config: &RetrievalConfig) -> Vec<ChunkPair> {
    split_page_chunks("", text, config)
}

/// Like [`split_parent_child`], prefixing ids with `{page_id}/` so chunks
/// from several pages can share one pool.
pub fn split_page_chunks(page_id: &str, text: &str, config: &RetrievalConfig) -> Vec<ChunkPair> {
    let prefix = if page_id.is_empty() {
        String::new()
    } else {
        format!("{page_id}/")
    };
    let mut out = Vec::new();
    for (pi, (ps, pe)) in split_windows(text, config.parent_chunk_size).into_iter().enumerate() {
        let parent = &text[ps..pe];
        let parent_id = format!("{prefix}p{pi}");
        for (ci, (cs, ce)) in split_windows(parent, config.child_chunk_size).into_iter().enumerate() {
            out.push(ChunkPair {
                child_id: format!("{parent_id}c{ci}"),
                parent_id: parent_id.clone(),
                child_text: parent[cs..ce].to_string(),
                parent_text: parent.to_string(),
                child_offset: cs,
            });
        }
    }
    out
}
