//! Web pathway: HTML extraction, parent-child chunking, recall and rerank.

mod backends;
mod chunk;
mod extract;
mod retrieve;

pub use backends::{
    cosine, embedder_registry, reranker_registry, terms, BackendError, Embedder, HashedTfEmbedder, Reranker,
    TermOverlapReranker,
};
pub use chunk::{split_page_chunks, split_parent_child, split_windows, ChunkPair, ConfigError, RetrievalConfig};
pub use extract::extract_text;
pub use retrieve::{
    preselect_pages, rerank, retrieve_children, Reranked, RetrievalError, ScoredChunk, WebPage, PRESELECT_PAGES,
};
