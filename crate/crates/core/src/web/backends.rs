//! Scoring backends for retrieval and their registries.

use std::sync::Arc;

use thiserror::Error;

use crate::registry::{BackendOptions, Registry};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{backend} failed: {detail}")]
pub struct BackendError {
    pub backend: String,
    pub detail: String,
}

pub trait Embedder: Send + Sync {
    fn name(&self) -> &str;
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<f32>, BackendError>;
}

pub trait Reranker: Send + Sync {
    fn name(&self) -> &str;
    fn score(&self, query: &str, text: &str) -> Result<f64, BackendError>;
}

/// Lowercased alphanumeric runs.
pub fn terms(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Term-frequency vector hashed into a fixed number of buckets, then
/// L2-normalized. Texts sharing no terms (barring collisions) score zero.
#[derive(Debug, Clone)]
pub struct HashedTfEmbedder {
    dimension: usize,
}

impl HashedTfEmbedder {
    pub const DEFAULT_DIMENSION: usize = 256;

    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0);
        Self { dimension }
    }
}

impl Default for HashedTfEmbedder {
    fn default() -> Self {
        Self::new(Self::DEFAULT_DIMENSION)
    }
}

impl Embedder for HashedTfEmbedder {
    fn name(&self) -> &str {
        "hashed-tf"
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<f32>, BackendError> {
        let mut v = vec![0f32; self.dimension];
        for t in terms(text) {
            v[(fnv1a(t.as_bytes()) % self.dimension as u64) as usize] += 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        Ok(v)
    }
}

/// Fraction of distinct query terms that occur in the text.
#[derive(Debug, Clone, Default)]
pub struct TermOverlapReranker;

impl Reranker for TermOverlapReranker {
    fn name(&self) -> &str {
        "term-overlap"
    }

    fn score(&self, query: &str, text: &str) -> Result<f64, BackendError> {
        let q: std::collections::BTreeSet<String> = terms(query).collect();
        if q.is_empty() {
            return Ok(0.0);
        }
        let t: std::collections::HashSet<String> = terms(text).collect();
        Ok(q.iter().filter(|w| t.contains(*w)).count() as f64 / q.len() as f64)
    }
}

pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| f64::from(*x) * f64::from(*y)).sum();
    let na: f64 = a.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

pub fn embedder_registry() -> Registry<dyn Embedder> {
    let mut r: Registry<dyn Embedder> = Registry::new("embedder");
    let invalid = |detail: String| crate::registry::RegistryError::InvalidOptions {
        family: "embedder",
        name: "hashed-tf".into(),
        detail,
    };
    r.register("hashed-tf", move |opts: &BackendOptions| {
        let dim = match opts.values.get("dimension") {
            None => HashedTfEmbedder::DEFAULT_DIMENSION,
            Some(v) => match v.as_u64() {
                Some(d) if d > 0 => d as usize,
                _ => return Err(invalid(format!("dimension must be a positive integer, got {v}"))),
            },
        };
        Ok(Arc::new(HashedTfEmbedder::new(dim)) as Arc<dyn Embedder>)
    });
    r
}

pub fn reranker_registry() -> Registry<dyn Reranker> {
    let mut r: Registry<dyn Reranker> = Registry::new("reranker");
    r.register("term-overlap", |_: &BackendOptions| {
        Ok(Arc::new(TermOverlapReranker) as Arc<dyn Reranker>)
    });
    r
}
