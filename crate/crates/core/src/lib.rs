//! Retrieval-augmented question answering over web pages, public entity
//! data and a movie knowledge graph.
//!
//! Model-dependent pieces (embedders, rerankers, generation clients, token
//! counters) are trait objects picked from named registries, with
//! deterministic implementations shipped for tests and fixtures.

pub mod exec;
pub mod kg;
pub mod kgql;
pub mod llm;
pub mod pipeline;
pub mod public_data;
pub mod registry;
pub mod sft;
pub mod web;
