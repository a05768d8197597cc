//! KGQL: the regularized API language used to query the knowledge graph.
//!
//! A program is a list of statements, each either an API call
//! (`get_movie("rain man")["rating"]`) or a `sort` over the previous result.

pub mod ast;
pub mod dialect;
pub mod format;
pub mod parser;
pub mod token;

use serde::Serialize;
use thiserror::Error;

pub use ast::*;
pub use dialect::{dialect_registry, Dialect, FunctionSig, MovieDialect};
pub use format::{format_program, format_statement};
pub use parser::{parse_program, parse_program_with};
pub use token::{tokenize, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{message} at byte {offset} (expected {expected})")]
pub struct ParseError {
    pub message: String,
    pub offset: usize,
    pub expected: String,
}

impl ParseError {
    pub fn new(message: impl Into<String>, offset: usize, expected: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            offset,
            expected: expected.into(),
        }
    }
}
