//! Query dialects: the set of API function names a domain exposes.

use std::sync::Arc;

use crate::registry::Registry;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FunctionSig {
    pub name: &'static str,
    /// Number of entity arguments before the optional condition slot.
    pub entity_args: usize,
}

pub trait Dialect: Send + Sync {
    fn name(&self) -> &str;
    fn functions(&self) -> &[FunctionSig];

    fn function(&self, name: &str) -> Option<FunctionSig> {
        let lower = name.to_ascii_lowercase();
        self.functions().iter().copied().find(|f| f.name == lower)
    }

    /// Whether a `sort` statement may open a program.
    fn sort_may_lead(&self) -> bool {
        false
    }
}

pub const GET_PERSON: &str = "get_person";
pub const GET_MOVIE: &str = "get_movie";
pub const GET_CAST: &str = "get_movie_person_cast";
pub const GET_CREW: &str = "get_movie_person_crew";
pub const GET_OSCAR: &str = "get_movie_person_oscar";

const MOVIE_FUNCTIONS: [FunctionSig; 5] = [
    FunctionSig {
        name: GET_PERSON,
        entity_args: 1,
    },
    FunctionSig {
        name: GET_MOVIE,
        entity_args: 1,
    },
    FunctionSig {
        name: GET_CAST,
        entity_args: 2,
    },
    FunctionSig {
        name: GET_CREW,
        entity_args: 2,
    },
    FunctionSig {
        name: GET_OSCAR,
        entity_args: 2,
    },
];

#[derive(Debug, Clone, Copy, Default)]
pub struct MovieDialect;

impl Dialect for MovieDialect {
    fn name(&self) -> &str {
        "movie"
    }

    fn functions(&self) -> &[FunctionSig] {
        &MOVIE_FUNCTIONS
    }
}

pub fn dialect_registry() -> Registry<dyn Dialect> {
    let mut reg: Registry<dyn Dialect> = Registry::new("dialect");
    reg.register("movie", |_| Ok(Arc::new(MovieDialect) as Arc<dyn Dialect>));
    reg
}
