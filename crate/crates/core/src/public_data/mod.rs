//! Public-data pathway: entity paragraphs built from open datasets, domain
//! routing, entity extraction and paragraph lookup.

mod ingest;
mod lookup;
mod serialize;

use serde::{Deserialize, Serialize};

pub use ingest::{ingest, ingest_file, load_index, write_index, AttributeMapping, IngestError, IngestMapping};
pub use lookup::{
    classify_domain, default_policy, extract_entities, lookup_paragraphs, EntityDoc, LookupError, MatchLevel,
    MatchPolicy,
};
pub use serialize::serialize_entity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Movie,
    Finance,
    Music,
    Sports,
    Other,
}

impl Domain {
    pub const ALL: [Domain; 5] = [
        Domain::Movie,
        Domain::Finance,
        Domain::Music,
        Domain::Sports,
        Domain::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Domain::Movie => "movie",
            Domain::Finance => "finance",
            Domain::Music => "music",
            Domain::Sports => "sports",
            Domain::Other => "other",
        }
    }
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_lowercase();
        Domain::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| format!("unknown domain `{s}`"))
    }
}
