//! In-memory movie knowledge graph.
//!
//! Five relational tables (persons, movies, cast, crew, oscar) loaded from a
//! single JSON fixture, with the coarse lookup calls layered on top in
//! [`api`] and a request/response service in [`service`].

pub mod api;
pub mod resolve;
pub mod service;

use std::collections::HashSet;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use api::{coarse_get, CoarseApiResponse, CoarseCall, CoarseKey};
pub use resolve::{resolve_entity, EntityTable};

#[derive(Debug, Error)]
pub enum KgError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed fixture at line {line}, column {column}, field `{field}`: {message}")]
    Malformed {
        line: usize,
        column: usize,
        field: String,
        message: String,
    },
    #[error("integrity error in {table}[{index}]: {detail}")]
    Integrity {
        table: &'static str,
        index: usize,
        detail: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonRow {
    pub name: String,
    #[serde(default)]
    pub birthday: String,
    #[serde(default)]
    pub acted_movies: Vec<String>,
    #[serde(default)]
    pub directed_movies: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovieRow {
    pub title: String,
    #[serde(default)]
    pub release_date: String,
    #[serde(default)]
    pub original_title: String,
    #[serde(default)]
    pub original_language: String,
    #[serde(default)]
    pub budget: u64,
    #[serde(default)]
    pub revenue: u64,
    #[serde(default)]
    pub rating: f64,
    #[serde(default)]
    pub genres: Vec<String>,
    #[serde(default)]
    pub year: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CastRow {
    pub movie_name: String,
    pub name: String,
    pub character: String,
    #[serde(default)]
    pub year: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrewRow {
    pub movie_name: String,
    pub name: String,
    pub job: String,
    #[serde(default)]
    pub year: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscarRow {
    pub year: i64,
    pub category: String,
    #[serde(default)]
    pub name: String,
    pub movie: String,
    pub winner: bool,
}

/// The five tables. Immutable once loaded.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KgDatabase {
    #[serde(default)]
    pub persons: Vec<PersonRow>,
    #[serde(default)]
    pub movies: Vec<MovieRow>,
    #[serde(default)]
    pub cast: Vec<CastRow>,
    #[serde(default)]
    pub crew: Vec<CrewRow>,
    #[serde(default)]
    pub oscar: Vec<OscarRow>,
}

/// Lowercase, trim, collapse internal whitespace. Used for every name/title
/// comparison in the store.
pub fn normalize_key(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn load_kg(path: impl AsRef<Path>) -> Result<KgDatabase, KgError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| KgError::Io {
        path: path.display().to_string(),
        source,
    })?;
    KgDatabase::from_json_str(&text)
}

impl KgDatabase {
    pub fn from_json_str(text: &str) -> Result<Self, KgError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let mut db: KgDatabase = serde_path_to_error::deserialize(de).map_err(|err| {
            let field = err.path().to_string();
            let inner = err.into_inner();
            KgError::Malformed {
                line: inner.line(),
                column: inner.column(),
                field,
                message: inner.to_string(),
            }
        })?;
        db.complete_and_validate()?;
        Ok(db)
    }

    pub fn find_person(&self, name: &str) -> Option<&PersonRow> {
        let key = normalize_key(name);
        self.persons.iter().find(|p| normalize_key(&p.name) == key)
    }

    /// First movie (table order) whose normalized title equals `title`.
    pub fn find_movie(&self, title: &str) -> Option<&MovieRow> {
        let key = normalize_key(title);
        self.movies.iter().find(|m| normalize_key(&m.title) == key)
    }

    fn complete_and_validate(&mut self) -> Result<(), KgError> {
        let mut seen_people = HashSet::new();
        for (i, p) in self.persons.iter().enumerate() {
            if p.name.trim().is_empty() {
                return Err(integrity("persons", i, "empty name"));
            }
            if !seen_people.insert(normalize_key(&p.name)) {
                return Err(integrity("persons", i, format!("duplicate name `{}`", p.name)));
            }
            if !p.birthday.is_empty() && parse_date(&p.birthday).is_none() {
                return Err(integrity(
                    "persons",
                    i,
                    format!("birthday `{}` is not YYYY-MM-DD", p.birthday),
                ));
            }
        }

        let mut seen_movies = HashSet::new();
        for (i, m) in self.movies.iter_mut().enumerate() {
            if m.title.trim().is_empty() {
                return Err(integrity("movies", i, "empty title"));
            }
            let date_year = if m.release_date.is_empty() {
                None
            } else {
                match parse_date(&m.release_date) {
                    Some(d) => Some(d.year() as i64),
                    None => {
                        return Err(integrity(
                            "movies",
                            i,
                            format!("release_date `{}` is not YYYY-MM-DD", m.release_date),
                        ))
                    }
                }
            };
            match (m.year, date_year) {
                (Some(y), Some(d)) if y != d => {
                    return Err(integrity(
                        "movies",
                        i,
                        format!("year {y} disagrees with release_date {}", m.release_date),
                    ))
                }
                (None, Some(d)) => m.year = Some(d),
                _ => {}
            }
            if !(0.0..=10.0).contains(&m.rating) {
                return Err(integrity("movies", i, format!("rating {} outside [0,10]", m.rating)));
            }
            if !seen_movies.insert((normalize_key(&m.title), m.year)) {
                return Err(integrity(
                    "movies",
                    i,
                    format!("duplicate title `{}` within one year", m.title),
                ));
            }
        }

        let titles: HashSet<String> = self.movies.iter().map(|m| normalize_key(&m.title)).collect();
        for (i, c) in self.cast.iter().enumerate() {
            check_link("cast", i, &c.movie_name, &c.name, &titles, &seen_people, true)?;
            if c.character.trim().is_empty() {
                return Err(integrity("cast", i, "empty character"));
            }
        }
        for (i, c) in self.crew.iter().enumerate() {
            check_link("crew", i, &c.movie_name, &c.name, &titles, &seen_people, true)?;
            if c.job.trim().is_empty() {
                return Err(integrity("crew", i, "empty job"));
            }
        }
        let this_year = chrono::Utc::now().year() as i64;
        for (i, o) in self.oscar.iter().enumerate() {
            check_link("oscar", i, &o.movie, &o.name, &titles, &seen_people, false)?;
            if !(1929..=this_year).contains(&o.year) {
                return Err(integrity(
                    "oscar",
                    i,
                    format!("year {} outside [1929, {this_year}]", o.year),
                ));
            }
        }

        // Derive filmography lists from the link tables.
        let cast = self.cast.clone();
        let crew = self.crew.clone();
        for p in &mut self.persons {
            let key = normalize_key(&p.name);
            for c in cast.iter().filter(|c| normalize_key(&c.name) == key) {
                push_unique(&mut p.acted_movies, &c.movie_name);
            }
            for c in crew
                .iter()
                .filter(|c| normalize_key(&c.name) == key && c.job.eq_ignore_ascii_case("director"))
            {
                push_unique(&mut p.directed_movies, &c.movie_name);
            }
        }
        Ok(())
    }
}

fn push_unique(list: &mut Vec<String>, title: &str) {
    let key = normalize_key(title);
    if !list.iter().any(|t| normalize_key(t) == key) {
        list.push(title.to_string());
    }
}

fn check_link(
    table: &'static str,
    index: usize,
    movie: &str,
    person: &str,
    titles: &HashSet<String>,
    people: &HashSet<String>,
    person_required: bool,
) -> Result<(), KgError> {
    if !titles.contains(&normalize_key(movie)) {
        return Err(integrity(table, index, format!("unknown movie `{movie}`")));
    }
    if person.trim().is_empty() {
        if person_required {
            return Err(integrity(table, index, "empty person name"));
        }
        return Ok(());
    }
    if !people.contains(&normalize_key(person)) {
        return Err(integrity(table, index, format!("unknown person `{person}`")));
    }
    Ok(())
}

fn integrity(table: &'static str, index: usize, detail: impl Into<String>) -> KgError {
    KgError::Integrity {
        table,
        index,
        detail: detail.into(),
    }
}

pub(crate) fn parse_date(s: &str) -> Option<NaiveDate> {
    if s.len() != 10 {
        return None;
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()
}
