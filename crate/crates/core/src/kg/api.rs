//! Coarse lookup calls: person, movie and year views over the tables.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::{normalize_key, KgDatabase, OscarRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoarseCall {
    PersonInfo,
    MovieInfo,
    YearInfo,
}

impl std::str::FromStr for CoarseCall {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "person_info" | "get_person_info" => Ok(Self::PersonInfo),
            "movie_info" | "get_movie_info" => Ok(Self::MovieInfo),
            "year_info" | "get_year_info" => Ok(Self::YearInfo),
            other => Err(format!("unknown call `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoarseKey {
    Year(i64),
    Name(String),
}

impl From<&str> for CoarseKey {
    fn from(s: &str) -> Self {
        CoarseKey::Name(s.to_string())
    }
}

impl From<i64> for CoarseKey {
    fn from(y: i64) -> Self {
        CoarseKey::Year(y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarseApiResponse {
    pub found: bool,
    pub payload: Value,
}

impl CoarseApiResponse {
    fn missing() -> Self {
        Self {
            found: false,
            payload: Value::Object(Map::new()),
        }
    }

    fn hit(payload: Value) -> Self {
        Self { found: true, payload }
    }
}

pub fn coarse_get(db: &KgDatabase, call: CoarseCall, key: &CoarseKey) -> CoarseApiResponse {
    match call {
        CoarseCall::PersonInfo => person_info(db, &key_text(key)),
        CoarseCall::MovieInfo => movie_info(db, &key_text(key)),
        CoarseCall::YearInfo => match key {
            CoarseKey::Year(y) => year_info(db, *y),
            CoarseKey::Name(s) => match s.trim().parse::<i64>() {
                Ok(y) => year_info(db, y),
                Err(_) => CoarseApiResponse::missing(),
            },
        },
    }
}

fn key_text(key: &CoarseKey) -> String {
    match key {
        CoarseKey::Year(y) => y.to_string(),
        CoarseKey::Name(s) => s.clone(),
    }
}

pub(crate) fn oscar_view(o: &OscarRow) -> Value {
    json!({
        "year": o.year,
        "category": o.category,
        "name": o.name,
        "movie": o.movie,
        "winner": o.winner,
    })
}

fn person_info(db: &KgDatabase, name: &str) -> CoarseApiResponse {
    let Some(p) = db.find_person(name) else {
        return CoarseApiResponse::missing();
    };
    let key = normalize_key(&p.name);
    let oscars: Vec<Value> = db
        .oscar
        .iter()
        .filter(|o| normalize_key(&o.name) == key)
        .map(oscar_view)
        .collect();
    CoarseApiResponse::hit(json!({
        "name": p.name,
        "birthday": p.birthday,
        "acted_movies": p.acted_movies,
        "directed_movies": p.directed_movies,
        "oscar_awards": oscars,
    }))
}

fn movie_info(db: &KgDatabase, title: &str) -> CoarseApiResponse {
    let Some(m) = db.find_movie(title) else {
        return CoarseApiResponse::missing();
    };
    let key = normalize_key(&m.title);
    let oscars: Vec<Value> = db
        .oscar
        .iter()
        .filter(|o| normalize_key(&o.movie) == key)
        .map(oscar_view)
        .collect();
    let cast: Vec<Value> = db
        .cast
        .iter()
        .filter(|c| normalize_key(&c.movie_name) == key)
        .map(|c| json!({"name": c.name, "character": c.character}))
        .collect();
    let crew: Vec<Value> = db
        .crew
        .iter()
        .filter(|c| normalize_key(&c.movie_name) == key)
        .map(|c| json!({"name": c.name, "job": c.job}))
        .collect();
    CoarseApiResponse::hit(json!({
        "title": m.title,
        "release_date": m.release_date,
        "original_title": m.original_title,
        "original_language": m.original_language,
        "budget": m.budget,
        "revenue": m.revenue,
        "rating": m.rating,
        "genres": m.genres,
        "year": m.year,
        "oscar_awards": oscars,
        "cast": cast,
        "crew": crew,
    }))
}

fn year_info(db: &KgDatabase, year: i64) -> CoarseApiResponse {
    let movies: Vec<&str> = db
        .movies
        .iter()
        .filter(|m| m.year == Some(year))
        .map(|m| m.title.as_str())
        .collect();
    let oscars: Vec<Value> = db.oscar.iter().filter(|o| o.year == year).map(oscar_view).collect();
    if movies.is_empty() && oscars.is_empty() {
        return CoarseApiResponse::missing();
    }
    CoarseApiResponse::hit(json!({
        "movie_list": movies,
        "oscar_awards": oscars,
    }))
}
