//! Evaluation of KGQL programs against a [`KgDatabase`].
//!
//! Each API call behaves like a SELECT over one table (or a MOVIE, PERSON, X
//! join for the `get_movie_person_*` family). Entity arguments are resolved
//! with [`resolve_entity`] first; conditions are evaluated only on rows that
//! already match the entity arguments. A `sort` statement consumes the
//! previous statement's rows, and `*` substitutes the previous statement's
//! presented values into an entity slot.

mod condition;
pub mod nl;

use serde::Serialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::kg::api::oscar_view;
use crate::kg::{normalize_key, resolve_entity, EntityTable, KgDatabase};
use crate::kgql::dialect::{GET_CAST, GET_CREW, GET_MOVIE, GET_OSCAR, GET_PERSON};
use crate::kgql::{ApiCall, Arg, Modifiers, Projection, QueryProgram, SortSpec, StatementKind};

pub use condition::eval_condition;
pub(crate) use condition::{compare_values, eval_all, present, value_number, value_text};
pub use nl::to_natural_language;

pub type Record = Map<String, Value>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecErrorKind {
    UnknownKey,
    TypeMismatch,
    EmptyPipeline,
    BackendMiss,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{kind:?}: {detail}")]
pub struct ExecError {
    pub kind: ExecErrorKind,
    pub detail: String,
}

impl ExecError {
    pub fn new(kind: ExecErrorKind, detail: impl Into<String>) -> Self {
        Self {
            kind,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    Len,
    Avg,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultSet {
    /// Index of the statement that produced this result.
    pub source_statement: usize,
    /// Records (JSON objects sharing one field set) or scalars.
    pub rows: Vec<Value>,
    /// Field names of record rows; empty once projected.
    pub schema: Vec<String>,
    pub projected_key: Option<String>,
    pub aggregate: Option<Aggregate>,
    /// Present only the first row unless the statement carried `ALL`.
    pub take_first: bool,
    /// Human-readable description of what was queried.
    pub subject: String,
    /// Superseded by a following `sort`.
    pub consumed: bool,
}

impl ResultSet {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_records(&self) -> bool {
        self.projected_key.is_none() && self.aggregate.is_none()
    }

    pub fn presented(&self) -> &[Value] {
        if self.take_first && !self.rows.is_empty() {
            &self.rows[..1]
        } else {
            &self.rows
        }
    }
}

#[derive(Debug, Default)]
pub struct ExecutionContext {
    pub emitted: Vec<ResultSet>,
}

impl ExecutionContext {
    pub fn last_result(&self) -> Option<&ResultSet> {
        self.emitted.last()
    }
}

pub const PERSON_FIELDS: &[&str] = &["name", "birthday", "acted_movies", "directed_movies", "oscar_awards"];
pub const MOVIE_FIELDS: &[&str] = &[
    "title",
    "release_date",
    "original_title",
    "original_language",
    "budget",
    "revenue",
    "rating",
    "genres",
    "year",
];
pub const CAST_FIELDS: &[&str] = &["movie_name", "name", "character", "year"];
pub const CREW_FIELDS: &[&str] = &["movie_name", "name", "job", "year"];
pub const OSCAR_FIELDS: &[&str] = &["year", "category", "name", "movie", "movie_name", "winner"];

/// Field set of the rows an API function produces. Link-table fields take
/// precedence over movie columns, which take precedence over `birthday`.
pub fn function_schema(function: &str) -> Option<Vec<String>> {
    let own: &[&str] = match function {
        GET_PERSON => return Some(PERSON_FIELDS.iter().map(|s| s.to_string()).collect()),
        GET_MOVIE => return Some(MOVIE_FIELDS.iter().map(|s| s.to_string()).collect()),
        GET_CAST => CAST_FIELDS,
        GET_CREW => CREW_FIELDS,
        GET_OSCAR => OSCAR_FIELDS,
        _ => return None,
    };
    let mut fields: Vec<String> = own.iter().map(|s| s.to_string()).collect();
    for f in MOVIE_FIELDS.iter().chain(["birthday"].iter()) {
        if !fields.iter().any(|x| x == f) {
            fields.push(f.to_string());
        }
    }
    Some(fields)
}

fn person_record(db: &KgDatabase, idx: usize) -> Record {
    let p = &db.persons[idx];
    let key = normalize_key(&p.name);
    let oscars: Vec<Value> = db
        .oscar
        .iter()
        .filter(|o| normalize_key(&o.name) == key)
        .map(oscar_view)
        .collect();
    let v = json!({
        "name": p.name,
        "birthday": p.birthday,
        "acted_movies": p.acted_movies,
        "directed_movies": p.directed_movies,
        "oscar_awards": oscars,
    });
    v.as_object().cloned().unwrap_or_default()
}

pub(crate) fn movie_record(db: &KgDatabase, idx: usize) -> Record {
    let m = &db.movies[idx];
    let v = json!({
        "title": m.title,
        "release_date": m.release_date,
        "original_title": m.original_title,
        "original_language": m.original_language,
        "budget": m.budget,
        "revenue": m.revenue,
        "rating": m.rating,
        "genres": m.genres,
        "year": m.year,
    });
    v.as_object().cloned().unwrap_or_default()
}

/// One link-table row before joining: its own fields plus the movie title
/// and person name it references.
struct LinkRow {
    own: Record,
    movie: String,
    person: String,
}

fn link_rows(db: &KgDatabase, function: &str) -> Vec<LinkRow> {
    match function {
        GET_CAST => db
            .cast
            .iter()
            .map(|c| LinkRow {
                own: obj(json!({"movie_name": c.movie_name, "name": c.name, "character": c.character, "year": c.year})),
                movie: c.movie_name.clone(),
                person: c.name.clone(),
            })
            .collect(),
        GET_CREW => db
            .crew
            .iter()
            .map(|c| LinkRow {
                own: obj(json!({"movie_name": c.movie_name, "name": c.name, "job": c.job, "year": c.year})),
                movie: c.movie_name.clone(),
                person: c.name.clone(),
            })
            .collect(),
        GET_OSCAR => db
            .oscar
            .iter()
            .map(|o| {
                let mut own = obj(oscar_view(o));
                own.insert("movie_name".into(), Value::String(o.movie.clone()));
                LinkRow {
                    own,
                    movie: o.movie.clone(),
                    person: o.name.clone(),
                }
            })
            .collect(),
        _ => Vec::new(),
    }
}

fn obj(v: Value) -> Record {
    v.as_object().cloned().unwrap_or_default()
}

/// Joined records for a link table in link-row order; a link row joins with
/// every movie sharing its title.
fn joined_records(db: &KgDatabase, function: &str) -> Vec<(Record, String, String)> {
    let mut out = Vec::new();
    for link in link_rows(db, function) {
        let mkey = normalize_key(&link.movie);
        let birthday = db
            .find_person(&link.person)
            .map(|p| Value::String(p.birthday.clone()))
            .unwrap_or(Value::Null);
        for (mi, _) in db
            .movies
            .iter()
            .enumerate()
            .filter(|(_, m)| normalize_key(&m.title) == mkey)
        {
            let mut rec = link.own.clone();
            for (k, v) in movie_record(db, mi) {
                rec.entry(k).or_insert(v);
            }
            rec.entry("birthday".to_string()).or_insert(birthday.clone());
            out.push((rec, mkey.clone(), normalize_key(&link.person)));
        }
    }
    out
}

/// One constraint per entity slot: `None` means unconstrained.
type Binding = Vec<Option<String>>;

struct Executor<'a> {
    db: &'a KgDatabase,
    ctx: ExecutionContext,
}

pub fn execute_program(program: &QueryProgram, db: &KgDatabase) -> Result<Vec<ResultSet>, ExecError> {
    let mut ex = Executor {
        db,
        ctx: ExecutionContext::default(),
    };
    for (i, stmt) in program.statements.iter().enumerate() {
        let result = match &stmt.kind {
            StatementKind::Call(call) => ex.call(i, call, stmt.projection.as_ref(), stmt.modifiers)?,
            StatementKind::Sort(spec) => {
                let prev =
                    ex.ctx.emitted.last_mut().ok_or_else(|| {
                        ExecError::new(ExecErrorKind::EmptyPipeline, "sort without a previous result")
                    })?;
                prev.consumed = true;
                let prev = prev.clone();
                let sorted = apply_sort(&prev, spec)?;
                let schema = sorted.schema.clone();
                let mut r = project_and_aggregate(sorted, stmt.projection.as_ref(), stmt.modifiers, &schema)?;
                r.source_statement = i;
                r
            }
        };
        ex.ctx.emitted.push(result);
    }
    Ok(ex.ctx.emitted)
}

impl Executor<'_> {
    fn table_for(function: &str) -> [EntityTable; 2] {
        match function {
            GET_PERSON => [EntityTable::Person, EntityTable::Person],
            GET_MOVIE => [EntityTable::Movie, EntityTable::Movie],
            _ => [EntityTable::Movie, EntityTable::Person],
        }
    }

    fn star_values(&self) -> Result<Vec<String>, ExecError> {
        let prev = self
            .ctx
            .last_result()
            .ok_or_else(|| ExecError::new(ExecErrorKind::EmptyPipeline, "`*` without a previous result"))?;
        if prev.is_records() && !prev.rows.is_empty() {
            return Err(ExecError::new(
                ExecErrorKind::TypeMismatch,
                "`*` needs a projected previous result",
            ));
        }
        let mut out = Vec::new();
        for v in prev.presented() {
            match v {
                Value::Array(items) => out.extend(items.iter().map(value_text)),
                Value::Null => {}
                other => out.push(value_text(other)),
            }
        }
        Ok(out)
    }

    /// Candidate keys per entity slot, `[None]` when unconstrained. An
    /// unresolvable literal yields an empty candidate list.
    fn slot_candidates(&self, call: &ApiCall) -> Result<Vec<Vec<Option<String>>>, ExecError> {
        let tables = Self::table_for(&call.function);
        let mut slots = Vec::with_capacity(call.args.len());
        for (i, arg) in call.args.iter().enumerate() {
            let table = tables[i.min(1)];
            let cands = match arg {
                Arg::None => vec![None],
                Arg::Value(s) => resolve_entity(self.db, table, s)
                    .map(|k| vec![Some(normalize_key(&k))])
                    .unwrap_or_default(),
                Arg::Star => {
                    let mut keys: Vec<Option<String>> = Vec::new();
                    for v in self.star_values()? {
                        if let Some(k) = resolve_entity(self.db, table, &v) {
                            let k = Some(normalize_key(&k));
                            if !keys.contains(&k) {
                                keys.push(k);
                            }
                        }
                    }
                    keys
                }
            };
            slots.push(cands);
        }
        Ok(slots)
    }

    fn call(
        &self,
        index: usize,
        call: &ApiCall,
        projection: Option<&Projection>,
        modifiers: Modifiers,
    ) -> Result<ResultSet, ExecError> {
        let schema = function_schema(&call.function).ok_or_else(|| {
            ExecError::new(
                ExecErrorKind::BackendMiss,
                format!("no table behind `{}`", call.function),
            )
        })?;
        if let Some(Projection::Key(k)) = projection {
            if !schema.contains(k) {
                return Err(ExecError::new(
                    ExecErrorKind::UnknownKey,
                    format!("`{k}` is not a field of {}", call.function),
                ));
            }
        }
        let slots = self.slot_candidates(call)?;
        let bindings = cartesian(&slots);

        // (record, movie key, person key) in table order
        let table: Vec<(Record, String, String)> = match call.function.as_str() {
            GET_PERSON => (0..self.db.persons.len())
                .map(|i| {
                    let k = normalize_key(&self.db.persons[i].name);
                    (person_record(self.db, i), String::new(), k)
                })
                .collect(),
            GET_MOVIE => (0..self.db.movies.len())
                .map(|i| {
                    (
                        movie_record(self.db, i),
                        normalize_key(&self.db.movies[i].title),
                        String::new(),
                    )
                })
                .collect(),
            f => joined_records(self.db, f),
        };
        let single_entity = matches!(call.function.as_str(), GET_PERSON | GET_MOVIE);

        let mut rows: Vec<Value> = Vec::new();
        for binding in &bindings {
            for (rec, movie_key, person_key) in &table {
                let matches = if single_entity {
                    let own = if call.function == GET_PERSON {
                        person_key
                    } else {
                        movie_key
                    };
                    binding[0].as_ref().is_none_or(|k| k == own)
                } else {
                    binding[0].as_ref().is_none_or(|k| k == movie_key)
                        && binding[1].as_ref().is_none_or(|k| k == person_key)
                };
                if !matches || !eval_all(rec, &call.conditions)? {
                    continue;
                }
                let v = Value::Object(rec.clone());
                if bindings.len() > 1 && rows.contains(&v) {
                    continue;
                }
                rows.push(v);
            }
        }

        let base = ResultSet {
            source_statement: index,
            rows,
            schema: schema.clone(),
            projected_key: None,
            aggregate: None,
            take_first: true,
            subject: describe_call(self.db, call),
            consumed: false,
        };
        project_and_aggregate(base, projection, modifiers, &schema)
    }
}

fn cartesian(slots: &[Vec<Option<String>>]) -> Vec<Binding> {
    let mut out: Vec<Binding> = vec![Vec::new()];
    for slot in slots {
        let mut next = Vec::new();
        for prefix in &out {
            for c in slot {
                let mut b = prefix.clone();
                b.push(c.clone());
                next.push(b);
            }
        }
        out = next;
    }
    out
}

fn describe_call(db: &KgDatabase, call: &ApiCall) -> String {
    let tables = Executor::table_for(&call.function);
    let describe_arg = |i: usize, arg: &Arg| -> Option<String> {
        let noun = match tables[i.min(1)] {
            EntityTable::Movie => "movie",
            EntityTable::Person => "person",
        };
        match arg {
            Arg::None => None,
            Arg::Star => Some(format!("each {noun} from the previous result")),
            Arg::Value(s) => {
                let shown = resolve_entity(db, tables[i.min(1)], s).unwrap_or_else(|| s.clone());
                Some(format!("{noun} '{shown}'"))
            }
        }
    };
    let entities: Vec<String> = call
        .args
        .iter()
        .enumerate()
        .filter_map(|(i, a)| describe_arg(i, a))
        .collect();
    let mut subject = match call.function.as_str() {
        GET_PERSON | GET_MOVIE => {
            if entities.is_empty() {
                if call.function == GET_PERSON {
                    "persons"
                } else {
                    "movies"
                }
                .to_string()
            } else {
                entities.join(" and ")
            }
        }
        f => {
            let base = f.trim_start_matches("get_movie_person_");
            if entities.is_empty() {
                base.to_string()
            } else {
                format!("{base} of {}", entities.join(" and "))
            }
        }
    };
    append_conditions(&mut subject, &call.conditions);
    subject
}

fn append_conditions(subject: &mut String, conditions: &[crate::kgql::Condition]) {
    if conditions.is_empty() {
        return;
    }
    let parts: Vec<String> = conditions
        .iter()
        .map(|c| format!("{} {} {}", c.key, c.op.symbol(), c.value))
        .collect();
    subject.push_str(" where ");
    subject.push_str(&parts.join(" and "));
}

/// Filter by the sort conditions, then stable-sort on `spec.key`; rows
/// without the key keep their relative order after all keyed rows.
pub fn apply_sort(rows: &ResultSet, spec: &SortSpec) -> Result<ResultSet, ExecError> {
    if rows.rows.is_empty() {
        return Err(ExecError::new(
            ExecErrorKind::EmptyPipeline,
            "sort over an empty result",
        ));
    }
    let empty = Record::new();
    let mut kept = Vec::with_capacity(rows.rows.len());
    for r in &rows.rows {
        let rec = r.as_object().unwrap_or(&empty);
        if eval_all(rec, &spec.conditions)? {
            kept.push(r.clone());
        }
    }
    let key_of = |v: &Value| -> Option<Value> { v.as_object().and_then(|o| present(o, &spec.key)).cloned() };
    let (mut keyed, missing): (Vec<Value>, Vec<Value>) = kept.into_iter().partition(|v| key_of(v).is_some());
    keyed.sort_by(|a, b| {
        let (ka, kb) = (key_of(a).unwrap_or(Value::Null), key_of(b).unwrap_or(Value::Null));
        let ord = compare_values(&ka, &kb);
        if spec.descending {
            ord.reverse()
        } else {
            ord
        }
    });
    keyed.extend(missing);

    let mut subject = rows.subject.clone();
    if !spec.conditions.is_empty() {
        let parts: Vec<String> = spec
            .conditions
            .iter()
            .map(|c| format!("{} {} {}", c.key, c.op.symbol(), c.value))
            .collect();
        let joiner = if subject.contains(" where ") {
            " and "
        } else {
            " where "
        };
        subject.push_str(joiner);
        subject.push_str(&parts.join(" and "));
    }
    subject.push_str(&format!(
        " sorted by {}{}",
        spec.key,
        if spec.descending { " descending" } else { " ascending" }
    ));
    Ok(ResultSet {
        source_statement: rows.source_statement,
        rows: keyed,
        schema: rows.schema.clone(),
        projected_key: rows.projected_key.clone(),
        aggregate: rows.aggregate,
        take_first: true,
        subject,
        consumed: false,
    })
}

/// Projection, then `len`/`AVG`, then `[:n]`; `ALL` clears the take-first
/// presentation flag.
pub fn project_and_aggregate(
    mut rows: ResultSet,
    projection: Option<&Projection>,
    modifiers: Modifiers,
    schema: &[String],
) -> Result<ResultSet, ExecError> {
    match projection {
        Some(Projection::Key(k)) => {
            if !schema.iter().any(|s| s == k) {
                return Err(ExecError::new(
                    ExecErrorKind::UnknownKey,
                    format!("`{k}` is not a field of the rows"),
                ));
            }
            rows.rows = rows
                .rows
                .iter()
                .map(|r| r.get(k).cloned().unwrap_or(Value::Null))
                .collect();
            rows.projected_key = Some(k.clone());
            rows.schema.clear();
        }
        Some(Projection::Len) => {
            rows.rows = vec![json!(rows.rows.len())];
            rows.projected_key = Some("len".to_string());
            rows.aggregate = Some(Aggregate::Len);
            rows.schema.clear();
        }
        None => {}
    }
    if modifiers.avg {
        if rows.projected_key.is_none() {
            return Err(ExecError::new(
                ExecErrorKind::TypeMismatch,
                "AVG needs a projected numeric key",
            ));
        }
        if rows.rows.is_empty() {
            return Err(ExecError::new(ExecErrorKind::EmptyPipeline, "AVG over an empty result"));
        }
        let mut sum = 0.0;
        for v in &rows.rows {
            sum += value_number(v).ok_or_else(|| {
                ExecError::new(ExecErrorKind::TypeMismatch, format!("AVG over non-numeric value {v}"))
            })?;
        }
        let mean = sum / rows.rows.len() as f64;
        rows.rows = vec![serde_json::Number::from_f64(mean).map_or(Value::Null, Value::Number)];
        rows.aggregate = Some(Aggregate::Avg);
    }
    if let Some(n) = modifiers.slice {
        rows.rows.truncate(n);
    }
    rows.take_first = !modifiers.all;
    Ok(rows)
}
