//! A deliberately naive KGQL interpreter: every call materializes its full
//! table (link tables joined against every movie by nested loops), then
//! scans rows one by one. It shares no code with the executor beyond the
//! AST and the entity resolver of the store.

use std::cmp::Ordering;

use chrono::NaiveDate;
use kgrag_core::exec::ExecErrorKind;
use kgrag_core::kg::{resolve_entity, EntityTable, KgDatabase};
use kgrag_core::kgql::{Arg, CmpOp, Condition, Literal, Projection, QueryProgram, Statement, StatementKind};
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub rows: Vec<Value>,
    pub presented: Vec<Value>,
    pub projected_key: Option<String>,
}

struct Prev {
    rows: Vec<Value>,
    schema: Vec<String>,
    projected: Option<String>,
    aggregated: bool,
    take_first: bool,
}

impl Prev {
    fn presented(&self) -> Vec<Value> {
        if self.take_first {
            self.rows.iter().take(1).cloned().collect()
        } else {
            self.rows.clone()
        }
    }
}

pub fn schema(function: &str) -> &'static [String] {
    use std::sync::OnceLock;
    static SCHEMAS: OnceLock<Vec<(&'static str, Vec<String>)>> = OnceLock::new();
    let all = SCHEMAS.get_or_init(|| {
        let movie = [
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
        let joined = |own: &[&str]| -> Vec<String> {
            let mut v: Vec<String> = own.iter().map(|s| s.to_string()).collect();
            for f in movie.iter().chain(&["birthday"]) {
                if !v.iter().any(|x| x == f) {
                    v.push(f.to_string());
                }
            }
            v
        };
        vec![
            (
                "get_person",
                ["name", "birthday", "acted_movies", "directed_movies", "oscar_awards"]
                    .map(String::from)
                    .to_vec(),
            ),
            ("get_movie", movie.map(String::from).to_vec()),
            (
                "get_movie_person_cast",
                joined(&["movie_name", "name", "character", "year"]),
            ),
            ("get_movie_person_crew", joined(&["movie_name", "name", "job", "year"])),
            (
                "get_movie_person_oscar",
                joined(&["year", "category", "name", "movie", "movie_name", "winner"]),
            ),
        ]
    });
    &all.iter().find(|(f, _)| *f == function).expect("known function").1
}

fn norm_key(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

fn oscar_object(db: &KgDatabase, i: usize) -> Map<String, Value> {
    let o = &db.oscar[i];
    let v = json!({"year": o.year, "category": o.category, "name": o.name, "movie": o.movie, "winner": o.winner});
    v.as_object().unwrap().clone()
}

/// (row, movie key, person key) for every row of the function's table.
fn table(db: &KgDatabase, function: &str) -> Vec<(Value, String, String)> {
    let mut out = Vec::new();
    match function {
        "get_person" => {
            for p in &db.persons {
                let mut awards = Vec::new();
                for i in 0..db.oscar.len() {
                    if norm_key(&db.oscar[i].name) == norm_key(&p.name) {
                        awards.push(Value::Object(oscar_object(db, i)));
                    }
                }
                let row = json!({
                    "name": p.name, "birthday": p.birthday, "acted_movies": p.acted_movies,
                    "directed_movies": p.directed_movies, "oscar_awards": awards,
                });
                out.push((row, String::new(), norm_key(&p.name)));
            }
        }
        "get_movie" => {
            for m in &db.movies {
                out.push((movie_row(m), norm_key(&m.title), String::new()));
            }
        }
        link => {
            let links: Vec<(Map<String, Value>, String, String)> = match link {
                "get_movie_person_cast" => db
                    .cast
                    .iter()
                    .map(|c| {
                        let v = json!({"movie_name": c.movie_name, "name": c.name, "character": c.character, "year": c.year});
                        (v.as_object().unwrap().clone(), c.movie_name.clone(), c.name.clone())
                    })
                    .collect(),
                "get_movie_person_crew" => db
                    .crew
                    .iter()
                    .map(|c| {
                        let v = json!({"movie_name": c.movie_name, "name": c.name, "job": c.job, "year": c.year});
                        (v.as_object().unwrap().clone(), c.movie_name.clone(), c.name.clone())
                    })
                    .collect(),
                _ => (0..db.oscar.len())
                    .map(|i| {
                        let mut m = oscar_object(db, i);
                        m.insert("movie_name".into(), json!(db.oscar[i].movie));
                        (m, db.oscar[i].movie.clone(), db.oscar[i].name.clone())
                    })
                    .collect(),
            };
            for (own, movie, person) in links {
                for m in &db.movies {
                    if norm_key(&m.title) != norm_key(&movie) {
                        continue;
                    }
                    let mut row = own.clone();
                    for (k, v) in movie_row(m).as_object().unwrap() {
                        if !row.contains_key(k) {
                            row.insert(k.clone(), v.clone());
                        }
                    }
                    if !row.contains_key("birthday") {
                        let bday = db
                            .persons
                            .iter()
                            .find(|p| norm_key(&p.name) == norm_key(&person))
                            .map_or(Value::Null, |p| json!(p.birthday));
                        row.insert("birthday".into(), bday);
                    }
                    out.push((Value::Object(row), norm_key(&movie), norm_key(&person)));
                }
            }
        }
    }
    out
}

fn movie_row(m: &kgrag_core::kg::MovieRow) -> Value {
    json!({
        "title": m.title, "release_date": m.release_date, "original_title": m.original_title,
        "original_language": m.original_language, "budget": m.budget, "revenue": m.revenue,
        "rating": m.rating, "genres": m.genres, "year": m.year,
    })
}

fn field<'a>(row: &'a Value, key: &str) -> Option<&'a Value> {
    match row.get(key) {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) if s.trim().is_empty() => None,
        other => other,
    }
}

fn as_number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse::<f64>().ok().filter(|x| x.is_finite()),
        _ => None,
    }
}

fn literal_number(l: &Literal) -> Option<f64> {
    match l {
        Literal::Number(n) => Some(*n),
        Literal::Str(s) => s.trim().parse::<f64>().ok().filter(|x| x.is_finite()),
        Literal::Bool(_) => None,
    }
}

fn literal_text(l: &Literal) -> String {
    match l {
        Literal::Str(s) => s.clone(),
        Literal::Number(n) => format!("{n}"),
        Literal::Bool(b) => format!("{b}"),
    }
}

fn text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn iso(s: &str) -> bool {
    let s = s.trim();
    s.len() == 10 && NaiveDate::parse_from_str(s, "%Y-%m-%d").is_ok()
}

fn equal(v: &Value, lit: &Literal) -> bool {
    match (as_number(v), literal_number(lit)) {
        (Some(a), Some(b)) => a == b,
        _ => text(v).trim().to_lowercase() == literal_text(lit).trim().to_lowercase(),
    }
}

fn holds(row: &Value, c: &Condition) -> Result<bool, ExecErrorKind> {
    let Some(v) = field(row, &c.key) else {
        return Ok(false);
    };
    let ord = match c.op {
        CmpOp::Eq | CmpOp::Neq => {
            let hit = match v {
                Value::Array(xs) => xs.iter().any(|x| equal(x, &c.value)),
                _ => equal(v, &c.value),
            };
            return Ok(hit == (c.op == CmpOp::Eq));
        }
        _ => match (as_number(v), literal_number(&c.value), v, &c.value) {
            (Some(a), Some(b), _, _) => a.partial_cmp(&b).unwrap_or(Ordering::Equal),
            (_, _, Value::String(a), Literal::Str(b)) if iso(a) && iso(b) => a.trim().cmp(b.trim()),
            _ => return Err(ExecErrorKind::TypeMismatch),
        },
    };
    Ok(match c.op {
        CmpOp::Ge => ord != Ordering::Less,
        _ => ord != Ordering::Greater,
    })
}

fn holds_all(row: &Value, conds: &[Condition]) -> Result<bool, ExecErrorKind> {
    for c in conds {
        if !holds(row, c)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn tables_of(function: &str) -> [EntityTable; 2] {
    match function {
        "get_person" => [EntityTable::Person; 2],
        "get_movie" => [EntityTable::Movie; 2],
        _ => [EntityTable::Movie, EntityTable::Person],
    }
}

/// Ascending sort order of present values: numbers first (numerically),
/// then text (lowercased, trimmed).
fn sort_cmp(a: &Value, b: &Value) -> Ordering {
    match (as_number(a), as_number(b)) {
        (Some(x), Some(y)) => x.partial_cmp(&y).unwrap_or(Ordering::Equal),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => text(a).trim().to_lowercase().cmp(&text(b).trim().to_lowercase()),
    }
}

fn finish(
    mut rows: Vec<Value>,
    schema: &[String],
    mut projected: Option<String>,
    mut aggregated: bool,
    stmt: &Statement,
) -> Result<Prev, ExecErrorKind> {
    let mut schema = schema.to_vec();
    match &stmt.projection {
        Some(Projection::Key(k)) => {
            if !schema.contains(k) {
                return Err(ExecErrorKind::UnknownKey);
            }
            rows = rows
                .iter()
                .map(|r| r.get(k.as_str()).cloned().unwrap_or(Value::Null))
                .collect();
            projected = Some(k.clone());
            schema.clear();
        }
        Some(Projection::Len) => {
            rows = vec![json!(rows.len())];
            projected = Some("len".into());
            aggregated = true;
            schema.clear();
        }
        None => {}
    }
    if stmt.modifiers.avg {
        if projected.is_none() {
            return Err(ExecErrorKind::TypeMismatch);
        }
        if rows.is_empty() {
            return Err(ExecErrorKind::EmptyPipeline);
        }
        let mut total = 0.0;
        for r in &rows {
            total += as_number(r).ok_or(ExecErrorKind::TypeMismatch)?;
        }
        let mean = total / rows.len() as f64;
        rows = vec![serde_json::Number::from_f64(mean).map_or(Value::Null, Value::Number)];
        aggregated = true;
    }
    if let Some(n) = stmt.modifiers.slice {
        rows.truncate(n);
    }
    Ok(Prev {
        rows,
        schema,
        projected,
        aggregated,
        take_first: !stmt.modifiers.all,
    })
}

pub fn run(program: &QueryProgram, db: &KgDatabase) -> Result<Vec<OracleResult>, ExecErrorKind> {
    let mut done: Vec<Prev> = Vec::new();
    for stmt in &program.statements {
        let next = match &stmt.kind {
            StatementKind::Call(call) => {
                let schema = schema(&call.function);
                if let Some(Projection::Key(k)) = &stmt.projection {
                    if !schema.contains(k) {
                        return Err(ExecErrorKind::UnknownKey);
                    }
                }
                let kinds = tables_of(&call.function);
                let mut slots: Vec<Vec<Option<String>>> = Vec::new();
                for (i, arg) in call.args.iter().enumerate() {
                    let t = kinds[i.min(1)];
                    slots.push(match arg {
                        Arg::None => vec![None],
                        Arg::Value(s) => resolve_entity(db, t, s)
                            .map(|k| norm_key(&k))
                            .into_iter()
                            .map(Some)
                            .collect(),
                        Arg::Star => {
                            let prev = done.last().ok_or(ExecErrorKind::EmptyPipeline)?;
                            if prev.projected.is_none() && !prev.aggregated && !prev.rows.is_empty() {
                                return Err(ExecErrorKind::TypeMismatch);
                            }
                            let mut vals = Vec::new();
                            for v in prev.presented() {
                                match v {
                                    Value::Array(xs) => vals.extend(xs.iter().map(text)),
                                    Value::Null => {}
                                    other => vals.push(text(&other)),
                                }
                            }
                            let mut keys: Vec<Option<String>> = Vec::new();
                            for v in vals {
                                if let Some(k) = resolve_entity(db, t, &v).map(|k| norm_key(&k)) {
                                    if !keys.contains(&Some(k.clone())) {
                                        keys.push(Some(k));
                                    }
                                }
                            }
                            keys
                        }
                    });
                }
                let mut combos: Vec<Vec<Option<String>>> = vec![vec![]];
                for slot in &slots {
                    combos = combos
                        .iter()
                        .flat_map(|c| {
                            slot.iter().map(move |s| {
                                let mut c = c.clone();
                                c.push(s.clone());
                                c
                            })
                        })
                        .collect();
                }
                let rows_all = table(db, &call.function);
                let mut rows: Vec<Value> = Vec::new();
                for combo in &combos {
                    for (row, mk, pk) in &rows_all {
                        let entity_ok = match call.function.as_str() {
                            "get_person" => combo[0].as_ref().is_none_or(|k| k == pk),
                            "get_movie" => combo[0].as_ref().is_none_or(|k| k == mk),
                            _ => combo[0].as_ref().is_none_or(|k| k == mk) && combo[1].as_ref().is_none_or(|k| k == pk),
                        };
                        if entity_ok && holds_all(row, &call.conditions)? && !(combos.len() > 1 && rows.contains(row)) {
                            rows.push(row.clone());
                        }
                    }
                }
                finish(rows, schema, None, false, stmt)?
            }
            StatementKind::Sort(spec) => {
                let prev = done.last().ok_or(ExecErrorKind::EmptyPipeline)?;
                if prev.rows.is_empty() {
                    return Err(ExecErrorKind::EmptyPipeline);
                }
                let mut kept = Vec::new();
                for r in &prev.rows {
                    let probe = if r.is_object() { r.clone() } else { json!({}) };
                    if holds_all(&probe, &spec.conditions)? {
                        kept.push(r.clone());
                    }
                }
                let mut keyed: Vec<Value> = Vec::new();
                let mut missing: Vec<Value> = Vec::new();
                for r in kept {
                    if r.is_object() && field(&r, &spec.key).is_some() {
                        // insertion sort: stable by construction
                        let kv = field(&r, &spec.key).unwrap().clone();
                        let mut at = keyed.len();
                        while at > 0 {
                            let other = field(&keyed[at - 1], &spec.key).unwrap();
                            let ord = sort_cmp(other, &kv);
                            let ord = if spec.descending { ord.reverse() } else { ord };
                            if ord == Ordering::Greater {
                                at -= 1;
                            } else {
                                break;
                            }
                        }
                        keyed.insert(at, r);
                    } else {
                        missing.push(r);
                    }
                }
                keyed.extend(missing);
                let schema = prev.schema.clone();
                finish(keyed, &schema, prev.projected.clone(), prev.aggregated, stmt)?
            }
        };
        done.push(next);
    }
    Ok(done
        .into_iter()
        .map(|p| OracleResult {
            presented: p.presented(),
            projected_key: p.projected,
            rows: p.rows,
        })
        .collect())
}
