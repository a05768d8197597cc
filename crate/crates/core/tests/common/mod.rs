//! Shared generators and reference implementations for the integration
//! tests and the acceptance harness.

#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;

use kgrag_core::kg::{load_kg, KgDatabase};
use kgrag_core::kgql::{
    ApiCall, Arg, CmpOp, Condition, Literal, Modifiers, Projection, QueryProgram, SortSpec, Statement, StatementKind,
};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, TestRunner};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(rel: &str) -> PathBuf {
    fixtures_dir().join(rel)
}

pub fn movie_kg() -> KgDatabase {
    load_kg(fixture("movie_kg.json")).expect("bundled fixture loads")
}

/// `n` values drawn from `strategy` with a fixed seed.
pub fn sample<S: Strategy>(strategy: S, n: usize) -> Vec<S::Value> {
    let mut runner = TestRunner::new_with_rng(
        Config::default(),
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    (0..n)
        .map(|_| {
            strategy
                .new_tree(&mut runner)
                .expect("strategy yields a value")
                .current()
        })
        .collect()
}

const FUNCTIONS: [(&str, usize); 5] = [
    ("get_person", 1),
    ("get_movie", 1),
    ("get_movie_person_cast", 2),
    ("get_movie_person_crew", 2),
    ("get_movie_person_oscar", 2),
];

fn arb_word() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,8}"
}

/// Keys: plain identifiers or arbitrary non-empty text that must be quoted.
fn arb_key() -> impl Strategy<Value = String> {
    prop_oneof![
        4 => arb_word().prop_filter("len is reserved for projection", |k| k != "len"),
        1 => "[A-Za-z \"\\\\'.,:-]{1,12}".prop_filter("keys carry text and len is reserved", |k| {
            !k.trim().is_empty() && k != "len"
        }),
        1 => Just("None".to_string()),
    ]
}

fn arb_text() -> impl Strategy<Value = String> {
    prop_oneof![
        3 => "[a-z][a-z ]{0,15}",
        1 => "[ -~]{0,12}",
        1 => "[a-zé ü\\n\\t\"]{1,10}",
    ]
}

fn arb_number() -> impl Strategy<Value = f64> {
    prop_oneof![
        (-5000i64..5000).prop_map(|n| n as f64),
        (0u32..100_000, 1u32..4).prop_map(|(n, d)| f64::from(n) / 10f64.powi(d as i32)),
        (-1000i32..1000).prop_map(|n| f64::from(n) / 8.0),
    ]
}

pub fn arb_literal() -> impl Strategy<Value = Literal> {
    prop_oneof![
        3 => arb_text().prop_map(Literal::Str),
        2 => arb_number().prop_map(Literal::Number),
        1 => any::<bool>().prop_map(Literal::Bool),
    ]
}

pub fn arb_condition() -> impl Strategy<Value = Condition> {
    (prop::sample::select(CmpOp::ALL.to_vec()), arb_key(), arb_literal())
        .prop_map(|(op, key, value)| Condition::new(op, key, value))
}

fn arb_arg() -> impl Strategy<Value = Arg> {
    prop_oneof![
        3 => arb_text().prop_map(Arg::Value),
        1 => Just(Arg::None),
        1 => Just(Arg::Star),
    ]
}

fn arb_modifiers() -> impl Strategy<Value = Modifiers> {
    (any::<bool>(), any::<bool>(), prop::option::of(1usize..50)).prop_map(|(all, avg, slice)| Modifiers {
        all,
        avg,
        slice,
    })
}

fn arb_projection() -> impl Strategy<Value = Option<Projection>> {
    prop_oneof![
        1 => Just(None),
        1 => Just(Some(Projection::Len)),
        3 => arb_key().prop_map(|k| Some(Projection::Key(k))),
    ]
}

fn arb_call() -> impl Strategy<Value = StatementKind> {
    prop::sample::select(FUNCTIONS.to_vec()).prop_flat_map(|(function, arity)| {
        (
            prop::collection::vec(arb_arg(), arity),
            prop::collection::vec(arb_condition(), 0..4),
        )
            .prop_map(move |(args, conditions)| {
                StatementKind::Call(ApiCall {
                    function: function.to_string(),
                    args,
                    conditions,
                })
            })
    })
}

fn arb_sort() -> impl Strategy<Value = StatementKind> {
    (prop::collection::vec(arb_condition(), 0..3), arb_key(), any::<bool>()).prop_map(
        |(conditions, key, descending)| {
            StatementKind::Sort(SortSpec {
                conditions,
                key,
                descending,
            })
        },
    )
}

fn arb_statement(kind: BoxedStrategy<StatementKind>) -> impl Strategy<Value = Statement> {
    (kind, arb_projection(), arb_modifiers()).prop_map(|(kind, projection, modifiers)| Statement {
        kind,
        projection,
        modifiers,
    })
}

/// Any well-formed program of the movie dialect: a call first, then calls
/// and sorts in any order.
pub fn arb_program() -> impl Strategy<Value = QueryProgram> {
    let first = arb_statement(arb_call().boxed());
    let rest = prop::collection::vec(arb_statement(prop_oneof![arb_call(), arb_sort()].boxed()), 0..4);
    (first, rest).prop_map(|(first, rest)| QueryProgram {
        statements: std::iter::once(first).chain(rest).collect(),
    })
}

/// Which grammar productions a program exercises, for coverage checks.
#[derive(Debug, Default, Clone)]
pub struct Coverage {
    pub functions: std::collections::BTreeSet<String>,
    pub ops: std::collections::BTreeSet<&'static str>,
    pub sort_asc: bool,
    pub sort_desc: bool,
    pub len: bool,
    pub avg: bool,
    pub all: bool,
    pub slice: bool,
    pub none_arg: bool,
    pub star_arg: bool,
}

impl Coverage {
    pub fn add(&mut self, p: &QueryProgram) {
        for s in &p.statements {
            match &s.kind {
                StatementKind::Call(c) => {
                    self.functions.insert(c.function.clone());
                    for a in &c.args {
                        self.none_arg |= *a == Arg::None;
                        self.star_arg |= *a == Arg::Star;
                    }
                    for cond in &c.conditions {
                        self.ops.insert(cond.op.name());
                    }
                }
                StatementKind::Sort(spec) => {
                    self.sort_desc |= spec.descending;
                    self.sort_asc |= !spec.descending;
                    for cond in &spec.conditions {
                        self.ops.insert(cond.op.name());
                    }
                }
            }
            self.len |= s.projection == Some(Projection::Len);
            self.avg |= s.modifiers.avg;
            self.all |= s.modifiers.all;
            self.slice |= s.modifiers.slice.is_some();
        }
    }

    pub fn complete(&self) -> bool {
        self.functions.len() == 5
            && self.ops.len() == 4
            && self.sort_asc
            && self.sort_desc
            && self.len
            && self.avg
            && self.all
            && self.slice
            && self.none_arg
            && self.star_arg
    }
}

/// Programs whose entity names, keys and values come from the fixture,
/// shaped like the programs a model would emit.
pub fn arb_fixture_program(db: &KgDatabase) -> BoxedStrategy<QueryProgram> {
    let mut persons: Vec<String> = db.persons.iter().map(|p| p.name.clone()).collect();
    persons.extend(["walt becker", "cruise", "DUSTIN  HOFFMAN", "nobody at all"].map(String::from));
    let mut titles: Vec<String> = db.movies.iter().map(|m| m.title.clone()).collect();
    titles.extend(["rain man", "greater meaning of water", "the artist", "no such film"].map(String::from));

    let mut values: Vec<Literal> = Vec::new();
    for m in &db.movies {
        values.push(Literal::Str(m.title.clone()));
        values.push(Literal::Str(m.release_date.clone()));
        values.push(Literal::Number(m.rating));
        values.push(Literal::Number(m.budget as f64));
        values.extend(m.genres.iter().map(|g| Literal::Str(g.to_lowercase())));
        values.extend(m.year.map(|y| Literal::Number(y as f64)));
    }
    for c in &db.crew {
        values.push(Literal::Str(c.job.clone()));
    }
    for o in &db.oscar {
        values.push(Literal::Str(o.category.clone()));
        values.push(Literal::Number(o.year as f64));
    }
    values.extend([
        Literal::Bool(true),
        Literal::Bool(false),
        Literal::Str("true".into()),
        Literal::Str("en".into()),
        Literal::Str("2005-01-01".into()),
        Literal::Number(6.5),
    ]);

    let keys = |f: &str| -> Vec<String> {
        let mut k: Vec<String> = oracle::schema(f).to_vec();
        k.push("gender".into());
        k
    };
    let persons = prop::sample::select(persons);
    let titles = prop::sample::select(titles);
    let values = prop::sample::select(values);
    let all_keys: Vec<String> = FUNCTIONS
        .iter()
        .flat_map(|(f, _)| keys(f))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();

    let condition = {
        let values = values.clone();
        move |keys: Vec<String>| {
            (
                prop::sample::select(CmpOp::ALL.to_vec()),
                prop::sample::select(keys),
                values.clone(),
            )
                .prop_map(|(op, key, value)| Condition::new(op, key, value))
        }
    };

    let call = {
        let condition = condition.clone();
        move |allow_star: bool| {
            let persons = persons.clone();
            let titles = titles.clone();
            let condition = condition.clone();
            prop::sample::select(FUNCTIONS.to_vec()).prop_flat_map(move |(function, arity)| {
                let movie_arg = prop_oneof![
                    3 => titles.clone().prop_map(Arg::Value),
                    2 => Just(Arg::None),
                    if allow_star { 1 } else { 0 } => Just(Arg::Star),
                ];
                let person_arg = prop_oneof![
                    3 => persons.clone().prop_map(Arg::Value),
                    2 => Just(Arg::None),
                    if allow_star { 1 } else { 0 } => Just(Arg::Star),
                ];
                let args: BoxedStrategy<Vec<Arg>> = match (function, arity) {
                    ("get_person", _) => person_arg.prop_map(|a| vec![a]).boxed(),
                    ("get_movie", _) => movie_arg.prop_map(|a| vec![a]).boxed(),
                    _ => (movie_arg, person_arg).prop_map(|(m, p)| vec![m, p]).boxed(),
                };
                let fkeys = keys(function);
                (
                    args,
                    prop::collection::vec(condition(fkeys.clone()), 0..3),
                    prop_oneof![
                        2 => Just(None),
                        1 => Just(Some(Projection::Len)),
                        4 => prop::sample::select(fkeys).prop_map(|k| Some(Projection::Key(k))),
                    ],
                    fixture_modifiers(),
                )
                    .prop_map(move |(args, conditions, projection, modifiers)| Statement {
                        kind: StatementKind::Call(ApiCall {
                            function: function.to_string(),
                            args,
                            conditions,
                        }),
                        projection,
                        modifiers,
                    })
            })
        }
    };

    let sort = {
        let all_keys = all_keys.clone();
        (
            prop::collection::vec(condition(all_keys.clone()), 0..2),
            prop::sample::select(all_keys.clone()),
            any::<bool>(),
            prop::option::of(prop::sample::select(all_keys)),
            fixture_modifiers(),
        )
            .prop_map(|(conditions, key, descending, projection, modifiers)| Statement {
                kind: StatementKind::Sort(SortSpec {
                    conditions,
                    key,
                    descending,
                }),
                projection: projection.map(Projection::Key),
                modifiers,
            })
    };

    let follow = prop_oneof![2 => call(true), 2 => sort];
    (call(false), prop::collection::vec(follow, 0..3))
        .prop_map(|(first, rest)| QueryProgram {
            statements: std::iter::once(first).chain(rest).collect(),
        })
        .boxed()
}

fn fixture_modifiers() -> impl Strategy<Value = Modifiers> {
    (
        prop::bool::weighted(0.3),
        prop::bool::weighted(0.15),
        prop::option::weighted(0.2, 1usize..4),
    )
        .prop_map(|(all, avg, slice)| Modifiers { all, avg, slice })
}

/// Coarse lookups over fixture names, spelling variants, misses and years.
pub fn arb_request(db: &KgDatabase) -> impl Strategy<Value = kgrag_core::kg::service::CoarseRequest> {
    let mut names: Vec<String> = db.persons.iter().map(|p| p.name.clone()).collect();
    names.extend(db.movies.iter().map(|m| m.title.clone()));
    names.extend(["RAIN MAN", " tom  cruise ", "nobody", ""].map(String::from));
    let call = prop::sample::select(vec!["person_info", "movie_info", "year_info", "get_movie_info"]);
    let key = prop_oneof![
        prop::sample::select(names).prop_map(kgrag_core::kg::CoarseKey::Name),
        (1985i64..2015).prop_map(kgrag_core::kg::CoarseKey::Year),
        (1985i64..2015).prop_map(|y| kgrag_core::kg::CoarseKey::Name(y.to_string())),
    ];
    (call, key).prop_map(|(call, key)| kgrag_core::kg::service::CoarseRequest { call: call.into(), key })
}
