mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{fixture, movie_kg};
use kgrag_core::llm::ClientSet;
use kgrag_core::pipeline::{
    read_cases, results_jsonl, run_batch, summarize, AnswerRecord, BatchConfig, Pathway, PipelineDeps,
};
use kgrag_core::public_data::load_index;
use kgrag_core::web::{preselect_pages, TermOverlapReranker};

pub fn e2e_deps() -> PipelineDeps {
    let mut deps = PipelineDeps::new(ClientSet::load(&fixture("e2e/llm.toml")).unwrap());
    deps.kg = Some(Arc::new(movie_kg()));
    deps.public_index = load_index(&fixture("public/movies.index.jsonl")).unwrap();
    deps.public_index
        .extend(load_index(&fixture("public/stocks.index.jsonl")).unwrap());
    deps
}

fn run(config: &BatchConfig) -> Vec<AnswerRecord> {
    let cases = read_cases(&fixture("e2e/cases.jsonl"), None).unwrap();
    run_batch(&cases, &e2e_deps(), config).unwrap()
}

/// Score and pathway per case, traced by hand from the scripted replies.
const HAND_TRACE: [(i32, Pathway); 20] = [
    (1, Pathway::Web),
    (1, Pathway::Web),
    (0, Pathway::Web),
    (-1, Pathway::Web),
    (1, Pathway::Web),
    (0, Pathway::Web),
    (-1, Pathway::Web),
    (1, Pathway::Kg),
    (1, Pathway::Kg),
    (1, Pathway::Kg),
    (1, Pathway::Web),
    (0, Pathway::Web),
    (-1, Pathway::Kg),
    (1, Pathway::Web),
    (1, Pathway::Web),
    (1, Pathway::Kg),
    (0, Pathway::Web),
    (1, Pathway::Kg),
    (1, Pathway::Kg),
    (-1, Pathway::Kg),
];

#[test]
fn batch_reproduces_the_hand_trace() {
    let records = run(&BatchConfig::default());
    let got: Vec<(i32, Pathway)> = records.iter().map(|r| (r.score.unwrap(), r.pathway_used)).collect();
    assert_eq!(got, HAND_TRACE);

    let s = summarize(&records);
    assert_eq!(
        (
            s.overall.cases,
            s.overall.correct,
            s.overall.incorrect,
            s.overall.abstained
        ),
        (20, 12, 4, 4)
    );
    assert_eq!(s.overall.total_score, 8);
    assert_eq!(s.overall.mean_score, Some(0.4));
    assert_eq!(s.pathways[&Pathway::Kg], 8);
    assert_eq!(s.per_task[&1].total_score, 1);
    assert_eq!(s.per_task[&2].total_score, 4);
    assert_eq!(s.per_task[&3].total_score, 3);
    assert_eq!(s.timed_out, 0);
}

#[test]
fn batch_output_is_byte_stable_and_matches_golden() {
    let golden = std::fs::read_to_string(fixture("e2e/expected_results.jsonl")).unwrap();
    let parallel = results_jsonl(&run(&BatchConfig::default()));
    let serial = results_jsonl(&run(&BatchConfig {
        parallelism: 1,
        ..Default::default()
    }));
    assert_eq!(parallel, golden);
    assert_eq!(serial, golden);
}

#[test]
fn kg_pathway_wins_only_with_a_real_answer() {
    for r in run(&BatchConfig::default()) {
        let kg_real = r
            .kg_answer
            .as_deref()
            .is_some_and(|a| !kgrag_core::llm::is_abstention(a));
        assert_eq!(r.pathway_used == Pathway::Kg, kg_real, "{}", r.query);
    }
}

#[test]
fn zero_deadline_abstains_everywhere() {
    let records = run(&BatchConfig {
        deadline: Duration::ZERO,
        ..Default::default()
    });
    assert!(records
        .iter()
        .all(|r| r.timed_out && r.final_answer == "i don't know" && r.score == Some(0)));
}

#[test]
fn timing_is_recorded_only_on_request_and_within_the_deadline() {
    let deadline = Duration::from_secs(5);
    let records = run(&BatchConfig {
        deadline,
        record_timing: true,
        ..Default::default()
    });
    assert!(records
        .iter()
        .all(|r| r.elapsed_ms.is_some_and(|ms| ms <= deadline.as_millis() as u64 + 50)));
    assert!(run(&BatchConfig::default()).iter().all(|r| r.elapsed_ms.is_none()));
}

#[test]
fn task_three_keeps_five_pages() {
    let cases = read_cases(&fixture("e2e/cases.jsonl"), None).unwrap();
    let case = cases.iter().find(|c| c.pages.len() == 8).unwrap();
    let kept = preselect_pages(&case.query, &case.pages, &TermOverlapReranker).items;
    assert_eq!(kept.len(), 5);
    assert_eq!(kept[0].page_id, "w1h");
}

#[test]
fn empty_case_file_gives_null_mean() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cases.jsonl");
    std::fs::write(&path, "\n").unwrap();
    let cases = read_cases(&path, Some(2)).unwrap();
    let s = summarize(&run_batch(&cases, &e2e_deps(), &BatchConfig::default()).unwrap());
    assert_eq!(s.overall.cases, 0);
    assert_eq!(s.overall.mean_score, None);
}

#[test]
fn bad_case_file_is_rejected_before_any_work() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cases.jsonl");
    std::fs::write(
        &path,
        "{\"query\": \"q\", \"task\": 1}\n{\"query\": \"q\", \"task\": 7}\n",
    )
    .unwrap();
    let err = read_cases(&path, None).unwrap_err().to_string();
    assert!(err.contains("line 2"), "{err}");
    assert!(read_cases(&dir.path().join("absent.jsonl"), None).is_err());
}

#[test]
fn whole_batch_is_fast() {
    let start = Instant::now();
    run(&BatchConfig::default());
    assert!(start.elapsed() < Duration::from_secs(5));
}
