mod common;

use common::fixture;
use kgrag_core::llm::{ClientSet, ConstantClient};
use kgrag_core::sft::{
    build_sft_dataset, label_examples, read_examples, stats_path, Branch, SftStats, IDK, INVALID_QUESTION,
};

fn judge() -> ClientSet {
    ClientSet::load(&fixture("sft/judge.toml")).unwrap()
}

/// Hand-traced decision table for the eight fixture examples.
const EXPECTED: [(Branch, &str); 8] = [
    (Branch::Correct, "Barry Levinson"),
    (Branch::Invalid, INVALID_QUESTION),
    (Branch::Correct, "1988"),
    (Branch::ContextSupported, "4"),
    (Branch::Idk, IDK),
    (Branch::Invalid, INVALID_QUESTION),
    (Branch::ContextSupported, "92 minutes"),
    (Branch::Idk, IDK),
];

#[test]
fn branches_follow_the_decision_table() {
    let examples = read_examples(&fixture("sft/examples.jsonl")).unwrap();
    let labels = label_examples(&examples, &judge());
    let got: Vec<(Branch, &str)> = labels.iter().map(|l| (l.branch, l.label.as_str())).collect();
    assert_eq!(got, EXPECTED);
    assert!(labels.iter().all(|l| !l.judge_failed));
}

#[test]
fn dataset_matches_golden_bytes_on_every_run() {
    let examples = read_examples(&fixture("sft/examples.jsonl")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let golden = std::fs::read(fixture("sft/expected.jsonl")).unwrap();
    let golden_stats = std::fs::read(fixture("sft/expected.jsonl.stats.json")).unwrap();
    for run in 0..2 {
        let out = dir.path().join(format!("run{run}.jsonl"));
        let stats = build_sft_dataset(&examples, &judge(), &out).unwrap();
        assert_eq!(
            stats,
            SftStats {
                total: 8,
                invalid: 2,
                correct: 2,
                idk: 2,
                context_supported: 2,
                judge_failures: 0
            }
        );
        assert_eq!(std::fs::read(&out).unwrap(), golden);
        assert_eq!(std::fs::read(stats_path(&out)).unwrap(), golden_stats);
    }
}

#[test]
fn prompt_is_the_basic_template_over_the_example() {
    let line = std::fs::read_to_string(fixture("sft/expected.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(line.lines().next().unwrap()).unwrap();
    let user = first["prompt"][1]["content"].as_str().unwrap();
    assert!(
        user.starts_with("Context information is below.\n<doc>Rain Man (1988) was directed by Barry Levinson.</doc>\n")
    );
    assert!(user.ends_with("Question: who directed rain man?\nAnswer:"));
    let system = first["prompt"][0]["content"].as_str().unwrap();
    assert!(system.contains("75 words") && system.ends_with("03/01/2024, 10:00:00 PT"));
}

#[test]
fn empty_input_gives_empty_dataset_and_zero_stats() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sft.jsonl");
    let stats = build_sft_dataset(&[], &judge(), &out).unwrap();
    assert_eq!(stats, SftStats::default());
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "");
}

#[test]
fn all_invalid_examples_never_reach_the_judge() {
    let mut examples = read_examples(&fixture("sft/examples.jsonl")).unwrap();
    for e in &mut examples {
        e.ground_truth = "invalid question".into();
    }
    let down = ClientSet::single(std::sync::Arc::new(kgrag_core::llm::UnavailableClient));
    let labels = label_examples(&examples, &down);
    assert!(labels.iter().all(|l| l.label == INVALID_QUESTION && !l.judge_failed));
    let yes = ClientSet::single(std::sync::Arc::new(ConstantClient(r#"{"Accuracy": "True"}"#.into())));
    assert!(label_examples(&examples, &yes)
        .iter()
        .all(|l| l.branch == Branch::Invalid));
}

#[test]
fn unwritable_output_leaves_no_file() {
    let examples = read_examples(&fixture("sft/examples.jsonl")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("missing-dir").join("sft.jsonl");
    assert!(build_sft_dataset(&examples, &judge(), &out).is_err());
    assert!(!out.exists());
}
