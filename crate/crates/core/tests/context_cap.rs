use kgrag_core::llm::{build_context, TokenCounter, WordPieceCounter, MAX_CONTEXT_TOKENS};
use kgrag_core::web::ScoredChunk;
use proptest::prelude::*;

fn segment() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z ]{0,400}",
        "[!?.,;:]{0,3000}",
        "[a-z]{0,9000}",
        "(<doc>|</doc>|<do<doc>c>|[a-z ]){0,300}",
        "([a-z]{1,6} ){0,2500}",
    ]
}

/// The `<doc>` bodies of a context, in order.
fn bodies(context: &str) -> Vec<&str> {
    context
        .split("<doc>")
        .skip(1)
        .map(|s| s.split("</doc>").next().unwrap())
        .collect()
}

fn strip_markers(s: &str) -> String {
    let mut cur = s.to_string();
    loop {
        let next = cur.replace("<doc>", "").replace("</doc>", "");
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn context_respects_the_cap_and_keeps_segment_order(
        public in prop::collection::vec(segment(), 0..4),
        web in prop::collection::vec((segment(), 0.0f64..1.0), 0..6),
        cap in prop::sample::select(vec![MAX_CONTEXT_TOKENS, 500, 37]),
    ) {
        let chunks: Vec<ScoredChunk> = web.iter().map(|(t, s)| ScoredChunk { parent_text: t.clone(), score: *s }).collect();
        let counter = WordPieceCounter;
        let context = build_context(&public, &chunks, cap, &counter);
        prop_assert!(counter.count(&context) <= cap);

        let mut ranked = chunks.clone();
        ranked.sort_by(|a, b| b.score.total_cmp(&a.score));
        let expected: Vec<String> = public
            .iter()
            .cloned()
            .chain(ranked.into_iter().map(|c| c.parent_text))
            .map(|s| strip_markers(&s).trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        let got = bodies(&context);
        prop_assert_eq!(context.matches("<doc>").count(), got.len());
        prop_assert_eq!(context.matches("</doc>").count(), got.len());
        prop_assert!(got.len() <= expected.len());
        for (i, body) in got.iter().enumerate() {
            if i + 1 < got.len() {
                prop_assert_eq!(*body, expected[i].as_str());
            } else {
                prop_assert!(expected[i].starts_with(body) && !body.is_empty());
            }
        }
        // Greedy maximality: if every included segment is whole, the next one did not fit even partially.
        let whole = got.iter().zip(&expected).all(|(b, e)| *b == e.as_str());
        if whole && got.len() < expected.len() {
            let next = &expected[got.len()];
            let first_word_end = next.find(char::is_whitespace).unwrap_or(next.len());
            let mut probe = context.clone();
            if !probe.is_empty() { probe.push('\n'); }
            probe.push_str(&format!("<doc>{}</doc>", &next[..first_word_end]));
            prop_assert!(counter.count(&probe) > cap);
        }
    }
}
