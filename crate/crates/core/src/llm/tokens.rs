//! Token counting, context assembly under a token cap, and reply truncation.

use std::sync::Arc;

use crate::registry::{BackendOptions, Registry};
use crate::web::ScoredChunk;

pub trait TokenCounter: Send + Sync {
    fn name(&self) -> &str;
    fn count(&self, text: &str) -> usize;
}

/// Every maximal run of alphanumeric characters is one token, and every
/// other non-whitespace character is a token of its own.
#[derive(Debug, Clone, Copy, Default)]
pub struct WordPieceCounter;

impl TokenCounter for WordPieceCounter {
    fn name(&self) -> &str {
        "word-piece"
    }

    fn count(&self, text: &str) -> usize {
        let mut n = 0;
        let mut in_word = false;
        for c in text.chars() {
            if c.is_alphanumeric() {
                if !in_word {
                    n += 1;
                    in_word = true;
                }
            } else {
                in_word = false;
                if !c.is_whitespace() {
                    n += 1;
                }
            }
        }
        n
    }
}

pub fn token_counter_registry() -> Registry<dyn TokenCounter> {
    let mut r: Registry<dyn TokenCounter> = Registry::new("token counter");
    r.register("word-piece", |_: &BackendOptions| {
        Ok(Arc::new(WordPieceCounter) as Arc<dyn TokenCounter>)
    });
    r
}

pub const MAX_CONTEXT_TOKENS: usize = 4000;
const DOC_OPEN: &str = "<doc>";
const DOC_CLOSE: &str = "</doc>";

fn strip_doc_markers(s: &str) -> String {
    let mut cur = s.to_string();
    loop {
        let next = cur.replace(DOC_OPEN, "").replace(DOC_CLOSE, "");
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

/// Byte offsets where `s` may be cut: every position directly before a
/// whitespace character, plus the full length.
fn whitespace_cuts(s: &str) -> Vec<usize> {
    let mut cuts: Vec<usize> = s
        .char_indices()
        .filter(|(i, c)| *i > 0 && c.is_whitespace())
        .map(|(i, _)| i)
        .collect();
    cuts.push(s.len());
    cuts.dedup();
    cuts
}

/// Longest whitespace-aligned prefix of `text` for which `fits` holds,
/// assuming `fits` is monotone in prefix length. `None` if no non-empty
/// prefix fits.
fn longest_fitting_prefix(text: &str, fits: impl Fn(&str) -> bool) -> Option<&str> {
    let cuts = whitespace_cuts(text);
    let (mut lo, mut hi) = (0usize, cuts.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if fits(text[..cuts[mid]].trim_end()) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    if lo == 0 {
        return None;
    }
    let prefix = text[..cuts[lo - 1]].trim_end();
    (!prefix.is_empty() && fits(prefix)).then_some(prefix)
}

/// Public paragraphs first (input order), then web chunks by descending
/// score, each wrapped in `<doc>..</doc>` and joined by newlines. Whole
/// segments are added while the total stays within `max_tokens`; the first
/// segment that does not fit is cut at a whitespace boundary if any prefix
/// of it fits, and nothing follows it.
pub fn build_context(
    public_paragraphs: &[String],
    web_chunks: &[ScoredChunk],
    max_tokens: usize,
    counter: &dyn TokenCounter,
) -> String {
    let mut web: Vec<&ScoredChunk> = web_chunks.iter().collect();
    web.sort_by(|a, b| b.score.total_cmp(&a.score));
    let segments = public_paragraphs
        .iter()
        .map(String::as_str)
        .chain(web.iter().map(|c| c.parent_text.as_str()))
        .map(|s| strip_doc_markers(s).trim().to_string())
        .filter(|s| !s.is_empty());

    let mut out = String::new();
    for seg in segments {
        let with = |body: &str| {
            let mut candidate = out.clone();
            if !candidate.is_empty() {
                candidate.push('\n');
            }
            candidate.push_str(DOC_OPEN);
            candidate.push_str(body);
            candidate.push_str(DOC_CLOSE);
            candidate
        };
        let full = with(&seg);
        if counter.count(&full) <= max_tokens {
            out = full;
            continue;
        }
        if let Some(prefix) = longest_fitting_prefix(&seg, |p| counter.count(&with(p)) <= max_tokens) {
            out = with(prefix);
        }
        break;
    }
    out
}

/// Cut `text` to at most `limit` tokens at a whitespace boundary. Text with
/// no fitting boundary prefix becomes empty.
pub fn truncate_to_tokens(text: &str, limit: usize, counter: &dyn TokenCounter) -> String {
    let text = text.trim();
    if counter.count(text) <= limit {
        return text.to_string();
    }
    longest_fitting_prefix(text, |p| counter.count(p) <= limit)
        .unwrap_or("")
        .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn chunk(text: &str, score: f64) -> ScoredChunk {
        ScoredChunk {
            parent_text: text.into(),
            score,
        }
    }

    #[test]
    fn counting_scheme() {
        let c = WordPieceCounter;
        assert_eq!(c.count(""), 0);
        assert_eq!(c.count("rain man"), 2);
        assert_eq!(c.count("The title is \"Rain Man.\""), 8);
        assert_eq!(c.count("<doc>x</doc>"), 8);
    }

    #[test]
    fn short_segments_are_wrapped_in_order() {
        let ctx = build_context(
            &["public fact".into()],
            &[chunk("low", 0.1), chunk("high", 0.9)],
            MAX_CONTEXT_TOKENS,
            &WordPieceCounter,
        );
        assert_eq!(ctx, "<doc>public fact</doc>\n<doc>high</doc>\n<doc>low</doc>");
    }

    #[test]
    fn empty_inputs_give_empty_context() {
        assert_eq!(build_context(&[], &[], MAX_CONTEXT_TOKENS, &WordPieceCounter), "");
    }

    #[test]
    fn oversized_segment_is_truncated_at_whitespace() {
        let long = (0..50).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
        let ctx = build_context(&[long], &[chunk("never", 1.0)], 20, &WordPieceCounter);
        assert!(WordPieceCounter.count(&ctx) <= 20);
        assert_eq!(ctx, "<doc>w0 w1 w2 w3 w4 w5 w6 w7 w8 w9 w10 w11 w12</doc>");
    }

    #[test]
    fn doc_markers_inside_segments_are_removed() {
        let ctx = build_context(&["a <do<doc>c> b </doc>".into()], &[], 100, &WordPieceCounter);
        assert_eq!(ctx.matches("<doc>").count(), 1);
    }

    #[test]
    fn truncation_keeps_word_boundaries() {
        let c = WordPieceCounter;
        assert_eq!(truncate_to_tokens("one two three four", 2, &c), "one two");
        assert_eq!(truncate_to_tokens("short.", 75, &c), "short.");
        assert_eq!(truncate_to_tokens("Barry Levinson.", 1, &c), "Barry");
    }

    proptest! {
        #[test]
        fn context_respects_cap(
            public in proptest::collection::vec("[a-z <>/.\n]{0,200}", 0..5),
            web in proptest::collection::vec(("[a-z <doc>/!]{0,300}", 0.0f64..1.0), 0..8),
            cap in 0usize..300,
        ) {
            let chunks: Vec<ScoredChunk> = web.iter().map(|(t, s)| chunk(t, *s)).collect();
            let ctx = build_context(&public, &chunks, cap, &WordPieceCounter);
            prop_assert!(WordPieceCounter.count(&ctx) <= cap);
            let opened = ctx.matches("<doc>").count();
            prop_assert_eq!(opened, ctx.matches("</doc>").count());
            prop_assert!(opened <= public.len() + chunks.len());
        }
    }
}
