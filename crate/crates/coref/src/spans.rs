//! Span enumeration and ordering, head-finding attention, mention scoring,
//! and top-λT pruning.

use rand_chacha::ChaCha8Rng;

use crate::config::ModelConfig;
use crate::corpus::Document;
use crate::encoder::ffnn2;
use crate::error::Result;
use crate::math::{Graph, Var};
use crate::model::Bound;

/// A contiguous within-sentence token span; flattened inclusive indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub sentence: usize,
}

impl Span {
    pub fn width(&self) -> usize {
        self.end - self.start + 1
    }
}

/// Spans that survived pruning, as indices into the enumerated span list,
/// sorted by (start, end).
#[derive(Debug, Clone)]
pub struct PrunedSpanList {
    pub kept: Vec<usize>,
    pub original_count: usize,
}

/// All within-sentence spans of width <= `max_width`, sorted by start then
/// end position.
pub fn enumerate_spans(doc: &Document, max_width: usize) -> Vec<Span> {
    let offsets = doc.sentence_offsets();
    let mut spans = Vec::new();
    for (si, sentence) in doc.sentences.iter().enumerate() {
        let base = offsets[si];
        let len = sentence.len();
        for start in 0..len {
            for width in 1..=max_width.min(len - start) {
                spans.push(Span {
                    start: base + start,
                    end: base + start + width - 1,
                    sentence: si,
                });
            }
        }
    }
    spans.sort_by_key(|s| (s.start, s.end));
    spans
}

/// Closed-form count of enumerable spans: per sentence of length L,
/// sum over widths w = 1..min(L, max_width) of (L - w + 1).
pub fn span_count_formula(doc: &Document, max_width: usize) -> usize {
    doc.sentences
        .iter()
        .map(|s| {
            let l = s.len();
            (1..=max_width.min(l)).map(|w| l - w + 1).sum::<usize>()
        })
        .sum()
}

/// Head-finding attention over a span: softmax the per-token logits within
/// the span and take the weighted sum of the raw token representations.
pub fn head_attention(
    g: &mut Graph,
    span_logits: &[Var],
    span_token_reps: &[Var],
) -> Result<Var> {
    debug_assert_eq!(span_logits.len(), span_token_reps.len());
    let logits = g.concat(span_logits)?;
    let weights = g.softmax(logits)?;
    let rows = g.stack_rows(span_token_reps)?;
    g.vecmat(weights, rows)
}

/// Mention score m(i) = v_m . FFNN_m(s_i).
pub fn mention_score(
    g: &mut Graph,
    bound: &Bound,
    cfg: &ModelConfig,
    span_rep: Var,
    training: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Var> {
    let hid = ffnn2(g, bound, "mention", span_rep, cfg.hidden_dropout, training, rng)?;
    g.dot(bound.get("mention/v"), hid)
}

/// Keep the max(1, floor(λT)) highest-scoring spans; ties break toward the
/// earlier span in span order; survivors stay in (start, end) order.
pub fn prune(scores: &[f64], lambda: f64, num_tokens: usize) -> PrunedSpanList {
    let k = ((lambda * num_tokens as f64).floor() as usize).max(1).min(scores.len());
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut kept: Vec<usize> = order[..k].to_vec();
    kept.sort_unstable();
    PrunedSpanList {
        kept,
        original_count: scores.len(),
    }
}
