//! Paired bootstrap resampling significance test over per-document scores.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metrics::DocScores;

/// Resample documents with replacement and report the fraction of resamples
/// where system B's corpus-level CoNLL F1 is at least system A's. Ties count
/// toward B (the null), so equal systems never look significant. The two
/// lists must be aligned per document.
pub fn paired_bootstrap(
    scores_a: &[DocScores],
    scores_b: &[DocScores],
    n_resamples: usize,
    seed: u64,
) -> Result<f64> {
    if scores_a.is_empty() || scores_b.is_empty() {
        return Err(Error::EmptyInput("bootstrap requires per-document scores"));
    }
    if scores_a.len() != scores_b.len() {
        return Err(Error::Config(format!(
            "bootstrap lists must align: {} vs {} documents",
            scores_a.len(),
            scores_b.len()
        )));
    }
    let n_docs = scores_a.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b_wins_or_ties = 0usize;
    for _ in 0..n_resamples {
        let mut total_a = DocScores::default();
        let mut total_b = DocScores::default();
        for _ in 0..n_docs {
            let d = rng.gen_range(0..n_docs);
            total_a.add(&scores_a[d]);
            total_b.add(&scores_b[d]);
        }
        if total_b.conll_f1() >= total_a.conll_f1() {
            b_wins_or_ties += 1;
        }
    }
    Ok(b_wins_or_ties as f64 / n_resamples as f64)
}
