//! Candidate antecedent generation and pairwise coreference scoring: the
//! bilinear antecedent score c(i,j), optional pairwise feature term, and the
//! final score s(i,j) with the dummy antecedent fixed at 0.

use rand_chacha::ChaCha8Rng;

use crate::config::ModelConfig;
use crate::encoder::{bucket_distance, ffnn2};
use crate::error::Result;
use crate::math::{Graph, Var};
use crate::model::Bound;

/// Candidate antecedents for the pruned span at position `i` (pruned order):
/// the nearest `max_antecedents` preceding surviving spans, in span order.
/// The dummy antecedent is implicit and always present.
pub fn candidates(i: usize, max_antecedents: usize) -> Vec<usize> {
    (i.saturating_sub(max_antecedents)..i).collect()
}

/// Reduced span representation for the current-mention role.
pub fn anaphora_projection(
    g: &mut Graph,
    bound: &Bound,
    cfg: &ModelConfig,
    span_rep: Var,
    training: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Var> {
    ffnn2(g, bound, "anaphora", span_rep, cfg.hidden_dropout, training, rng)
}

/// Reduced span representation for the antecedent role.
pub fn antecedent_projection(
    g: &mut Graph,
    bound: &Bound,
    cfg: &ModelConfig,
    span_rep: Var,
    training: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Var> {
    ffnn2(g, bound, "antecedent", span_rep, cfg.hidden_dropout, training, rng)
}

/// Bilinear part of c(i,j): s_hat_j . (U s_hat_i). `u_shat_i` is U·s_hat_i,
/// computed once per current span; `prior_i` is v . s_hat_i, also
/// j-independent.
pub fn biaffine_score(
    g: &mut Graph,
    shat_j: Var,
    u_shat_i: Var,
    prior_i: Var,
) -> Result<Var> {
    let compat = g.dot(shat_j, u_shat_i)?;
    g.add(compat, prior_i)
}

/// Ablation scorer: c(i,j) = v . FFNN([s_hat_i, s_hat_j]).
pub fn no_biaffine_score(
    g: &mut Graph,
    bound: &Bound,
    cfg: &ModelConfig,
    shat_i: Var,
    shat_j: Var,
    training: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Var> {
    let pair = g.concat(&[shat_i, shat_j])?;
    let hid = ffnn2(g, bound, "pairffnn", pair, cfg.hidden_dropout, training, rng)?;
    g.dot(bound.get("pairffnn/v"), hid)
}

/// Linear score over the concatenated (distance bucket, same-speaker, genre)
/// feature embeddings. `rank_distance` counts intervening candidate spans
/// plus one, in span order.
pub fn pair_feature_score(
    g: &mut Graph,
    bound: &Bound,
    cfg: &ModelConfig,
    rank_distance: usize,
    same_speaker: bool,
    genre_idx: usize,
    training: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Var> {
    let dist = g.row(bound.get("feat/distance"), bucket_distance(rank_distance)?);
    let speaker = g.row(bound.get("feat/speaker"), usize::from(same_speaker));
    let genre = g.row(bound.get("feat/genre"), genre_idx);
    let feats = g.concat(&[dist, speaker, genre])?;
    let feats = g.dropout(feats, cfg.hidden_dropout, training, rng)?;
    g.dot(bound.get("pair/w"), feats)
}

/// Final coreference score s(i,j) = m(i) + m(j) + c(i,j) for a real
/// antecedent. The dummy score s(i, epsilon) is fixed to exactly 0 and never
/// goes through parameters.
pub fn final_score(g: &mut Graph, m_i: Var, m_j: Var, c_ij: Var) -> Result<Var> {
    g.add_n(&[m_i, m_j, c_ij])
}
