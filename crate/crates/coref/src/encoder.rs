//! Token representations (fixed pretrained + character CNN), bidirectional
//! LSTM sentence encoding, and feature bucketing.

use rand_chacha::ChaCha8Rng;

use crate::config::ModelConfig;
use crate::corpus::EmbeddingTable;
use crate::error::{Error, Result};
use crate::math::{Graph, Var};
use crate::model::Bound;

pub const NUM_DISTANCE_BUCKETS: usize = 9;

/// Map a positive distance into the buckets
/// [1],[2],[3],[4],[5-7],[8-15],[16-31],[32-63],[64+].
pub fn bucket_distance(d: usize) -> Result<usize> {
    if d < 1 {
        return Err(Error::Config(format!("distance must be >= 1, got {d}")));
    }
    Ok(match d {
        1 => 0,
        2 => 1,
        3 => 2,
        4 => 3,
        5..=7 => 4,
        8..=15 => 5,
        16..=31 => 6,
        32..=63 => 7,
        _ => 8,
    })
}

/// Width feature bucket; widths share the distance bucketing capped by the
/// maximum span width.
pub fn width_bucket(width: usize) -> usize {
    bucket_distance(width).expect("span width >= 1")
}

/// Character ids for a word: 0 is the pad character, 1 is unknown, known
/// characters start at 2 in `char_vocab` order.
pub fn char_ids(cfg: &ModelConfig, word: &str) -> Vec<usize> {
    word.chars()
        .map(|c| match cfg.char_vocab.chars().position(|v| v == c) {
            Some(i) => i + 2,
            None => 1,
        })
        .collect()
}

pub fn char_table_rows(cfg: &ModelConfig) -> usize {
    cfg.char_vocab.chars().count() + 2
}

/// Two-hidden-layer ReLU feed-forward block. Parameters are
/// `{prefix}/w1 b1 w2 b2`; hidden layers get the hidden dropout rate.
pub fn ffnn2(
    g: &mut Graph,
    bound: &Bound,
    prefix: &str,
    x: Var,
    hidden_dropout: f64,
    training: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Var> {
    let mut h = x;
    for layer in ["1", "2"] {
        let w = bound.get(&format!("{prefix}/w{layer}"));
        let b = bound.get(&format!("{prefix}/b{layer}"));
        let a = g.matvec(w, h)?;
        let a = g.add(a, b)?;
        let a = g.relu(a);
        h = g.dropout(a, hidden_dropout, training, rng)?;
    }
    Ok(h)
}

/// Character CNN over a word: learned character embeddings convolved per
/// window size, max-pooled over positions. Words shorter than a window are
/// right-padded with the pad character.
pub fn char_cnn_embed(
    g: &mut Graph,
    bound: &Bound,
    cfg: &ModelConfig,
    word: &str,
) -> Result<Var> {
    assert!(!word.is_empty(), "char_cnn_embed requires a non-empty word");
    let max_window = *cfg.char_windows.iter().max().unwrap();
    let mut ids = char_ids(cfg, word);
    while ids.len() < max_window {
        ids.push(0); // pad
    }
    let table = bound.get("char/table");
    let chars = g.rows(table, &ids); // [L, char_dim]
    let (len, d) = (ids.len(), cfg.char_dim);
    let mut pooled = Vec::with_capacity(cfg.char_windows.len());
    for &w in &cfg.char_windows {
        let positions = len - w + 1;
        // window matrix [positions, w*d] gathered from the char matrix
        let mut flat = Vec::with_capacity(positions * w * d);
        for p in 0..positions {
            for r in 0..w {
                for c in 0..d {
                    flat.push((p + r) * d + c);
                }
            }
        }
        let windows = g.gather(chars, flat, vec![positions, w * d]);
        let kernel = bound.get(&format!("char/conv{w}/kernel")); // [w*d, kernels]
        let scores = g.matmul(windows, kernel)?; // [positions, kernels]
        let maxed = g.max_axis0(scores); // [kernels]
        let bias = bound.get(&format!("char/conv{w}/bias"));
        let maxed = g.add(maxed, bias)?;
        pooled.push(g.relu(maxed));
    }
    g.concat(&pooled)
}

/// Per-token representation w_t: both fixed pretrained vectors plus the char
/// CNN output, with lexical dropout in training mode.
pub fn token_representation(
    g: &mut Graph,
    bound: &Bound,
    cfg: &ModelConfig,
    table_a: &EmbeddingTable,
    table_b: &EmbeddingTable,
    word: &str,
    training: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Var> {
    let a = g.constant(vec![cfg.word_dim_a], table_a.lookup(word));
    let b = g.constant(vec![cfg.word_dim_b], table_b.lookup(word));
    let c = char_cnn_embed(g, bound, cfg, word)?;
    let rep = g.concat(&[a, b, c])?;
    g.dropout(rep, cfg.lexical_dropout, training, rng)
}

/// One LSTM direction over a sentence: standard input/forget/output gates
/// with a tanh cell, zero initial states. Gate order in the stacked weight
/// matrices is [input, forget, output, cell].
pub fn lstm_direction(
    g: &mut Graph,
    w_x: Var,
    w_h: Var,
    b: Var,
    inputs: &[Var],
    hidden: usize,
    reverse: bool,
) -> Result<Vec<Var>> {
    let mut h = g.constant(vec![hidden], vec![0.0; hidden]);
    let mut c = g.constant(vec![hidden], vec![0.0; hidden]);
    let order: Vec<usize> = if reverse {
        (0..inputs.len()).rev().collect()
    } else {
        (0..inputs.len()).collect()
    };
    let mut states = vec![h; inputs.len()];
    for t in order {
        let from_x = g.matvec(w_x, inputs[t])?;
        let from_h = g.matvec(w_h, h)?;
        let gates = g.add(from_x, from_h)?;
        let gates = g.add(gates, b)?;
        let i_gate = g.slice1d(gates, 0, hidden);
        let f_gate = g.slice1d(gates, hidden, hidden);
        let o_gate = g.slice1d(gates, 2 * hidden, hidden);
        let g_cell = g.slice1d(gates, 3 * hidden, hidden);
        let i_gate = g.sigmoid(i_gate);
        let f_gate = g.sigmoid(f_gate);
        let o_gate = g.sigmoid(o_gate);
        let g_cell = g.tanh(g_cell);
        let fc = g.mul(f_gate, c)?;
        let ig = g.mul(i_gate, g_cell)?;
        c = g.add(fc, ig)?;
        let tc = g.tanh(c);
        h = g.mul(o_gate, tc)?;
        states[t] = h;
    }
    Ok(states)
}

/// Bidirectional encoding of one sentence; state resets at sentence
/// boundaries. Output h_t = [h_fwd, h_bwd] with hidden dropout applied.
pub fn encode_sentence(
    g: &mut Graph,
    bound: &Bound,
    cfg: &ModelConfig,
    token_reps: &[Var],
    training: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Var>> {
    let fwd = lstm_direction(
        g,
        bound.get("lstm/fwd/w_x"),
        bound.get("lstm/fwd/w_h"),
        bound.get("lstm/fwd/b"),
        token_reps,
        cfg.hidden,
        false,
    )?;
    let bwd = lstm_direction(
        g,
        bound.get("lstm/bwd/w_x"),
        bound.get("lstm/bwd/w_h"),
        bound.get("lstm/bwd/b"),
        token_reps,
        cfg.hidden,
        true,
    )?;
    fwd.into_iter()
        .zip(bwd)
        .map(|(f, b)| {
            let h = g.concat(&[f, b])?;
            g.dropout(h, cfg.hidden_dropout, training, rng)
        })
        .collect()
}

/// Head-finding attention logit for one token.
pub fn attention_logit(
    g: &mut Graph,
    bound: &Bound,
    cfg: &ModelConfig,
    h: Var,
    training: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Var> {
    let hid = ffnn2(g, bound, "att", h, cfg.hidden_dropout, training, rng)?;
    g.dot(bound.get("att/v"), hid)
}
