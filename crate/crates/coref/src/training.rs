//! Gold-supervision construction, the detection and clustering loss terms,
//! their combination, and the training loop.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::TrainConfig;
use crate::corpus::{CorpusSplit, Document};
use crate::error::{Error, Result};
use crate::math::{AdamState, Var};
use crate::model::{CorefModel, DocForward, Pretrained};
use crate::spans::Span;

/// Gold antecedent sets per pruned span: positions into that span's
/// candidate list. An empty set stands for {epsilon}.
pub type GoldSets = Vec<Vec<usize>>;

/// For each surviving span, the candidate positions that are true
/// antecedents: surviving candidates in the same gold cluster. Spans that
/// are not gold mentions, or whose cluster-mates did not survive among the
/// candidates, get the dummy antecedent (empty set).
pub fn build_gold_sets(fwd: &DocForward, doc: &Document) -> GoldSets {
    let mut cluster_of: HashMap<(usize, usize), usize> = HashMap::new();
    for (ci, cluster) in doc.clusters.iter().enumerate() {
        for &(s, e) in cluster {
            cluster_of.insert((s, e), ci);
        }
    }
    let span_key = |s: Span| (s.start, s.end);
    let pruned_spans: Vec<Span> = (0..fwd.pruned.kept.len())
        .map(|i| fwd.pruned_span(i))
        .collect();
    let mut gold = Vec::with_capacity(pruned_spans.len());
    for (i, ante) in fwd.antecedents.iter().enumerate() {
        let mut mates = Vec::new();
        if let Some(&ci) = cluster_of.get(&span_key(pruned_spans[i])) {
            for (pos, &j) in ante.candidates.iter().enumerate() {
                if cluster_of.get(&span_key(pruned_spans[j])) == Some(&ci) {
                    mates.push(pos);
                }
            }
        }
        gold.push(mates);
    }
    gold
}

/// Per-span binary mention labels over all enumerated spans: 1 iff the span
/// exactly matches a gold mention.
pub fn mention_labels(spans: &[Span], doc: &Document) -> Vec<f64> {
    let mut gold: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();
    for cluster in &doc.clusters {
        for &(s, e) in cluster {
            gold.insert((s, e));
        }
    }
    spans
        .iter()
        .map(|s| f64::from(gold.contains(&(s.start, s.end))))
        .collect()
}

/// Marginal log-likelihood of the gold antecedents, summed over surviving
/// spans (log-sum-exp stabilized, each term <= 0).
pub fn cluster_loss(fwd: &mut DocForward, gold: &GoldSets) -> Result<Var> {
    let mut terms = Vec::with_capacity(gold.len());
    for (i, gold_i) in gold.iter().enumerate() {
        let n_cands = fwd.antecedents[i].candidates.len();
        if gold_i.iter().any(|&p| p >= n_cands) {
            return Err(Error::GoldOutsideCandidates);
        }
        let g = &mut fwd.graph;
        let eps = g.scalar(0.0);
        let mut all = vec![eps];
        all.extend(&fwd.antecedents[i].final_vars);
        let all = g.concat(&all)?;
        let denom = g.logsumexp(all);
        let numer = if gold_i.is_empty() {
            g.scalar(0.0) // log exp s(i, eps) = 0
        } else {
            let vars: Vec<Var> = gold_i
                .iter()
                .map(|&p| fwd.antecedents[i].final_vars[p])
                .collect();
            let stacked = g.concat(&vars)?;
            g.logsumexp(stacked)
        };
        let neg_denom = g.scale(denom, -1.0);
        terms.push(g.add(numer, neg_denom)?);
    }
    if terms.is_empty() {
        return Ok(fwd.graph.scalar(0.0));
    }
    fwd.graph.add_n(&terms)
}

/// Mention detection log-likelihood summed over all enumerated spans
/// (each term <= 0).
pub fn detect_loss(fwd: &mut DocForward, labels: &[f64]) -> Result<Var> {
    let mut terms = Vec::with_capacity(labels.len());
    for (i, &y) in labels.iter().enumerate() {
        let m = fwd.mention_vars[i];
        terms.push(fwd.graph.sigmoid_bce(m, y));
    }
    fwd.graph.add_n(&terms)
}

#[derive(Debug, Clone, Copy)]
pub struct LossBreakdown {
    /// Sum of detection log-likelihood terms (<= 0).
    pub detect: f64,
    /// Sum of clustering log-likelihood terms (<= 0).
    pub cluster: f64,
    /// Combined training objective (>= 0, minimized).
    pub total: f64,
}

/// Combined objective: -lambda_detect * sum(detect) - sum(cluster).
pub fn combined_loss(
    fwd: &mut DocForward,
    doc: &Document,
    lambda_detection: f64,
) -> Result<(Var, LossBreakdown)> {
    let gold = build_gold_sets(fwd, doc);
    let labels = mention_labels(&fwd.spans, doc);
    let cluster = cluster_loss(fwd, &gold)?;
    let detect = detect_loss(fwd, &labels)?;
    let g = &mut fwd.graph;
    let detect_term = g.scale(detect, -lambda_detection);
    let cluster_term = g.scale(cluster, -1.0);
    let total = g.add(detect_term, cluster_term)?;
    let breakdown = LossBreakdown {
        detect: g.scalar_value(detect),
        cluster: g.scalar_value(cluster),
        total: g.scalar_value(total),
    };
    Ok((total, breakdown))
}

/// Scalar training loss of one document under a fixed dropout seed.
pub fn loss_value(
    model: &CorefModel,
    doc: &Document,
    pretrained: &Pretrained,
    lambda_detection: f64,
    dropout_seed: u64,
    training: bool,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
    let mut fwd = model.forward(doc, pretrained, training, &mut rng)?;
    let (_, breakdown) = combined_loss(&mut fwd, doc, lambda_detection)?;
    Ok(breakdown.total)
}

#[derive(Debug, Clone, Copy)]
pub struct TrainLogEntry {
    pub step: usize,
    pub detect_sum: f64,
    pub cluster_sum: f64,
    pub total: f64,
}

/// Train on a corpus: documents shuffled per epoch, one Adam update per
/// document. The observer runs after every accepted step and returns
/// whether training should continue, allowing early stops. On a non-finite
/// loss the model keeps its last good parameters and an error is returned.
pub fn train(
    model: &mut CorefModel,
    split: &CorpusSplit,
    pretrained: &Pretrained,
    cfg: &TrainConfig,
    mut observer: impl FnMut(&TrainLogEntry, &CorefModel) -> bool,
) -> Result<Vec<TrainLogEntry>> {
    if split.docs.is_empty() {
        return Err(Error::EmptyInput("training corpus"));
    }
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::new(&model.params, cfg.adam);
    let mut log = Vec::with_capacity(cfg.max_steps);
    let mut order: Vec<usize> = (0..split.docs.len()).collect();
    let mut pos = order.len(); // force an initial shuffle
    for step in 0..cfg.max_steps {
        if pos >= order.len() {
            order.shuffle(&mut shuffle_rng);
            pos = 0;
        }
        let doc = &split.docs[order[pos]];
        pos += 1;

        let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (step as u64).wrapping_mul(0x9e3779b97f4a7c15));
        let mut fwd = model.forward(doc, pretrained, true, &mut dropout_rng)?;
        let (loss, breakdown) = combined_loss(&mut fwd, doc, cfg.lambda_detection)?;
        if !breakdown.total.is_finite() {
            return Err(Error::NonFiniteLoss(step));
        }
        let grads = fwd.graph.backward(loss)?;
        let mut per_param = model.collect_gradients(&fwd.bound, &grads);
        if let Some(clip) = cfg.grad_clip {
            clip_global_norm(&mut per_param, clip);
        }
        adam.step(&mut model.params, &per_param)?;

        let entry = TrainLogEntry {
            step,
            detect_sum: breakdown.detect,
            cluster_sum: breakdown.cluster,
            total: breakdown.total,
        };
        let keep_going = observer(&entry, model);
        log.push(entry);
        if !keep_going {
            break;
        }
    }
    Ok(log)
}

fn clip_global_norm(grads: &mut [Option<Vec<f64>>], max_norm: f64) {
    let norm: f64 = grads
        .iter()
        .flatten()
        .flat_map(|g| g.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for g in grads.iter_mut().flatten() {
            for v in g.iter_mut() {
                *v *= scale;
            }
        }
    }
}

/// Maximum relative error between analytic and numeric gradients. Entries
/// where both are tiny count as exact.
pub fn compare_gradients(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| {
            if a.abs() < 1e-7 && n.abs() < 1e-7 {
                0.0
            } else {
                (a - n).abs() / a.abs().max(n.abs()).max(1e-5)
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Debug)]
pub struct GradCheckReport {
    /// (parameter name, max relative error) for every parameter group.
    pub groups: Vec<(String, f64)>,
}

impl GradCheckReport {
    pub fn max_error(&self) -> f64 {
        self.groups.iter().map(|(_, e)| *e).fold(0.0, f64::max)
    }

    pub fn passed(&self, tolerance: f64) -> bool {
        self.max_error() < tolerance
    }
}

/// Compare every parameter's backward gradient of the combined loss against
/// central finite differences on one document.
pub fn gradient_check(
    model: &mut CorefModel,
    doc: &Document,
    pretrained: &Pretrained,
    lambda_detection: f64,
    fd_step: f64,
    dropout_seed: u64,
) -> Result<GradCheckReport> {
    // analytic gradients
    let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
    let mut fwd = model.forward(doc, pretrained, true, &mut rng)?;
    let (loss, _) = combined_loss(&mut fwd, doc, lambda_detection)?;
    let grads = fwd.graph.backward(loss)?;
    let analytic: Vec<(String, Vec<f64>)> = model
        .params
        .names()
        .map(|name| {
            let g = grads
                .wrt(fwd.bound.get(name))
                .map(|g| g.to_vec())
                .unwrap_or_else(|| vec![0.0; model.params.get(name).len()]);
            (name.to_string(), g)
        })
        .collect();
    drop(fwd);

    // central finite differences, every element of every parameter
    let mut groups = Vec::with_capacity(analytic.len());
    for (name, analytic_g) in analytic {
        let n = model.params.get(&name).len();
        let mut numeric = vec![0.0; n];
        for j in 0..n {
            let orig = model.params.get(&name).values[j];
            model.params.get_mut(&name).values[j] = orig + fd_step;
            let up = loss_value(model, doc, pretrained, lambda_detection, dropout_seed, true)?;
            model.params.get_mut(&name).values[j] = orig - fd_step;
            let down = loss_value(model, doc, pretrained, lambda_detection, dropout_seed, true)?;
            model.params.get_mut(&name).values[j] = orig;
            numeric[j] = (up - down) / (2.0 * fd_step);
        }
        groups.push((name, compare_gradients(&analytic_g, &numeric)));
    }
    Ok(GradCheckReport { groups })
}
