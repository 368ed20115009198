//! Coreference evaluation: MUC, B-cubed, CEAF-phi4, their CoNLL average,
//! the per-width mention-detection breakdown, and significance testing.

pub mod bootstrap;
pub mod hungarian;

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::hash::Hash;

use serde::Serialize;

use crate::corpus::Document;
use crate::error::Result;
use crate::model::{CorefModel, Pretrained};

/// Precision / recall / F1 triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            f1,
        }
    }
}

/// Numerators and denominators of one metric, summable across documents for
/// corpus-level (micro) scores.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct MetricCounts {
    pub p_num: f64,
    pub p_den: f64,
    pub r_num: f64,
    pub r_den: f64,
}

impl MetricCounts {
    pub fn add(&mut self, other: &MetricCounts) {
        self.p_num += other.p_num;
        self.p_den += other.p_den;
        self.r_num += other.r_num;
        self.r_den += other.r_den;
    }

    pub fn prf(&self) -> Prf {
        let p = if self.p_den > 0.0 { self.p_num / self.p_den } else { 0.0 };
        let r = if self.r_den > 0.0 { self.r_num / self.r_den } else { 0.0 };
        Prf::new(p, r)
    }
}

fn cluster_index<M: Eq + Hash + Clone>(clusters: &[Vec<M>]) -> HashMap<M, usize> {
    let mut map = HashMap::new();
    for (ci, cluster) in clusters.iter().enumerate() {
        for m in cluster {
            map.insert(m.clone(), ci);
        }
    }
    map
}

/// Link-based metric: each key cluster is split into the parts induced by
/// the response clustering (unaligned mentions are their own parts); recall
/// counts the links not broken by that split.
pub fn muc_counts<M: Eq + Hash + Clone>(gold: &[Vec<M>], sys: &[Vec<M>]) -> MetricCounts {
    fn side<M: Eq + Hash + Clone>(key: &[Vec<M>], response: &[Vec<M>]) -> (f64, f64) {
        let resp_of = cluster_index(response);
        let mut num = 0.0;
        let mut den = 0.0;
        for cluster in key {
            let mut parts: HashSet<Option<usize>> = HashSet::new();
            let mut singles = 0usize;
            for m in cluster {
                match resp_of.get(m) {
                    Some(&ci) => {
                        parts.insert(Some(ci));
                    }
                    None => singles += 1,
                }
            }
            let n_parts = parts.len() + singles;
            num += (cluster.len() - n_parts) as f64;
            den += (cluster.len() - 1) as f64;
        }
        (num, den)
    }
    let (r_num, r_den) = side(gold, sys);
    let (p_num, p_den) = side(sys, gold);
    MetricCounts {
        p_num,
        p_den,
        r_num,
        r_den,
    }
}

/// Mention-based metric: per-mention credit is the overlap of the mention's
/// two clusters relative to its own side's cluster size.
pub fn b_cubed_counts<M: Eq + Hash + Clone>(gold: &[Vec<M>], sys: &[Vec<M>]) -> MetricCounts {
    fn side<M: Eq + Hash + Clone>(own: &[Vec<M>], other: &[Vec<M>]) -> (f64, f64) {
        let other_of = cluster_index(other);
        let mut num = 0.0;
        let mut den = 0.0;
        for cluster in own {
            for m in cluster {
                let overlap = match other_of.get(m) {
                    Some(&ci) => cluster
                        .iter()
                        .filter(|x| other_of.get(*x) == Some(&ci))
                        .count(),
                    None => 0,
                };
                num += overlap as f64 / cluster.len() as f64;
                den += 1.0;
            }
        }
        (num, den)
    }
    let (r_num, r_den) = side(gold, sys);
    let (p_num, p_den) = side(sys, gold);
    MetricCounts {
        p_num,
        p_den,
        r_num,
        r_den,
    }
}

/// Entity-based metric: optimal one-to-one cluster alignment under the
/// similarity phi4(K, R) = 2|K ∩ R| / (|K| + |R|).
pub fn ceaf_phi4_counts<M: Eq + Hash + Clone>(gold: &[Vec<M>], sys: &[Vec<M>]) -> MetricCounts {
    let phi = |k: &Vec<M>, r: &Vec<M>| -> f64 {
        let r_set: HashSet<&M> = r.iter().collect();
        let inter = k.iter().filter(|m| r_set.contains(m)).count();
        2.0 * inter as f64 / (k.len() + r.len()) as f64
    };
    let matrix: Vec<Vec<f64>> = gold
        .iter()
        .map(|k| sys.iter().map(|r| phi(k, r)).collect())
        .collect();
    let (total, _) = hungarian::max_assignment(&matrix);
    MetricCounts {
        p_num: total,
        p_den: sys.len() as f64,
        r_num: total,
        r_den: gold.len() as f64,
    }
}

pub fn muc<M: Eq + Hash + Clone>(gold: &[Vec<M>], sys: &[Vec<M>]) -> Prf {
    muc_counts(gold, sys).prf()
}

pub fn b_cubed<M: Eq + Hash + Clone>(gold: &[Vec<M>], sys: &[Vec<M>]) -> Prf {
    b_cubed_counts(gold, sys).prf()
}

pub fn ceaf_phi4<M: Eq + Hash + Clone>(gold: &[Vec<M>], sys: &[Vec<M>]) -> Prf {
    ceaf_phi4_counts(gold, sys).prf()
}

/// All three metrics' counts for one document.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct DocScores {
    pub muc: MetricCounts,
    pub b_cubed: MetricCounts,
    pub ceaf: MetricCounts,
}

impl DocScores {
    pub fn add(&mut self, other: &DocScores) {
        self.muc.add(&other.muc);
        self.b_cubed.add(&other.b_cubed);
        self.ceaf.add(&other.ceaf);
    }

    /// CoNLL score of the aggregated counts.
    pub fn conll_f1(&self) -> f64 {
        conll_average(self.muc.prf().f1, self.b_cubed.prf().f1, self.ceaf.prf().f1)
    }
}

pub fn score_document<M: Eq + Hash + Clone>(gold: &[Vec<M>], sys: &[Vec<M>]) -> DocScores {
    DocScores {
        muc: muc_counts(gold, sys),
        b_cubed: b_cubed_counts(gold, sys),
        ceaf: ceaf_phi4_counts(gold, sys),
    }
}

/// Arithmetic mean of the three F1 scores (the CoNLL score).
pub fn conll_average(muc_f1: f64, b_cubed_f1: f64, ceaf_f1: f64) -> f64 {
    (muc_f1 + b_cubed_f1 + ceaf_f1) / 3.0
}

/// Corpus-level evaluation: per-document counts plus micro-aggregated
/// (summed numerators and denominators) precision/recall/F1.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub muc: Prf,
    pub b_cubed: Prf,
    pub ceaf: Prf,
    pub average_f1: f64,
    pub per_doc: Vec<DocScores>,
}

pub fn evaluate_corpus<M: Eq + Hash + Clone>(
    pairs: &[(&[Vec<M>], &[Vec<M>])],
) -> EvalReport {
    let per_doc: Vec<DocScores> = pairs
        .iter()
        .map(|(gold, sys)| score_document(gold, sys))
        .collect();
    report_from_doc_scores(per_doc)
}

pub fn report_from_doc_scores(per_doc: Vec<DocScores>) -> EvalReport {
    let mut total = DocScores::default();
    for d in &per_doc {
        total.add(d);
    }
    let muc = total.muc.prf();
    let b_cubed = total.b_cubed.prf();
    let ceaf = total.ceaf.prf();
    EvalReport {
        muc,
        b_cubed,
        ceaf,
        average_f1: conll_average(muc.f1, b_cubed.f1, ceaf.f1),
        per_doc,
    }
}

impl EvalReport {
    /// Aligned text table: one row per metric plus the CoNLL average.
    pub fn text_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<10} {:>7} {:>7} {:>7}", "Metric", "P", "R", "F1");
        for (name, prf) in [
            ("MUC", self.muc),
            ("B^3", self.b_cubed),
            ("CEAF_phi4", self.ceaf),
        ] {
            let _ = writeln!(
                out,
                "{:<10} {:>7.4} {:>7.4} {:>7.4}",
                name, prf.precision, prf.recall, prf.f1
            );
        }
        let _ = writeln!(out, "{:<10} {:>7} {:>7} {:>7.4}", "Avg. F1", "", "", self.average_f1);
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// One width bucket of the mention-detection breakdown.
#[derive(Debug, Clone, Serialize)]
pub struct WidthRow {
    pub width: usize,
    pub frequency: usize,
    pub detected: usize,
    pub accuracy: f64,
}

/// Per-width gold-mention detection accuracy plus detected spans
/// partitioned by whether their text occurred as a training gold mention.
#[derive(Debug, Clone, Serialize)]
pub struct DetectionReport {
    pub rows: Vec<WidthRow>,
    pub known_detected: Vec<String>,
    pub novel_detected: Vec<String>,
}

impl DetectionReport {
    pub fn csv(&self) -> String {
        let mut out = String::from("width,frequency,accuracy\n");
        for row in &self.rows {
            let _ = writeln!(out, "{},{},{}", row.width, row.frequency, row.accuracy);
        }
        out
    }

    pub fn accuracy_for_width(&self, width: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.width == width && r.frequency > 0)
            .map(|r| r.accuracy)
    }
}

/// A span counts as detected when its mention score is positive. Gold
/// mentions wider than the model's maximum span width cannot be detected
/// and are excluded from the table.
pub fn mention_detection_report(
    model: &CorefModel,
    docs: &[Document],
    pretrained: &Pretrained,
    training_mention_strings: &HashSet<String>,
) -> Result<DetectionReport> {
    use rand::SeedableRng;
    let max_width = model.config.max_width;
    let mut frequency = vec![0usize; max_width + 1];
    let mut detected = vec![0usize; max_width + 1];
    let mut known = Vec::new();
    let mut novel = Vec::new();
    for doc in docs {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let fwd = model.forward(doc, pretrained, false, &mut rng)?;
        let scores = fwd.mention_values();
        let mut positive: HashSet<(usize, usize)> = HashSet::new();
        for (i, span) in fwd.spans.iter().enumerate() {
            if scores[i] > 0.0 {
                positive.insert((span.start, span.end));
                let text = doc.span_text(span.start, span.end);
                if training_mention_strings.contains(&text) {
                    known.push(text);
                } else {
                    novel.push(text);
                }
            }
        }
        for cluster in &doc.clusters {
            for &(s, e) in cluster {
                let width = e - s + 1;
                if width <= max_width {
                    frequency[width] += 1;
                    if positive.contains(&(s, e)) {
                        detected[width] += 1;
                    }
                }
            }
        }
    }
    let rows = (1..=max_width)
        .map(|w| WidthRow {
            width: w,
            frequency: frequency[w],
            detected: detected[w],
            accuracy: if frequency[w] > 0 {
                detected[w] as f64 / frequency[w] as f64
            } else {
                0.0
            },
        })
        .collect();
    Ok(DetectionReport {
        rows,
        known_detected: known,
        novel_detected: novel,
    })
}

/// The set of gold mention strings of a training split, for the known/novel
/// partition of detected spans.
pub fn gold_mention_strings(docs: &[Document]) -> HashSet<String> {
    let mut set = HashSet::new();
    for doc in docs {
        for cluster in &doc.clusters {
            for &(s, e) in cluster {
                set.insert(doc.span_text(s, e));
            }
        }
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn worked_gold() -> Vec<Vec<char>> {
        vec![vec!['a', 'b', 'c'], vec!['d', 'e']]
    }

    fn worked_sys() -> Vec<Vec<char>> {
        vec![vec!['a', 'b'], vec!['c', 'd', 'e']]
    }

    #[test]
    fn identical_clusterings_score_one() {
        let g = worked_gold();
        for prf in [muc(&g, &g), b_cubed(&g, &g), ceaf_phi4(&g, &g)] {
            assert_eq!((prf.precision, prf.recall, prf.f1), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn worked_example_exact() {
        let g = worked_gold();
        let s = worked_sys();
        let m = muc(&g, &s);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.recall - 2.0 / 3.0).abs() < 1e-12);
        let b = b_cubed(&g, &s);
        assert!((b.precision - 11.0 / 15.0).abs() < 1e-12);
        assert!((b.recall - 11.0 / 15.0).abs() < 1e-12);
        let c = ceaf_phi4(&g, &s);
        assert!((c.precision - 0.8).abs() < 1e-12);
        assert!((c.recall - 0.8).abs() < 1e-12);
        assert!((c.f1 - 0.8).abs() < 1e-12);
    }

    #[test]
    fn empty_system_output() {
        let g = worked_gold();
        let s: Vec<Vec<char>> = vec![];
        let m = muc(&g, &s);
        assert_eq!(m.recall, 0.0);
        assert_eq!(m.precision, 0.0);
        assert_eq!(m.f1, 0.0);
        let b = b_cubed(&g, &s);
        assert_eq!(b.recall, 0.0);
        assert_eq!(b.precision, 0.0);
    }

    #[test]
    fn one_big_cluster_has_perfect_recall() {
        let g = worked_gold();
        let s = vec![vec!['a', 'b', 'c', 'd', 'e']];
        let b = b_cubed(&g, &s);
        assert_eq!(b.recall, 1.0);
        assert!(b.precision < 1.0);
    }

    #[test]
    fn conll_average_matches_published_arithmetic() {
        assert!((conll_average(0.765, 0.655, 0.614) - 0.678).abs() < 0.0005);
        assert!((conll_average(0.776, 0.671, 0.629) - 0.692).abs() < 0.0005);
        assert_eq!(conll_average(1.0, 1.0, 1.0), 1.0);
    }

    // --- independent oracles ---

    /// MUC via explicit co-membership graphs and connected components.
    fn muc_oracle(gold: &[Vec<char>], sys: &[Vec<char>]) -> Prf {
        fn side(key: &[Vec<char>], resp: &[Vec<char>]) -> (f64, f64) {
            let mut num = 0.0;
            let mut den = 0.0;
            for cluster in key {
                let n = cluster.len();
                // union-find over pairwise same-response-cluster edges
                let mut parent: Vec<usize> = (0..n).collect();
                fn find(p: &mut Vec<usize>, mut x: usize) -> usize {
                    while p[x] != x {
                        x = p[x];
                    }
                    x
                }
                for i in 0..n {
                    for j in i + 1..n {
                        let together = resp
                            .iter()
                            .any(|r| r.contains(&cluster[i]) && r.contains(&cluster[j]));
                        if together {
                            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                            if a != b {
                                parent[a] = b;
                            }
                        }
                    }
                }
                let components = (0..n)
                    .map(|i| find(&mut parent, i))
                    .collect::<HashSet<_>>()
                    .len();
                num += (n - components) as f64;
                den += (n - 1) as f64;
            }
            (num, den)
        }
        let (rn, rd) = side(gold, sys);
        let (pn, pd) = side(sys, gold);
        Prf::new(
            if pd > 0.0 { pn / pd } else { 0.0 },
            if rd > 0.0 { rn / rd } else { 0.0 },
        )
    }

    /// B-cubed by direct per-mention double loops, no hash maps.
    fn b_cubed_oracle(gold: &[Vec<char>], sys: &[Vec<char>]) -> Prf {
        fn side(own: &[Vec<char>], other: &[Vec<char>]) -> (f64, f64) {
            let mut num = 0.0;
            let mut den = 0.0;
            for cluster in own {
                for m in cluster {
                    let overlap = other
                        .iter()
                        .find(|o| o.contains(m))
                        .map(|o| cluster.iter().filter(|x| o.contains(x)).count())
                        .unwrap_or(0);
                    num += overlap as f64 / cluster.len() as f64;
                    den += 1.0;
                }
            }
            (num, den)
        }
        let (rn, rd) = side(gold, sys);
        let (pn, pd) = side(sys, gold);
        Prf::new(
            if pd > 0.0 { pn / pd } else { 0.0 },
            if rd > 0.0 { rn / rd } else { 0.0 },
        )
    }

    /// CEAF by exhaustive permutation over the larger side.
    fn ceaf_oracle(gold: &[Vec<char>], sys: &[Vec<char>]) -> Prf {
        let phi = |k: &Vec<char>, r: &Vec<char>| -> f64 {
            let inter = k.iter().filter(|m| r.contains(m)).count();
            2.0 * inter as f64 / (k.len() + r.len()) as f64
        };
        let (small, large, gold_is_small) = if gold.len() <= sys.len() {
            (gold, sys, true)
        } else {
            (sys, gold, false)
        };
        let mut best = 0.0f64;
        let mut idx: Vec<usize> = (0..large.len()).collect();
        permute(&mut idx, 0, &mut |perm| {
            let total: f64 = small
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    if gold_is_small {
                        phi(c, &large[perm[i]])
                    } else {
                        phi(&large[perm[i]], c)
                    }
                })
                .sum();
            if total > best {
                best = total;
            }
        });
        Prf::new(
            if sys.is_empty() { 0.0 } else { best / sys.len() as f64 },
            if gold.is_empty() { 0.0 } else { best / gold.len() as f64 },
        )
    }

    fn permute(items: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == items.len() {
            f(items);
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            permute(items, k + 1, f);
            items.swap(k, i);
        }
    }

    fn random_clustering(rng: &mut ChaCha8Rng, mentions: &[char]) -> Vec<Vec<char>> {
        let k = rng.gen_range(1..=6usize);
        let mut clusters: Vec<Vec<char>> = vec![Vec::new(); k];
        for &m in mentions {
            let c = rng.gen_range(0..k);
            clusters[c].push(m);
        }
        clusters.retain(|c| !c.is_empty());
        clusters
    }

    #[test]
    fn metrics_match_oracles_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let universe: Vec<char> = "abcdefgh".chars().collect();
        for _ in 0..1200 {
            let n = rng.gen_range(1..=8usize);
            let mentions = &universe[..n];
            let gold = random_clustering(&mut rng, mentions);
            // system sees a perturbed mention set to exercise twinless cases
            let sys_mentions: Vec<char> = mentions
                .iter()
                .filter(|_| rng.gen_bool(0.85))
                .copied()
                .collect();
            let sys = random_clustering(&mut rng, &sys_mentions);

            let close = |a: Prf, b: Prf| {
                (a.precision - b.precision).abs() < 1e-9
                    && (a.recall - b.recall).abs() < 1e-9
                    && (a.f1 - b.f1).abs() < 1e-9
            };
            assert!(close(muc(&gold, &sys), muc_oracle(&gold, &sys)));
            assert!(close(b_cubed(&gold, &sys), b_cubed_oracle(&gold, &sys)));
            assert!(close(ceaf_phi4(&gold, &sys), ceaf_oracle(&gold, &sys)));
        }
    }

    #[test]
    fn swapping_sides_swaps_precision_and_recall() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let universe: Vec<char> = "abcdefgh".chars().collect();
        for _ in 0..200 {
            let n = rng.gen_range(2..=8usize);
            let gold = random_clustering(&mut rng, &universe[..n]);
            let sys = random_clustering(&mut rng, &universe[..n]);
            for f in [
                muc::<char> as fn(&[Vec<char>], &[Vec<char>]) -> Prf,
                b_cubed::<char>,
                ceaf_phi4::<char>,
            ] {
                let ab = f(&gold, &sys);
                let ba = f(&sys, &gold);
                assert!((ab.precision - ba.recall).abs() < 1e-12);
                assert!((ab.recall - ba.precision).abs() < 1e-12);
                assert!((ab.f1 - ba.f1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn perfect_scores_only_for_identical_singleton_free_clusterings() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let universe: Vec<char> = "abcdefgh".chars().collect();
        let mut checked_nonidentical = 0;
        for _ in 0..500 {
            let n = rng.gen_range(4..=8usize);
            let mut gold = random_clustering(&mut rng, &universe[..n]);
            let mut sys = random_clustering(&mut rng, &universe[..n]);
            gold.retain(|c| c.len() >= 2);
            sys.retain(|c| c.len() >= 2);
            if gold.is_empty() || sys.is_empty() {
                continue;
            }
            let mut gs = gold.clone();
            let mut ss = sys.clone();
            for c in gs.iter_mut().chain(ss.iter_mut()) {
                c.sort_unstable();
            }
            gs.sort();
            ss.sort();
            let identical = gs == ss;
            let all_one = [muc(&gold, &sys), b_cubed(&gold, &sys), ceaf_phi4(&gold, &sys)]
                .iter()
                .all(|p| (p.f1 - 1.0).abs() < 1e-12);
            assert_eq!(identical, all_one);
            if !identical {
                checked_nonidentical += 1;
            }
        }
        assert!(checked_nonidentical > 50);
    }

    #[test]
    fn micro_aggregation_sums_counts() {
        let g1 = worked_gold();
        let s1 = worked_sys();
        let g2 = vec![vec!['x', 'y']];
        let s2 = vec![vec!['x', 'y']];
        let report = evaluate_corpus(&[(&g1[..], &s1[..]), (&g2[..], &s2[..])]);
        assert_eq!(report.per_doc.len(), 2);
        // MUC micro: doc1 contributes 2/3 (one link broken per the worked
        // example), doc2 contributes 1/1 -> (2 + 1) / (3 + 1)
        assert!((report.muc.recall - 3.0 / 4.0).abs() < 1e-12);
        let expect_avg =
            conll_average(report.muc.f1, report.b_cubed.f1, report.ceaf.f1);
        assert!((report.average_f1 - expect_avg).abs() < 1e-15);
    }

    #[test]
    fn report_outputs_render() {
        let g = worked_gold();
        let s = worked_sys();
        let report = evaluate_corpus(&[(&g[..], &s[..])]);
        let table = report.text_table();
        assert!(table.contains("MUC"));
        assert!(table.contains("CEAF_phi4"));
        assert!(table.contains("Avg. F1"));
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert!(json["average_f1"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn detection_report_invariants() {
        use crate::config::ModelConfig;
        use crate::corpus::synthetic::generate_synthetic_corpus;
        let split = generate_synthetic_corpus(5, 3, 100, 4);
        let mut cfg = ModelConfig::tiny();
        cfg.fit_vocab(&split);
        let model = CorefModel::new(cfg.clone(), 1);
        let pre = Pretrained::zeros(&cfg);
        let strings = gold_mention_strings(&split.docs);
        let report =
            mention_detection_report(&model, &split.docs, &pre, &strings).unwrap();
        let total: usize = report.rows.iter().map(|r| r.frequency).sum();
        let gold_total: usize = split
            .docs
            .iter()
            .flat_map(|d| &d.clusters)
            .map(|c| c.len())
            .sum();
        assert_eq!(total, gold_total);
        for row in &report.rows {
            assert!((0.0..=1.0).contains(&row.accuracy));
            assert!(row.detected <= row.frequency);
        }
        let csv = report.csv();
        assert!(csv.starts_with("width,frequency,accuracy\n"));
        assert_eq!(csv.lines().count(), cfg.max_width + 1);
    }
}
