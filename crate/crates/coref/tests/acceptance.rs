//! End-to-end acceptance checks. Each criterion prints a single PASS/FAIL
//! line (visible with `cargo test --test acceptance -- --nocapture`).

use std::collections::HashSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coref::cli::gradcheck_fixture;
use coref::config::{ModelConfig, TrainConfig};
use coref::corpus::synthetic::generate_synthetic_corpus;
use coref::corpus::CorpusSplit;
use coref::decoder::{form_clusters, predict_document, predict_links};
use coref::metrics::bootstrap::paired_bootstrap;
use coref::metrics::{
    b_cubed, ceaf_phi4, conll_average, gold_mention_strings, mention_detection_report, muc,
    report_from_doc_scores, score_document, DocScores, DetectionReport, MetricCounts, Prf,
};
use coref::model::{CorefModel, Pretrained};
use coref::spans::{enumerate_spans, prune, span_count_formula};
use coref::training::{gradient_check, train};

fn check(criterion: &str, ok: bool) {
    println!("{}: {criterion}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{criterion}");
}

#[test]
fn conll_average_arithmetic() {
    let single = conll_average(0.765, 0.655, 0.614);
    let ensemble = conll_average(0.776, 0.671, 0.629);
    check(
        "CoNLL average F1 arithmetic on published score triples (+-0.0005)",
        (single - 0.678).abs() <= 0.0005 && (ensemble - 0.692).abs() <= 0.0005,
    );
}

#[test]
fn gradient_check_full_model() {
    let start = Instant::now();
    let (cfg, doc) = gradcheck_fixture();
    let mut model = CorefModel::new(cfg.clone(), 1);
    let pretrained = Pretrained::zeros(&cfg);
    let report = gradient_check(&mut model, &doc, &pretrained, 0.1, 1e-5, 1).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let all_groups = report.groups.len() == model.params.len();
    check(
        &format!(
            "every parameter's gradient matches central finite differences \
             (max rel err {:.2e}, {} groups, {:.0}s)",
            report.max_error(),
            report.groups.len(),
            elapsed
        ),
        report.passed(1e-4) && all_groups && elapsed < 300.0,
    );
}

// --- independent metric oracles, frozen for the equivalence check ---

fn muc_oracle(gold: &[Vec<char>], sys: &[Vec<char>]) -> Prf {
    fn side(key: &[Vec<char>], resp: &[Vec<char>]) -> (f64, f64) {
        let (mut num, mut den) = (0.0, 0.0);
        for cluster in key {
            let n = cluster.len();
            let mut parent: Vec<usize> = (0..n).collect();
            fn find(p: &mut Vec<usize>, mut x: usize) -> usize {
                while p[x] != x {
                    x = p[x];
                }
                x
            }
            for i in 0..n {
                for j in i + 1..n {
                    if resp
                        .iter()
                        .any(|r| r.contains(&cluster[i]) && r.contains(&cluster[j]))
                    {
                        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                        if a != b {
                            parent[a] = b;
                        }
                    }
                }
            }
            let parts = (0..n)
                .map(|i| find(&mut parent, i))
                .collect::<HashSet<_>>()
                .len();
            num += (n - parts) as f64;
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

fn b_cubed_oracle(gold: &[Vec<char>], sys: &[Vec<char>]) -> Prf {
    fn side(own: &[Vec<char>], other: &[Vec<char>]) -> (f64, f64) {
        let (mut num, mut den) = (0.0, 0.0);
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
fn metric_oracle_equivalence() {
    // worked example must be exact
    let gold = vec![vec!['a', 'b', 'c'], vec!['d', 'e']];
    let sys = vec![vec!['a', 'b'], vec!['c', 'd', 'e']];
    let exact = (muc(&gold, &sys).f1 - 2.0 / 3.0).abs() < 1e-12
        && (b_cubed(&gold, &sys).f1 - 11.0 / 15.0).abs() < 1e-12
        && (ceaf_phi4(&gold, &sys).f1 - 0.8).abs() < 1e-12;

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let universe: Vec<char> = "abcdefgh".chars().collect();
    let mut agree = true;
    let mut pairs = 0;
    while pairs < 1000 {
        let n = rng.gen_range(1..=8usize);
        let g = random_clustering(&mut rng, &universe[..n]);
        let sys_mentions: Vec<char> = universe[..n]
            .iter()
            .filter(|_| rng.gen_bool(0.85))
            .copied()
            .collect();
        let s = random_clustering(&mut rng, &sys_mentions);
        pairs += 1;
        let close = |a: Prf, b: Prf| {
            (a.precision - b.precision).abs() < 1e-9
                && (a.recall - b.recall).abs() < 1e-9
                && (a.f1 - b.f1).abs() < 1e-9
        };
        agree &= close(muc(&g, &s), muc_oracle(&g, &s));
        agree &= close(b_cubed(&g, &s), b_cubed_oracle(&g, &s));
        agree &= close(ceaf_phi4(&g, &s), ceaf_oracle(&g, &s));
    }
    check(
        "MUC/B-cubed/CEAF agree with brute-force oracles on 1000 random pairs \
         and the worked two-cluster example is exact",
        exact && agree,
    );
}

fn train_f1(split: &CorpusSplit, model: &CorefModel, pretrained: &Pretrained) -> f64 {
    let per_doc: Vec<DocScores> = split
        .docs
        .iter()
        .map(|doc| {
            let predicted = predict_document(model, doc, pretrained).unwrap();
            score_document(&doc.clusters, &predicted)
        })
        .collect();
    report_from_doc_scores(per_doc).average_f1
}

/// Train on the 20-document synthetic corpus, stopping early once the
/// training-set CoNLL F1 reaches `target` and `extra_stop` agrees. Returns
/// (best F1, step where the target was first met, seconds, model).
fn overfit_run(
    split: &CorpusSplit,
    cfg: &ModelConfig,
    lambda_detection: f64,
    target: f64,
    extra_stop: impl Fn(&CorefModel) -> bool,
) -> (f64, usize, f64, CorefModel) {
    let mut model = CorefModel::new(cfg.clone(), 1);
    let pretrained = Pretrained::zeros(cfg);
    let tcfg = TrainConfig {
        lambda_detection,
        max_steps: 2000,
        seed: 1,
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let mut best = 0.0f64;
    let mut target_step = usize::MAX;
    train(&mut model, split, &pretrained, &tcfg, |entry, current| {
        let steps = entry.step + 1;
        if steps % 100 == 0 || steps == 2000 {
            let f1 = train_f1(split, current, &pretrained);
            if f1 > best {
                best = f1;
            }
            if f1 >= target && target_step == usize::MAX {
                target_step = steps;
            }
            if f1 >= target && extra_stop(current) {
                return false;
            }
        }
        true
    })
    .unwrap();
    if best < target {
        let f1 = train_f1(split, &model, &pretrained);
        if f1 > best {
            best = f1;
        }
    }
    (best, target_step, start.elapsed().as_secs_f64(), model)
}

fn populated_accuracies(report: &DetectionReport) -> Vec<(usize, f64)> {
    report
        .rows
        .iter()
        .filter(|r| r.frequency > 0)
        .map(|r| (r.width, r.accuracy))
        .collect()
}

#[test]
fn overfit_and_detection_breakdown() {
    let split = generate_synthetic_corpus(7, 20, 100, 4);
    assert!(split.docs.len() == 20);
    let mut cfg = ModelConfig::default();
    cfg.fit_vocab(&split);
    let pretrained = Pretrained::zeros(&cfg);

    let strings_for_stop = gold_mention_strings(&split.docs);
    let detection_perfect = |m: &CorefModel| {
        mention_detection_report(m, &split.docs, &Pretrained::zeros(&cfg), &strings_for_stop)
            .map(|r| {
                let acc = populated_accuracies(&r);
                !acc.is_empty() && acc.iter().all(|&(_, a)| a == 1.0)
            })
            .unwrap_or(false)
    };
    let (f1_on, steps_on, secs_on, model_on) =
        overfit_run(&split, &cfg, 0.1, 0.95, detection_perfect);
    check(
        &format!(
            "training with default settings reaches train CoNLL F1 >= 0.95 \
             within 2000 steps and 10 minutes (F1 {f1_on:.3} at step {steps_on}, {secs_on:.0}s)"
        ),
        f1_on >= 0.95 && steps_on <= 2000 && secs_on < 600.0,
    );

    let (f1_off, steps_off, secs_off, model_off) = overfit_run(&split, &cfg, 0.0, 0.90, |_| true);
    check(
        &format!(
            "the same run without the detection loss reaches train CoNLL F1 >= 0.90 \
             (F1 {f1_off:.3} at step {steps_off}, {secs_off:.0}s)"
        ),
        f1_off >= 0.90 && steps_off <= 2000 && secs_off < 600.0,
    );

    let strings = gold_mention_strings(&split.docs);
    let report_on = mention_detection_report(&model_on, &split.docs, &pretrained, &strings).unwrap();
    let on_acc = populated_accuracies(&report_on);
    check(
        &format!(
            "after overfitting, detection accuracy is 1.0 at every populated width \
             ({on_acc:?})"
        ),
        !on_acc.is_empty() && on_acc.iter().all(|&(_, a)| a == 1.0),
    );

    let report_off =
        mention_detection_report(&model_off, &split.docs, &pretrained, &strings).unwrap();
    let dominated = report_off.rows.iter().zip(&report_on.rows).all(|(off, on)| {
        assert_eq!(off.width, on.width);
        off.accuracy <= on.accuracy
    });
    check(
        "per-width detection accuracy without the detection loss never exceeds \
         the accuracy with it",
        dominated,
    );
}

#[test]
fn structural_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);

    // enumerated span counts match the closed-form formula on 100 random docs
    let mut counts_match = true;
    for i in 0..100u64 {
        let split = generate_synthetic_corpus(1000 + i, 1, 100, 6);
        let doc = &split.docs[0];
        let max_width = rng.gen_range(1..=10);
        counts_match &=
            enumerate_spans(doc, max_width).len() == span_count_formula(doc, max_width);
    }
    check(
        "enumerated span counts match the combinatorial formula on 100 random documents",
        counts_match,
    );

    // pruning keeps exactly max(1, floor(0.4 T)) on 100 random score vectors
    let mut prune_exact = true;
    for _ in 0..100 {
        let t = rng.gen_range(1..200usize);
        let n = rng.gen_range(t..4 * t + 1);
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let expect = ((0.4 * t as f64).floor() as usize).max(1);
        prune_exact &= prune(&scores, 0.4, t).kept.len() == expect;
    }
    check(
        "pruning keeps exactly max(1, floor(0.4 T)) spans",
        prune_exact,
    );

    // the dummy's score is fixed at zero: links form only above 0, and the
    // model end-to-end respects it on real forwards
    let split = generate_synthetic_corpus(55, 5, 100, 4);
    let mut cfg = ModelConfig::tiny();
    cfg.fit_vocab(&split);
    let model = CorefModel::new(cfg.clone(), 4);
    let pretrained = Pretrained::zeros(&cfg);
    let mut dummy_rule = true;
    let mut prune_forward_exact = true;
    let mut no_singletons = true;
    for doc in &split.docs {
        let mut frng = ChaCha8Rng::seed_from_u64(0);
        let fwd = model.forward(doc, &pretrained, false, &mut frng).unwrap();
        let expect =
            ((0.4 * doc.num_tokens() as f64).floor() as usize).max(1).min(fwd.spans.len());
        prune_forward_exact &= fwd.pruned.kept.len() == expect;
        let links = predict_links(&fwd);
        for (i, link) in links.iter().enumerate() {
            let best = fwd
                .final_values(i)
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            match link {
                Some(_) => dummy_rule &= best > 0.0,
                None => dummy_rule &= fwd.antecedents[i].candidates.is_empty() || best <= 0.0,
            }
        }
        for cluster in form_clusters(&fwd, &links) {
            no_singletons &= cluster.len() >= 2;
        }
    }
    check(
        "antecedent links form only when a candidate outscores the dummy's fixed 0",
        dummy_rule,
    );
    check(
        "forward passes keep exactly max(1, floor(0.4 T)) spans",
        prune_forward_exact,
    );
    check("the decoder emits no singleton clusters", no_singletons);

    // a zero-parameter model scores everything 0 and predicts no clusters
    let mut zero_model = CorefModel::new(cfg.clone(), 4);
    for (_, p) in zero_model.params.iter_mut() {
        p.values.iter_mut().for_each(|v| *v = 0.0);
    }
    let mut all_empty = true;
    for doc in &split.docs {
        all_empty &= predict_document(&zero_model, doc, &pretrained)
            .unwrap()
            .is_empty();
    }
    check(
        "a zero-initialized model predicts the empty clustering",
        all_empty,
    );
}

#[test]
fn bootstrap_significance() {
    fn doc(p_num: f64, r_num: f64) -> DocScores {
        let c = MetricCounts {
            p_num,
            p_den: 5.0,
            r_num,
            r_den: 5.0,
        };
        DocScores {
            muc: c,
            b_cubed: c,
            ceaf: c,
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(31);

    // self-comparison across several random score sets never looks significant
    let mut self_ok = true;
    for _ in 0..5 {
        let scores: Vec<DocScores> = (0..50)
            .map(|_| doc(rng.gen_range(1.0..5.0), rng.gen_range(1.0..5.0)))
            .collect();
        let p = paired_bootstrap(&scores, &scores, 10_000, rng.gen()).unwrap();
        self_ok &= p >= 0.05;
    }
    check(
        "comparing a system against itself never reports p < 0.05",
        self_ok,
    );

    let better: Vec<DocScores> = (0..50).map(|_| doc(4.5, 4.5)).collect();
    let worse: Vec<DocScores> = (0..50).map(|_| doc(1.5, 1.5)).collect();
    let p_dom = paired_bootstrap(&better, &worse, 10_000, 3).unwrap();
    check(
        "a strictly dominated comparison system gets p = 0",
        p_dom == 0.0,
    );

    let a: Vec<DocScores> = (0..50)
        .map(|_| doc(rng.gen_range(1.0..5.0), rng.gen_range(1.0..5.0)))
        .collect();
    let b: Vec<DocScores> = a
        .iter()
        .map(|d| {
            let mut d = *d;
            d.muc.p_num = (d.muc.p_num + rng.gen_range(-0.6..0.8)).clamp(0.0, 5.0);
            d.b_cubed.r_num = (d.b_cubed.r_num + rng.gen_range(-0.6..0.8)).clamp(0.0, 5.0);
            d
        })
        .collect();
    let p1 = paired_bootstrap(&a, &b, 10_000, 100).unwrap();
    let p2 = paired_bootstrap(&a, &b, 10_000, 200).unwrap();
    check(
        &format!("p-values are stable within +-0.01 across seeds at 10,000 resamples ({p1:.4} vs {p2:.4})"),
        (p1 - p2).abs() <= 0.01,
    );
}
