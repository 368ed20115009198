//! Command-line front end: train / predict / score / gradcheck / report.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ModelConfig, RunConfig};
use crate::corpus::{load_documents, load_embeddings, write_documents, CorpusSplit, Document};
use crate::decoder::predict_document;
use crate::error::{Error, Result};
use crate::metrics::{
    self, bootstrap::paired_bootstrap, gold_mention_strings, mention_detection_report, DocScores,
};
use crate::model::{CorefModel, Pretrained};
use crate::training::{gradient_check, train, TrainLogEntry};

#[derive(Parser)]
#[command(name = "coref", about = "Neural coreference resolver and evaluation toolkit")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write a checkpoint plus a CSV loss log.
    Train(TrainArgs),
    /// Run inference and write documents with predicted_clusters.
    Predict(PredictArgs),
    /// Score system output against gold and print the metric table.
    Score(ScoreArgs),
    /// Verify backward gradients against finite differences.
    Gradcheck(GradcheckArgs),
    /// Mention-detection breakdown by span width.
    Report(ReportArgs),
}

#[derive(Args)]
struct CommonModelArgs {
    /// TOML run configuration; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Primary pretrained embedding file (text format). Zero vectors when
    /// omitted.
    #[arg(long)]
    embeddings_a: Option<PathBuf>,
    /// Secondary pretrained embedding file.
    #[arg(long)]
    embeddings_b: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonModelArgs,
    /// Training documents (JSON lines).
    #[arg(long)]
    train: PathBuf,
    /// Development documents for periodic evaluation.
    #[arg(long)]
    dev: Option<PathBuf>,
    /// Output checkpoint path.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Output directory for the loss log and dev reports; defaults to the
    /// checkpoint's directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Weight of the mention-detection loss term; 0 disables it.
    #[arg(long)]
    lambda_detection: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Evaluate on the dev split every N steps.
    #[arg(long)]
    eval_interval: Option<usize>,
    /// Replace the bilinear antecedent scorer with a feed-forward scorer
    /// over the concatenated span pair.
    #[arg(long)]
    no_biaffine: bool,
    /// Drop the distance/speaker/genre feature term from antecedent scores.
    #[arg(long)]
    no_pair_features: bool,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    common: CommonModelArgs,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Input documents (JSON lines).
    #[arg(long)]
    input: PathBuf,
    /// Output path for documents with predicted_clusters.
    #[arg(long)]
    out: PathBuf,
    /// Optional TSV dump of every enumerated span ranked by mention score.
    #[arg(long)]
    dump_spans: Option<PathBuf>,
    /// Optional TSV dump of the top-k candidate antecedents per surviving
    /// span.
    #[arg(long)]
    dump_antecedents: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    top_k: usize,
}

#[derive(Args)]
struct ScoreArgs {
    /// Gold documents (JSON lines).
    #[arg(long)]
    gold: PathBuf,
    /// System documents; predicted_clusters is scored when present,
    /// otherwise clusters.
    #[arg(long)]
    system: PathBuf,
    /// Baseline system for a paired bootstrap test; the reported p-value is
    /// the fraction of resamples where the baseline matches or beats the
    /// system.
    #[arg(long)]
    bootstrap: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    n_resamples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here in addition to the stdout table.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-5)]
    fd_step: f64,
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    #[arg(long)]
    lambda_detection: Option<f64>,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    common: CommonModelArgs,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Documents to analyze (JSON lines, with gold clusters).
    #[arg(long)]
    input: PathBuf,
    /// Training documents whose gold mention strings define the
    /// known/novel split; defaults to the input documents.
    #[arg(long)]
    train: Option<PathBuf>,
    /// Output CSV path (width, frequency, accuracy).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parse arguments and run; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    run_command(cli)
}

fn run_command(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Score(args) => cmd_score(args),
        Command::Gradcheck(args) => cmd_gradcheck(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Stable exit-code contract: 0 success, 1 runtime failure, 2 configuration
/// or validation failure, 3 non-finite loss or gradient abort.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::MalformedRecord { .. }
        | Error::InvalidDocument { .. }
        | Error::DocKeyMismatch(_)
        | Error::EmptyInput(_)
        | Error::Checkpoint(_) => 2,
        Error::NonFiniteLoss(_) | Error::NonFiniteGradient(_) => 3,
        _ => 1,
    }
}

fn require_exists(path: &Path, what: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{what} not found: {}",
            path.display()
        )))
    }
}

fn load_run_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => {
            require_exists(p, "config file")?;
            RunConfig::from_toml(&fs::read_to_string(p)?)
        }
        None => Ok(RunConfig::default()),
    }
}

fn load_pretrained(cfg: &ModelConfig, common: &CommonModelArgs) -> Result<Pretrained> {
    let table_a = match &common.embeddings_a {
        Some(p) => {
            require_exists(p, "embedding file")?;
            load_embeddings(p, cfg.word_dim_a)?
        }
        None => crate::corpus::EmbeddingTable::zeros(cfg.word_dim_a),
    };
    let table_b = match &common.embeddings_b {
        Some(p) => {
            require_exists(p, "embedding file")?;
            load_embeddings(p, cfg.word_dim_b)?
        }
        None => crate::corpus::EmbeddingTable::zeros(cfg.word_dim_b),
    };
    Ok(Pretrained { table_a, table_b })
}

fn loss_log_csv(entries: &[TrainLogEntry]) -> String {
    let mut out = String::from("step,L_detect_sum,L_cluster_sum,L_loss\n");
    for e in entries {
        out.push_str(&format!(
            "{},{},{},{}\n",
            e.step, e.detect_sum, e.cluster_sum, e.total
        ));
    }
    out
}

fn cmd_train(args: TrainArgs) -> Result<i32> {
    require_exists(&args.train, "training corpus")?;
    let mut run_cfg = load_run_config(&args.common.config)?;
    if let Some(s) = args.seed {
        run_cfg.train.seed = s;
    }
    if let Some(l) = args.lambda_detection {
        run_cfg.train.lambda_detection = l;
    }
    if let Some(m) = args.max_steps {
        run_cfg.train.max_steps = m;
    }
    if let Some(i) = args.eval_interval {
        run_cfg.train.eval_interval = i;
    }
    if args.no_biaffine {
        run_cfg.model.biaffine = false;
    }
    if args.no_pair_features {
        run_cfg.model.pair_features = false;
    }

    let split = load_documents(&args.train, "train")?;
    if split.docs.is_empty() {
        return Err(Error::EmptyInput("training corpus has no documents"));
    }
    let dev = match &args.dev {
        Some(p) => {
            require_exists(p, "dev corpus")?;
            Some(load_documents(p, "dev")?)
        }
        None => None,
    };
    if run_cfg.model.char_vocab.is_empty() {
        run_cfg.model.fit_vocab(&split);
    }
    let pretrained = load_pretrained(&run_cfg.model, &args.common)?;
    let out_dir = match &args.out {
        Some(d) => d.clone(),
        None => args
            .checkpoint
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    fs::create_dir_all(&out_dir)?;

    let mut model = CorefModel::new(run_cfg.model.clone(), run_cfg.train.seed);
    let mut entries: Vec<TrainLogEntry> = Vec::new();
    let eval_interval = run_cfg.train.eval_interval;
    let train_result = {
        let dev_ref = dev.as_ref();
        let pretrained_ref = &pretrained;
        let entries_ref = &mut entries;
        let out_dir_ref = &out_dir;
        train(
            &mut model,
            &split,
            &pretrained,
            &run_cfg.train,
            move |entry, current| {
                entries_ref.push(*entry);
                if eval_interval > 0 && (entry.step + 1) % eval_interval == 0 {
                    if let Some(dev_split) = dev_ref {
                        if let Ok(report) = eval_model(current, dev_split, pretrained_ref) {
                            let path =
                                out_dir_ref.join(format!("dev_report_step{}.json", entry.step + 1));
                            let _ = fs::write(path, report.to_json());
                        }
                    }
                }
                true
            },
        )
    };
    fs::write(out_dir.join("loss_log.csv"), loss_log_csv(&entries))?;
    // the model holds its last good parameters even when training aborts,
    // so the checkpoint is written either way
    model.save(&args.checkpoint)?;
    train_result?;
    println!(
        "trained {} steps; checkpoint {}",
        entries.len(),
        args.checkpoint.display()
    );
    Ok(0)
}

fn eval_model(
    model: &CorefModel,
    split: &CorpusSplit,
    pretrained: &Pretrained,
) -> Result<metrics::EvalReport> {
    let mut per_doc = Vec::with_capacity(split.docs.len());
    for doc in &split.docs {
        let predicted = predict_document(model, doc, pretrained)?;
        per_doc.push(metrics::score_document(&doc.clusters, &predicted));
    }
    Ok(metrics::report_from_doc_scores(per_doc))
}

fn cmd_predict(args: PredictArgs) -> Result<i32> {
    require_exists(&args.checkpoint, "checkpoint")?;
    require_exists(&args.input, "input corpus")?;
    let model = CorefModel::load(&args.checkpoint)?;
    let split = load_documents(&args.input, "input")?;
    let pretrained = load_pretrained(&model.config, &args.common)?;

    let mut out_docs = Vec::with_capacity(split.docs.len());
    let mut span_dump = String::new();
    let mut ante_dump = String::new();
    for doc in &split.docs {
        let mut doc = doc.clone();
        doc.predicted_clusters = Some(predict_document(&model, &doc, &pretrained)?);
        if args.dump_spans.is_some() || args.dump_antecedents.is_some() {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let fwd = model.forward(&doc, &pretrained, false, &mut rng)?;
            if args.dump_spans.is_some() {
                dump_spans(&mut span_dump, &doc, &fwd);
            }
            if args.dump_antecedents.is_some() {
                dump_antecedents(&mut ante_dump, &doc, &fwd, args.top_k);
            }
        }
        out_docs.push(doc);
    }
    write_documents(&args.out, &out_docs)?;
    if let Some(p) = &args.dump_spans {
        fs::write(p, span_dump)?;
    }
    if let Some(p) = &args.dump_antecedents {
        fs::write(p, ante_dump)?;
    }
    println!("predicted {} documents -> {}", out_docs.len(), args.out.display());
    Ok(0)
}

fn dump_spans(out: &mut String, doc: &Document, fwd: &crate::model::DocForward) {
    let scores = fwd.mention_values();
    let mut order: Vec<usize> = (0..fwd.spans.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    for i in order {
        let s = fwd.spans[i];
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            doc.doc_key,
            s.start,
            s.end,
            doc.span_text(s.start, s.end),
            scores[i]
        ));
    }
}

fn dump_antecedents(
    out: &mut String,
    doc: &Document,
    fwd: &crate::model::DocForward,
    top_k: usize,
) {
    for i in 0..fwd.antecedents.len() {
        let span_i = fwd.pruned_span(i);
        let finals = fwd.final_values(i);
        let links: Vec<f64> = fwd.antecedents[i]
            .link_vars
            .iter()
            .map(|&v| fwd.graph.scalar_value(v))
            .collect();
        let mut order: Vec<usize> = (0..finals.len()).collect();
        order.sort_by(|&a, &b| finals[b].partial_cmp(&finals[a]).unwrap());
        for &pos in order.iter().take(top_k) {
            let span_j = fwd.pruned_span(fwd.antecedents[i].candidates[pos]);
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                doc.doc_key,
                span_i.start,
                span_i.end,
                span_j.start,
                span_j.end,
                links[pos],
                finals[pos]
            ));
        }
    }
}

/// System clusters of a document: predictions when present, else gold.
fn system_clusters(doc: &Document) -> &Vec<Vec<(usize, usize)>> {
    doc.predicted_clusters.as_ref().unwrap_or(&doc.clusters)
}

/// Per-document scores for a system file aligned to gold by doc_key.
fn aligned_scores(gold: &CorpusSplit, system: &CorpusSplit) -> Result<Vec<DocScores>> {
    let sys_by_key: HashMap<&str, &Document> = system
        .docs
        .iter()
        .map(|d| (d.doc_key.as_str(), d))
        .collect();
    let gold_keys: std::collections::HashSet<&str> =
        gold.docs.iter().map(|d| d.doc_key.as_str()).collect();
    let mut offenders: Vec<String> = gold
        .docs
        .iter()
        .filter(|d| !sys_by_key.contains_key(d.doc_key.as_str()))
        .map(|d| d.doc_key.clone())
        .collect();
    offenders.extend(
        system
            .docs
            .iter()
            .filter(|d| !gold_keys.contains(d.doc_key.as_str()))
            .map(|d| d.doc_key.clone()),
    );
    if !offenders.is_empty() {
        return Err(Error::DocKeyMismatch(offenders));
    }
    Ok(gold
        .docs
        .iter()
        .map(|g| {
            let s = sys_by_key[g.doc_key.as_str()];
            metrics::score_document(&g.clusters, system_clusters(s))
        })
        .collect())
}

fn cmd_score(args: ScoreArgs) -> Result<i32> {
    require_exists(&args.gold, "gold corpus")?;
    require_exists(&args.system, "system corpus")?;
    let gold = load_documents(&args.gold, "gold")?;
    let system = load_documents(&args.system, "system")?;
    let per_doc = aligned_scores(&gold, &system)?;
    let report = metrics::report_from_doc_scores(per_doc.clone());
    print!("{}", report.text_table());
    if let Some(p) = &args.out {
        fs::write(p, report.to_json())?;
    }
    if let Some(baseline_path) = &args.bootstrap {
        require_exists(baseline_path, "baseline corpus")?;
        let baseline = load_documents(baseline_path, "baseline")?;
        let baseline_scores = aligned_scores(&gold, &baseline)?;
        let p = paired_bootstrap(&per_doc, &baseline_scores, args.n_resamples, args.seed)?;
        println!(
            "paired bootstrap ({} resamples): p = {:.4} (fraction of resamples where the baseline >= the system)",
            args.n_resamples, p
        );
        if p < 0.05 {
            println!("the system improves significantly over the baseline (p < 0.05)");
        } else {
            println!("no significant difference (p >= 0.05)");
        }
    }
    Ok(0)
}

/// Fixed two-sentence fixture for gradient checking, with a small model
/// configuration so finite differences over every parameter stay fast.
pub fn gradcheck_fixture() -> (ModelConfig, Document) {
    let doc = Document {
        doc_key: "gradcheck/0".to_string(),
        genre: "nw".to_string(),
        sentences: vec![
            vec!["Anna", "met", "Omar", "yesterday"]
                .into_iter()
                .map(String::from)
                .collect(),
            vec!["She", "thanked", "him"]
                .into_iter()
                .map(String::from)
                .collect(),
        ],
        speakers: vec![
            vec!["spk0".to_string(); 4],
            vec!["spk0".to_string(); 3],
        ],
        clusters: vec![vec![(0, 0), (4, 4)], vec![(2, 2), (6, 6)]],
        predicted_clusters: None,
    };
    let mut cfg = ModelConfig::tiny();
    let split = CorpusSplit {
        name: "gradcheck".to_string(),
        docs: vec![doc.clone()],
    };
    cfg.fit_vocab(&split);
    (cfg, doc)
}

fn cmd_gradcheck(args: GradcheckArgs) -> Result<i32> {
    let (cfg, doc) = gradcheck_fixture();
    let mut model = CorefModel::new(cfg.clone(), args.seed);
    let pretrained = Pretrained::zeros(&cfg);
    let lambda = args.lambda_detection.unwrap_or(0.1);
    let report = gradient_check(&mut model, &doc, &pretrained, lambda, args.fd_step, args.seed)?;
    for (name, err) in &report.groups {
        let status = if *err < args.tolerance { "ok" } else { "FAIL" };
        println!("{status:4} {name:<22} max relative error {err:.3e}");
    }
    println!(
        "checked {} parameter groups; max relative error {:.3e}",
        report.groups.len(),
        report.max_error()
    );
    if report.passed(args.tolerance) {
        println!("gradient check passed");
        Ok(0)
    } else {
        println!("gradient check FAILED (tolerance {:.1e})", args.tolerance);
        Ok(1)
    }
}

fn cmd_report(args: ReportArgs) -> Result<i32> {
    require_exists(&args.checkpoint, "checkpoint")?;
    require_exists(&args.input, "input corpus")?;
    let model = CorefModel::load(&args.checkpoint)?;
    let split = load_documents(&args.input, "input")?;
    let pretrained = load_pretrained(&model.config, &args.common)?;
    let strings = match &args.train {
        Some(p) => {
            require_exists(p, "training corpus")?;
            gold_mention_strings(&load_documents(p, "train")?.docs)
        }
        None => gold_mention_strings(&split.docs),
    };
    let report = mention_detection_report(&model, &split.docs, &pretrained, &strings)?;
    println!("width frequency detected accuracy");
    for row in &report.rows {
        println!(
            "{:>5} {:>9} {:>8} {:>8.4}",
            row.width, row.frequency, row.detected, row.accuracy
        );
    }
    println!(
        "detected spans seen in training gold: {}; novel: {}",
        report.known_detected.len(),
        report.novel_detected.len()
    );
    if let Some(p) = &args.out {
        fs::write(p, report.csv())?;
    }
    Ok(0)
}
