//! Full model: parameter registry, checkpoint round-trip, and the document
//! forward pass from tokens to antecedent scores.

use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::antecedent::{
    anaphora_projection, antecedent_projection, biaffine_score, candidates, final_score,
    no_biaffine_score, pair_feature_score,
};
use crate::config::ModelConfig;
use crate::corpus::{Document, EmbeddingTable};
use crate::encoder::{
    attention_logit, char_table_rows, encode_sentence, token_representation, width_bucket,
    NUM_DISTANCE_BUCKETS,
};
use crate::error::{Error, Result};
use crate::math::{Graph, ParamStore, Var};
use crate::spans::{enumerate_spans, head_attention, mention_score, prune, PrunedSpanList, Span};

/// Graph handles for every parameter, valid for one trace.
pub struct Bound {
    map: HashMap<String, Var>,
}

impl Bound {
    pub fn get(&self, name: &str) -> Var {
        *self
            .map
            .get(name)
            .unwrap_or_else(|| panic!("unbound parameter {name}"))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Var)> {
        self.map.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

/// The two fixed pretrained embedding tables.
#[derive(Debug, Clone)]
pub struct Pretrained {
    pub table_a: EmbeddingTable,
    pub table_b: EmbeddingTable,
}

impl Pretrained {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        Self {
            table_a: EmbeddingTable::zeros(cfg.word_dim_a),
            table_b: EmbeddingTable::zeros(cfg.word_dim_b),
        }
    }
}

/// Antecedent scores for one surviving span: candidate indices into the
/// pruned list, the link scores c(i,j), and final scores s(i,j). The dummy
/// antecedent's score is fixed at 0 and kept implicit.
pub struct SpanAntecedents {
    pub candidates: Vec<usize>,
    pub link_vars: Vec<Var>,
    pub final_vars: Vec<Var>,
}

/// Result of a document forward pass. `bound` carries the parameter handles
/// of this trace so gradients can be read back per parameter.
pub struct DocForward {
    pub graph: Graph,
    pub bound: Bound,
    pub spans: Vec<Span>,
    pub mention_vars: Vec<Var>,
    pub pruned: PrunedSpanList,
    pub antecedents: Vec<SpanAntecedents>,
}

impl DocForward {
    pub fn mention_values(&self) -> Vec<f64> {
        self.mention_vars
            .iter()
            .map(|&v| self.graph.scalar_value(v))
            .collect()
    }

    /// Final score values per pruned span, candidate order.
    pub fn final_values(&self, i: usize) -> Vec<f64> {
        self.antecedents[i]
            .final_vars
            .iter()
            .map(|&v| self.graph.scalar_value(v))
            .collect()
    }

    pub fn pruned_span(&self, i: usize) -> Span {
        self.spans[self.pruned.kept[i]]
    }
}

pub struct CorefModel {
    pub config: ModelConfig,
    pub params: ParamStore,
}

impl CorefModel {
    /// Fresh model with seeded initialization.
    pub fn new(config: ModelConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ParamStore::new();
        let cd = config.char_dim;
        let f = config.ffnn;
        let h = config.hidden;
        let token = config.token_dim();
        let span = config.span_dim();

        p.insert_embedding("char/table", char_table_rows(&config), cd, &mut rng);
        for &w in &config.char_windows {
            p.insert_xavier(&format!("char/conv{w}/kernel"), w * cd, config.char_kernels, &mut rng);
            p.insert_zeros(&format!("char/conv{w}/bias"), vec![config.char_kernels]);
        }
        for dir in ["fwd", "bwd"] {
            p.insert_xavier(&format!("lstm/{dir}/w_x"), 4 * h, token, &mut rng);
            p.insert_xavier(&format!("lstm/{dir}/w_h"), 4 * h, h, &mut rng);
            // forget-gate bias starts at 1
            let mut b = vec![0.0; 4 * h];
            b[h..2 * h].iter_mut().for_each(|v| *v = 1.0);
            p.insert(&format!("lstm/{dir}/b"), vec![4 * h], b);
        }
        // biases start at small random values rather than zero so ReLU
        // pre-activations never sit exactly on the kink
        let ffnn2_params = |p: &mut ParamStore, rng: &mut ChaCha8Rng, prefix: &str, input: usize| {
            p.insert_xavier(&format!("{prefix}/w1"), f, input, rng);
            p.insert(&format!("{prefix}/b1"), vec![f], rand_vec(rng, f));
            p.insert_xavier(&format!("{prefix}/w2"), f, f, rng);
            p.insert(&format!("{prefix}/b2"), vec![f], rand_vec(rng, f));
        };
        ffnn2_params(&mut p, &mut rng, "att", 2 * h);
        p.insert("att/v", vec![f], rand_vec(&mut rng, f));
        p.insert_embedding("feat/width", NUM_DISTANCE_BUCKETS, config.feature_dim, &mut rng);
        ffnn2_params(&mut p, &mut rng, "mention", span);
        p.insert("mention/v", vec![f], rand_vec(&mut rng, f));
        ffnn2_params(&mut p, &mut rng, "anaphora", span);
        ffnn2_params(&mut p, &mut rng, "antecedent", span);
        if config.biaffine {
            p.insert_xavier("bi/u", f, f, &mut rng);
            p.insert("bi/v", vec![f], rand_vec(&mut rng, f));
        } else {
            ffnn2_params(&mut p, &mut rng, "pairffnn", 2 * f);
            p.insert("pairffnn/v", vec![f], rand_vec(&mut rng, f));
        }
        if config.pair_features {
            p.insert_embedding("feat/distance", NUM_DISTANCE_BUCKETS, config.feature_dim, &mut rng);
            p.insert_embedding("feat/speaker", 2, config.feature_dim, &mut rng);
            p.insert_embedding("feat/genre", config.genres.len().max(1), config.feature_dim, &mut rng);
            p.insert("pair/w", vec![3 * config.feature_dim], rand_vec(&mut rng, 3 * config.feature_dim));
        }
        Self { config, params: p }
    }

    /// Insert every parameter into a fresh graph as a trainable leaf.
    pub fn bind(&self, g: &mut Graph) -> Bound {
        let mut map = HashMap::new();
        for (name, param) in self.params.iter() {
            let var = g.param(param.shape.clone(), param.values.clone());
            map.insert(name.to_string(), var);
        }
        Bound { map }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let cfg = toml::to_string(&self.config)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        self.params.save(path, &cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (params, cfg_str) = ParamStore::load(path)?;
        let config: ModelConfig =
            toml::from_str(&cfg_str).map_err(|e| Error::Checkpoint(e.to_string()))?;
        Ok(Self { config, params })
    }

    fn genre_index(&self, genre: &str) -> usize {
        self.config
            .genres
            .iter()
            .position(|g| g == genre)
            .unwrap_or(0)
    }

    /// Run the whole pipeline on a document: encode, enumerate, score
    /// mentions, prune, and score candidate antecedents.
    pub fn forward(
        &self,
        doc: &Document,
        pretrained: &Pretrained,
        training: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<DocForward> {
        let cfg = &self.config;
        let mut g = Graph::new();
        let bound = self.bind(&mut g);

        // per-token encodings, sentence by sentence (state resets)
        let mut token_reps: Vec<Var> = Vec::new();
        let mut encoded: Vec<Var> = Vec::new();
        let mut att_logits: Vec<Var> = Vec::new();
        for sentence in &doc.sentences {
            let reps: Vec<Var> = sentence
                .iter()
                .map(|w| {
                    token_representation(
                        &mut g,
                        &bound,
                        cfg,
                        &pretrained.table_a,
                        &pretrained.table_b,
                        w,
                        training,
                        rng,
                    )
                })
                .collect::<Result<_>>()?;
            let hs = encode_sentence(&mut g, &bound, cfg, &reps, training, rng)?;
            for &h in &hs {
                att_logits.push(attention_logit(&mut g, &bound, cfg, h, training, rng)?);
            }
            token_reps.extend(reps);
            encoded.extend(hs);
        }

        // span representations and mention scores
        let spans = enumerate_spans(doc, cfg.max_width);
        let width_table = bound.get("feat/width");
        let mut mention_vars = Vec::with_capacity(spans.len());
        let mut span_reps = Vec::with_capacity(spans.len());
        for span in &spans {
            let range = span.start..=span.end;
            let head = head_attention(
                &mut g,
                &att_logits[range.clone()],
                &token_reps[range],
            )?;
            let width_emb = g.row(width_table, width_bucket(span.width()));
            let width_emb = g.dropout(width_emb, cfg.hidden_dropout, training, rng)?;
            let rep = g.concat(&[encoded[span.start], encoded[span.end], head, width_emb])?;
            mention_vars.push(mention_score(&mut g, &bound, cfg, rep, training, rng)?);
            span_reps.push(rep);
        }

        let mention_values: Vec<f64> = mention_vars
            .iter()
            .map(|&v| g.scalar_value(v))
            .collect();
        let pruned = prune(&mention_values, cfg.prune_ratio, doc.num_tokens());

        // reduced projections for surviving spans
        let mut shat_ana = Vec::with_capacity(pruned.kept.len());
        let mut shat_ant = Vec::with_capacity(pruned.kept.len());
        for &idx in &pruned.kept {
            shat_ana.push(anaphora_projection(&mut g, &bound, cfg, span_reps[idx], training, rng)?);
            shat_ant.push(antecedent_projection(&mut g, &bound, cfg, span_reps[idx], training, rng)?);
        }

        let speakers = doc.flat_speakers();
        let genre_idx = self.genre_index(&doc.genre);
        let mut antecedents = Vec::with_capacity(pruned.kept.len());
        for i in 0..pruned.kept.len() {
            let cands = candidates(i, cfg.max_antecedents);
            let (u_si, prior_i) = if cfg.biaffine {
                let u = bound.get("bi/u");
                let v = bound.get("bi/v");
                let u_si = g.matvec(u, shat_ana[i])?;
                let prior = g.dot(v, shat_ana[i])?;
                (Some(u_si), Some(prior))
            } else {
                (None, None)
            };
            let m_i = mention_vars[pruned.kept[i]];
            let span_i = spans[pruned.kept[i]];
            let mut link_vars = Vec::with_capacity(cands.len());
            let mut final_vars = Vec::with_capacity(cands.len());
            for &j in &cands {
                let mut c = if cfg.biaffine {
                    biaffine_score(&mut g, shat_ant[j], u_si.unwrap(), prior_i.unwrap())?
                } else {
                    no_biaffine_score(&mut g, &bound, cfg, shat_ana[i], shat_ant[j], training, rng)?
                };
                if cfg.pair_features {
                    let span_j = spans[pruned.kept[j]];
                    let same_speaker = speakers[span_i.start] == speakers[span_j.start];
                    let feat = pair_feature_score(
                        &mut g,
                        &bound,
                        cfg,
                        i - j,
                        same_speaker,
                        genre_idx,
                        training,
                        rng,
                    )?;
                    c = g.add(c, feat)?;
                }
                let m_j = mention_vars[pruned.kept[j]];
                let s = final_score(&mut g, m_i, m_j, c)?;
                link_vars.push(c);
                final_vars.push(s);
            }
            antecedents.push(SpanAntecedents {
                candidates: cands,
                link_vars,
                final_vars,
            });
        }

        Ok(DocForward {
            graph: g,
            bound,
            spans,
            mention_vars,
            pruned,
            antecedents,
        })
    }

    /// Copy gradients out of a trace in parameter-store order.
    pub fn collect_gradients(
        &self,
        bound: &Bound,
        grads: &crate::math::Gradients,
    ) -> Vec<Option<Vec<f64>>> {
        self.params
            .names()
            .map(|name| grads.wrt(bound.get(name)).map(|g| g.to_vec()))
            .collect()
    }
}

fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let limit = (3.0 / n as f64).sqrt();
    (0..n).map(|_| rng.gen_range(-limit..limit)).collect()
}
