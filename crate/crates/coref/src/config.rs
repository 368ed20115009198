//! Model and training configuration with the published defaults.

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusSplit;
use crate::math::AdamHyper;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Dimension of the primary fixed pretrained table (GloVe-style).
    pub word_dim_a: usize,
    /// Dimension of the secondary fixed pretrained table.
    pub word_dim_b: usize,
    pub char_dim: usize,
    pub char_kernels: usize,
    pub char_windows: Vec<usize>,
    pub hidden: usize,
    pub ffnn: usize,
    pub feature_dim: usize,
    pub max_width: usize,
    pub max_antecedents: usize,
    pub prune_ratio: f64,
    pub lexical_dropout: f64,
    pub hidden_dropout: f64,
    /// When false, antecedent scores come from a feed-forward scorer over
    /// the concatenated reduced span pair instead of the bilinear form.
    pub biaffine: bool,
    /// When false, no distance/speaker/genre term is added to c(i,j).
    pub pair_features: bool,
    /// Characters known to the char CNN; built from the training corpus.
    pub char_vocab: String,
    /// Genre labels known to the genre embedding; built from the corpus.
    pub genres: Vec<String>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            word_dim_a: 300,
            word_dim_b: 50,
            char_dim: 8,
            char_kernels: 50,
            char_windows: vec![3, 4, 5],
            hidden: 200,
            ffnn: 150,
            feature_dim: 20,
            max_width: 10,
            max_antecedents: 250,
            prune_ratio: 0.4,
            lexical_dropout: 0.5,
            hidden_dropout: 0.2,
            biaffine: true,
            pair_features: true,
            char_vocab: String::new(),
            genres: vec!["nw".to_string()],
        }
    }
}

impl ModelConfig {
    /// Per-token representation dimension: both pretrained tables plus the
    /// char CNN output.
    pub fn token_dim(&self) -> usize {
        self.word_dim_a + self.word_dim_b + self.char_windows.len() * self.char_kernels
    }

    /// Span representation dimension: h_start, h_end, head-attention vector,
    /// width feature.
    pub fn span_dim(&self) -> usize {
        2 * (2 * self.hidden) + self.token_dim() + self.feature_dim
    }

    /// Populate character and genre vocabularies from a corpus.
    pub fn fit_vocab(&mut self, split: &CorpusSplit) {
        let mut chars: Vec<char> = split
            .docs
            .iter()
            .flat_map(|d| d.sentences.iter().flatten())
            .flat_map(|w| w.chars())
            .collect();
        chars.sort_unstable();
        chars.dedup();
        self.char_vocab = chars.into_iter().collect();
        let mut genres: Vec<String> = split.docs.iter().map(|d| d.genre.clone()).collect();
        genres.sort();
        genres.dedup();
        if genres.is_empty() {
            genres.push("nw".to_string());
        }
        self.genres = genres;
    }

    /// Scaled-down configuration for gradient checking: small enough that
    /// central finite differences over every parameter stay fast.
    pub fn tiny() -> Self {
        Self {
            word_dim_a: 4,
            word_dim_b: 2,
            char_dim: 3,
            char_kernels: 2,
            char_windows: vec![2, 3],
            hidden: 4,
            ffnn: 3,
            feature_dim: 2,
            max_width: 4,
            max_antecedents: 250,
            prune_ratio: 0.4,
            lexical_dropout: 0.5,
            hidden_dropout: 0.2,
            biaffine: true,
            pair_features: true,
            char_vocab: String::new(),
            genres: vec!["nw".to_string()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lambda_detection: f64,
    pub adam: AdamHyper,
    pub max_steps: usize,
    pub seed: u64,
    /// Evaluate on the dev split every this many steps; 0 disables.
    pub eval_interval: usize,
    /// Optional global-norm gradient clipping.
    pub grad_clip: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda_detection: 0.1,
            adam: AdamHyper::default(),
            max_steps: 2000,
            seed: 0,
            eval_interval: 0,
            grad_clip: None,
        }
    }
}

/// On-disk run configuration: `[model]` and `[train]` tables in TOML.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> crate::error::Result<Self> {
        toml::from_str(text).map_err(|e| crate::error::Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
