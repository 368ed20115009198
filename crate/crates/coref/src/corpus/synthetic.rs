//! Deterministic synthetic corpus generator for desk-scale runs.
//!
//! Documents repeat templated entities via names and pronouns so every
//! document has at least one gold cluster of size >= 2, a sizable fraction of
//! gold mentions are multiword, and no gold cluster is a singleton.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CorpusSplit, Document};

const FIRST_NAMES: &[(&str, &str)] = &[
    ("alice", "she"),
    ("bob", "he"),
    ("carol", "she"),
    ("dave", "he"),
    ("erin", "she"),
    ("frank", "he"),
    ("grace", "she"),
    ("henry", "he"),
];
const LAST_NAMES: &[&str] = &["smith", "jones", "baker", "miller"];
const VERBS: &[&str] = &["saw", "met", "liked", "called", "helped", "found"];
const NOUNS: &[&str] = &["dog", "car", "book", "tree", "house", "boat"];
const GENRES: &[&str] = &["nw", "bc", "wb"];

struct Entity {
    name: Vec<String>,
    pronoun: String,
}

/// Generate `n_docs` documents, deterministic under `seed`. `vocab_size`
/// bounds the pools of names/verbs/nouns; `max_sentences` bounds document
/// length.
pub fn generate_synthetic_corpus(
    seed: u64,
    n_docs: usize,
    vocab_size: usize,
    max_sentences: usize,
) -> CorpusSplit {
    assert!(n_docs > 0 && vocab_size > 0 && max_sentences > 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // trim pools to roughly respect the vocabulary budget
    let n_first = FIRST_NAMES.len().min(vocab_size.div_ceil(4)).max(2);
    let n_last = LAST_NAMES.len().min(vocab_size.div_ceil(8)).max(1);
    let n_verbs = VERBS.len().min(vocab_size.div_ceil(6)).max(1);
    let n_nouns = NOUNS.len().min(vocab_size.div_ceil(6)).max(1);

    let mut docs = Vec::with_capacity(n_docs);
    for d in 0..n_docs {
        // two entities with distinct pronouns so pronoun mentions are
        // unambiguous surface cues
        let (he_pool, she_pool): (Vec<_>, Vec<_>) = FIRST_NAMES[..n_first]
            .iter()
            .partition(|(_, p)| *p == "he");
        let pick = |pool: &[&(&str, &str)], rng: &mut ChaCha8Rng| -> Entity {
            let &&(first, pronoun) = pool.choose(rng).expect("non-empty name pool");
            let mut name = vec![first.to_string()];
            if rng.gen_bool(0.7) {
                name.push(LAST_NAMES[rng.gen_range(0..n_last)].to_string());
            }
            Entity {
                name,
                pronoun: pronoun.to_string(),
            }
        };
        let entities = [
            pick(&he_pool.iter().collect::<Vec<_>>(), &mut rng),
            pick(&she_pool.iter().collect::<Vec<_>>(), &mut rng),
        ];

        let n_sentences = rng.gen_range(2..=max_sentences.max(2));
        let mut sentences: Vec<Vec<String>> = Vec::new();
        let mut speakers: Vec<Vec<String>> = Vec::new();
        let mut mentions: Vec<Vec<(usize, usize)>> = vec![Vec::new(), Vec::new()];
        let mut offset = 0;
        for s in 0..n_sentences {
            let ent = s % 2;
            // first reference to an entity uses its name, later ones a pronoun
            let use_name = mentions[ent].is_empty() || rng.gen_bool(0.3);
            let mention_tokens: Vec<String> = if use_name {
                entities[ent].name.clone()
            } else {
                vec![entities[ent].pronoun.clone()]
            };
            let mut sentence = mention_tokens.clone();
            sentence.push(VERBS[rng.gen_range(0..n_verbs)].to_string());
            sentence.push("the".to_string());
            sentence.push(NOUNS[rng.gen_range(0..n_nouns)].to_string());
            mentions[ent].push((offset, offset + mention_tokens.len() - 1));
            let speaker = format!("spk{}", s % 2);
            speakers.push(vec![speaker; sentence.len()]);
            offset += sentence.len();
            sentences.push(sentence);
        }
        // CoNLL convention: no singleton gold clusters
        let clusters: Vec<Vec<(usize, usize)>> =
            mentions.into_iter().filter(|m| m.len() >= 2).collect();
        docs.push(Document {
            doc_key: format!("synth_{d:04}"),
            genre: GENRES[d % GENRES.len()].to_string(),
            sentences,
            speakers,
            clusters,
            predicted_clusters: None,
        });
    }
    // guarantee every document has a cluster of size >= 2: with >= 2
    // sentences one entity always gets two mentions only when sentences
    // alternate; with exactly 2 sentences each entity appears once, so pad
    for doc in docs.iter_mut() {
        if doc.clusters.is_empty() {
            // append one pronoun sentence for the first-sentence entity
            let mut rng2 = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
            let first_word = doc.sentences[0][0].clone();
            let pronoun = FIRST_NAMES
                .iter()
                .find(|(n, _)| *n == first_word)
                .map(|(_, p)| p.to_string())
                .unwrap_or_else(|| "he".to_string());
            let offset = doc.num_tokens();
            let first_len = doc
                .sentences[0]
                .len()
                .saturating_sub(3); // mention length = sentence minus verb/det/noun
            let sentence = vec![
                pronoun,
                VERBS[rng2.gen_range(0..n_verbs)].to_string(),
                "the".to_string(),
                NOUNS[rng2.gen_range(0..n_nouns)].to_string(),
            ];
            doc.speakers.push(vec!["spk0".to_string(); sentence.len()]);
            doc.sentences.push(sentence);
            doc.clusters
                .push(vec![(0, first_len - 1), (offset, offset)]);
        }
    }
    let split = CorpusSplit {
        name: "synthetic".to_string(),
        docs,
    };
    split.validate().expect("generated corpus must be valid");
    split
}
