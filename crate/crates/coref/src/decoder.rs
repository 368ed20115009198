//! Greedy antecedent decoding and transitive-closure cluster formation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Document;
use crate::error::Result;
use crate::model::{CorefModel, DocForward, Pretrained};

/// Best antecedent per pruned span: `Some(j)` (pruned index) when the best
/// candidate scores strictly above the dummy's 0, `None` otherwise. Score
/// ties between candidates resolve toward the nearer (later) antecedent.
pub fn predict_links(fwd: &DocForward) -> Vec<Option<usize>> {
    fwd.antecedents
        .iter()
        .map(|ante| {
            let mut best: Option<(usize, f64)> = None;
            for (pos, &j) in ante.candidates.iter().enumerate() {
                let s = fwd.graph.scalar_value(ante.final_vars[pos]);
                // candidates are in ascending span order, so >= keeps the
                // nearest among tied scores
                if best.map_or(true, |(_, b)| s >= b) {
                    best = Some((j, s));
                }
            }
            match best {
                Some((j, s)) if s > 0.0 => Some(j),
                _ => None,
            }
        })
        .collect()
}

/// Union-find closure over predicted links, as clusters of (start, end)
/// spans sorted within and across clusters. Singletons are dropped.
pub fn form_clusters(fwd: &DocForward, links: &[Option<usize>]) -> Vec<Vec<(usize, usize)>> {
    let n = links.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (i, link) in links.iter().enumerate() {
        if let Some(j) = link {
            let (a, b) = (find(&mut parent, i), find(&mut parent, *j));
            if a != b {
                parent[a] = b;
            }
        }
    }
    let mut groups: std::collections::HashMap<usize, Vec<(usize, usize)>> =
        std::collections::HashMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        let span = fwd.pruned_span(i);
        groups.entry(root).or_default().push((span.start, span.end));
    }
    let mut clusters: Vec<Vec<(usize, usize)>> = groups
        .into_values()
        .filter(|c| c.len() >= 2)
        .collect();
    for c in &mut clusters {
        c.sort_unstable();
    }
    clusters.sort_unstable();
    clusters
}

/// Full inference on one document: forward pass in evaluation mode, link
/// prediction, and cluster formation.
pub fn predict_document(
    model: &CorefModel,
    doc: &Document,
    pretrained: &Pretrained,
) -> Result<Vec<Vec<(usize, usize)>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let fwd = model.forward(doc, pretrained, false, &mut rng)?;
    let links = predict_links(&fwd);
    Ok(form_clusters(&fwd, &links))
}
