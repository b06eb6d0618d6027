//! Direct, unoptimized restatements of the scoring formulas.

use std::collections::{BTreeMap, BTreeSet};

use review_insight::rating::Tree;

/// Class-term weights `tf * ln(1 + A / tf_t)`, one term at a time. `A` is the
/// mean class length in words. With `l1` the leading tf is divided by the
/// class length.
pub fn scalar_ctfidf(classes: &[BTreeMap<String, usize>], l1: bool) -> Vec<BTreeMap<String, f64>> {
    let mut lengths = Vec::new();
    for c in classes {
        let mut len = 0;
        for n in c.values() {
            len += n;
        }
        lengths.push(len as f64);
    }
    let a = lengths.iter().sum::<f64>() / classes.len() as f64;
    let mut out = Vec::new();
    for (ci, c) in classes.iter().enumerate() {
        let mut row = BTreeMap::new();
        for (term, &tf) in c {
            if tf == 0 {
                continue;
            }
            let mut tf_t = 0;
            for other in classes {
                if let Some(&n) = other.get(term) {
                    tf_t += n;
                }
            }
            let lead = if l1 { tf as f64 / lengths[ci] } else { tf as f64 };
            row.insert(term.clone(), lead * (1.0 + a / tf_t as f64).ln());
        }
        out.push(row);
    }
    out
}

fn doc_count(docs: &[Vec<String>], words: &[&str]) -> usize {
    docs.iter()
        .filter(|d| words.iter().all(|w| d.iter().any(|t| t == w)))
        .count()
}

/// NPMI of a pair by scanning every document. Zero counts become `1 / (10 N)`.
pub fn direct_npmi(docs: &[Vec<String>], a: &str, b: &str) -> f64 {
    let n = docs.len() as f64;
    let eps = 1.0 / (10.0 * n);
    let prob = |c: usize| if c == 0 { eps } else { c as f64 / n };
    let pa = prob(doc_count(docs, &[a]));
    let pb = prob(doc_count(docs, &[b]));
    let pab = prob(doc_count(docs, &[a, b]));
    if pab == 1.0 {
        return 1.0;
    }
    (pab / (pa * pb)).ln() / -pab.ln()
}

pub fn direct_coherence(docs: &[Vec<String>], topics: &[Vec<String>], k: usize) -> f64 {
    let mut per_topic = Vec::new();
    for t in topics {
        let w: Vec<&String> = t.iter().take(k).collect();
        let mut scores = Vec::new();
        for i in 0..w.len() {
            for j in i + 1..w.len() {
                scores.push(direct_npmi(docs, w[i], w[j]));
            }
        }
        per_topic.push(scores.iter().sum::<f64>() / scores.len() as f64);
    }
    per_topic.iter().sum::<f64>() / per_topic.len() as f64
}

pub fn direct_diversity(topics: &[Vec<String>], k: usize) -> f64 {
    let mut all = Vec::new();
    for t in topics {
        all.extend(t.iter().take(k).cloned());
    }
    let unique: BTreeSet<&String> = all.iter().collect();
    unique.len() as f64 / all.len() as f64
}

/// Expected tree output when only the features in `known` are observed;
/// splits on unobserved features follow both branches weighted by cover.
fn conditional_expectation(tree: &Tree, x: &[f64], known: u32, node: usize) -> f64 {
    let n = &tree.nodes[node];
    match n.feature {
        None => n.value,
        Some(f) if known & (1 << f) != 0 => {
            let next = if x[f] <= n.threshold { n.left } else { n.right };
            conditional_expectation(tree, x, known, next)
        }
        Some(_) => {
            let (l, r) = (&tree.nodes[n.left], &tree.nodes[n.right]);
            (l.cover * conditional_expectation(tree, x, known, n.left)
                + r.cover * conditional_expectation(tree, x, known, n.right))
                / n.cover
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Shapley values by enumerating all `2^p` coalitions.
pub fn brute_force_shapley(tree: &Tree, x: &[f64]) -> Vec<f64> {
    let p = x.len();
    assert!(p <= 16);
    let v: Vec<f64> = (0..1u32 << p).map(|s| conditional_expectation(tree, x, s, 0)).collect();
    (0..p)
        .map(|i| {
            let mut phi = 0.0;
            for s in 0..1u32 << p {
                if s & (1 << i) != 0 {
                    continue;
                }
                let size = s.count_ones() as usize;
                let w = factorial(size) * factorial(p - size - 1) / factorial(p);
                phi += w * (v[(s | 1 << i) as usize] - v[s as usize]);
            }
            phi
        })
        .collect()
}

/// Probability that a random positive outscores a random negative, ties half.
pub fn pairwise_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1.0;
                if si > sj {
                    wins += 1.0;
                } else if si == sj {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}
