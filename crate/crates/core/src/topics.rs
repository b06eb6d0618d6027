//! Class-based TF-IDF topics: class documents from clusters, term weights
//! `W = tf_{t,c} · ln(1 + A / tf_t)`, top words, reduction by merging, and
//! document-topic distributions.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::NOISE;
use crate::io::{self, IoError};
use crate::preprocess::TokenDoc;

pub const DEFAULT_TOP_WORDS: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum TopicError {
    #[error("every document is noise; no topic classes can be formed")]
    NoClusters,
    #[error("{docs} token docs but {labels} cluster labels")]
    Misaligned { docs: usize, labels: usize },
    #[error("unknown topic {0}")]
    UnknownClass(i64),
    #[error("target of {target} topics is outside 1..={current}")]
    TargetTooLarge { target: usize, current: usize },
    #[error(transparent)]
    Io(#[from] IoError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicClass {
    pub class_id: i64,
    /// Document positions in the corpus.
    pub members: Vec<usize>,
    pub term_counts: BTreeMap<String, usize>,
    pub total_words: usize,
}

/// Groups token documents by cluster label. Noise documents join no class.
pub fn aggregate_classes(docs: &[TokenDoc], labels: &[i64]) -> Result<Vec<TopicClass>, TopicError> {
    if docs.len() != labels.len() {
        return Err(TopicError::Misaligned {
            docs: docs.len(),
            labels: labels.len(),
        });
    }
    let mut classes: BTreeMap<i64, TopicClass> = BTreeMap::new();
    for (i, (doc, &label)) in docs.iter().zip(labels).enumerate() {
        if label == NOISE {
            continue;
        }
        let c = classes.entry(label).or_insert_with(|| TopicClass {
            class_id: label,
            members: Vec::new(),
            term_counts: BTreeMap::new(),
            total_words: 0,
        });
        c.members.push(i);
        for t in &doc.tokens {
            *c.term_counts.entry(t.clone()).or_default() += 1;
            c.total_words += 1;
        }
    }
    if classes.is_empty() {
        return Err(TopicError::NoClusters);
    }
    Ok(classes.into_values().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CTfIdfModel {
    pub class_ids: Vec<i64>,
    /// Sorted terms; column `j` of `weights` is `terms[j]`.
    pub terms: Vec<String>,
    pub weights: Vec<Vec<f64>>,
    pub corpus_term_counts: Vec<usize>,
    /// Mean number of words per class.
    pub average_words: f64,
}

impl CTfIdfModel {
    fn row(&self, class_id: i64) -> Result<&[f64], TopicError> {
        self.class_ids
            .iter()
            .position(|&c| c == class_id)
            .map(|i| self.weights[i].as_slice())
            .ok_or(TopicError::UnknownClass(class_id))
    }
}

/// Term weights per class. With `l1_normalize` the leading `tf_{t,c}` factor
/// is divided by the class's total words; `tf_t` and `A` stay raw counts.
pub fn compute_ctfidf(classes: &[TopicClass], l1_normalize: bool) -> CTfIdfModel {
    let terms: Vec<String> = classes
        .iter()
        .flat_map(|c| c.term_counts.keys().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let corpus_term_counts: Vec<usize> = terms
        .iter()
        .map(|t| classes.iter().map(|c| c.term_counts.get(t).copied().unwrap_or(0)).sum())
        .collect();
    let average_words =
        classes.iter().map(|c| c.total_words as f64).sum::<f64>() / classes.len().max(1) as f64;
    let weights = classes
        .par_iter()
        .map(|c| {
            terms
                .iter()
                .zip(&corpus_term_counts)
                .map(|(t, &tf_t)| {
                    let tf = c.term_counts.get(t).copied().unwrap_or(0);
                    if tf == 0 {
                        return 0.0;
                    }
                    let lead = if l1_normalize {
                        tf as f64 / c.total_words as f64
                    } else {
                        tf as f64
                    };
                    lead * (1.0 + average_words / tf_t as f64).ln()
                })
                .collect()
        })
        .collect();
    CTfIdfModel {
        class_ids: classes.iter().map(|c| c.class_id).collect(),
        terms,
        weights,
        corpus_term_counts,
        average_words,
    }
}

/// The `k` highest-weighted terms of a class, ties broken lexicographically.
/// Terms absent from the class are never listed.
pub fn top_words(model: &CTfIdfModel, class_id: i64, k: usize) -> Result<Vec<(String, f64)>, TopicError> {
    let row = model.row(class_id)?;
    let mut ranked: Vec<(String, f64)> = model
        .terms
        .iter()
        .zip(row)
        .filter(|(_, &w)| w > 0.0)
        .map(|(t, &w)| (t.clone(), w))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    Ok(ranked)
}

fn cosine_or_zero(u: &[f64], v: &[f64]) -> f64 {
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / (nu * nv)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum DocTopicMode {
    /// Shifted cosine to topic centroids, normalized per row.
    #[default]
    CentroidCosine,
    /// Cluster membership strength on the assigned topic, the rest spread evenly.
    MembershipStrength,
}

/// Row-stochastic document-topic matrix from cosine similarity to centroids,
/// shifted to `(s + 1) / 2`.
pub fn doc_topic_distribution(vectors: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = centroids.len();
    vectors
        .par_iter()
        .map(|v| {
            let row: Vec<f64> = centroids.iter().map(|c| (cosine_or_zero(v, c) + 1.0) / 2.0).collect();
            let s: f64 = row.iter().sum();
            if s > 0.0 {
                row.into_iter().map(|x| x / s).collect()
            } else {
                vec![1.0 / k as f64; k]
            }
        })
        .collect()
}

/// Distribution from hard labels and strengths: `s + (1 - s) / K` on the
/// assigned topic, `(1 - s) / K` elsewhere, uniform for noise.
pub fn membership_distribution(labels: &[i64], strengths: &[f64], topic_ids: &[i64]) -> Vec<Vec<f64>> {
    let k = topic_ids.len() as f64;
    labels
        .iter()
        .zip(strengths)
        .map(|(&l, &s)| match topic_ids.iter().position(|&t| t == l) {
            Some(j) => {
                let mut row = vec![(1.0 - s) / k; topic_ids.len()];
                row[j] += s;
                row
            }
            None => vec![1.0 / k; topic_ids.len()],
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topic {
    pub id: i64,
    pub size: usize,
    pub top_words: Vec<(String, f64)>,
    pub centroid: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Merge {
    pub source: i64,
    pub target: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    /// Sorted by size descending, then id.
    pub topics: Vec<Topic>,
    /// Columns follow `topics`.
    pub doc_topic: Vec<Vec<f64>>,
    /// Current topic per document; `-1` for noise.
    pub labels: Vec<i64>,
    pub merge_history: Vec<Merge>,
    pub classes: Vec<TopicClass>,
    pub ctfidf: CTfIdfModel,
    pub top_k: usize,
    pub l1_normalize: bool,
}

impl TopicModel {
    pub fn topic_ids(&self) -> Vec<i64> {
        self.topics.iter().map(|t| t.id).collect()
    }

    pub fn topic(&self, id: i64) -> Option<&Topic> {
        self.topics.iter().find(|t| t.id == id)
    }

    /// Top-word lists in topic order, as used for coherence and diversity.
    pub fn word_lists(&self) -> Vec<Vec<String>> {
        self.topics
            .iter()
            .map(|t| t.top_words.iter().map(|w| w.0.clone()).collect())
            .collect()
    }
}

fn mean_vector(vectors: &[Vec<f64>], members: &[usize]) -> Vec<f64> {
    let d = vectors.first().map_or(0, Vec::len);
    let mut c = vec![0.0; d];
    for &m in members {
        for (x, v) in c.iter_mut().zip(&vectors[m]) {
            *x += v;
        }
    }
    let n = members.len().max(1) as f64;
    c.iter_mut().for_each(|x| *x /= n);
    c
}

fn assemble(
    classes: Vec<TopicClass>,
    centroids: BTreeMap<i64, Vec<f64>>,
    labels: Vec<i64>,
    merge_history: Vec<Merge>,
    vectors: &[Vec<f64>],
    top_k: usize,
    l1_normalize: bool,
) -> TopicModel {
    let ctfidf = compute_ctfidf(&classes, l1_normalize);
    let mut topics: Vec<Topic> = classes
        .iter()
        .map(|c| Topic {
            id: c.class_id,
            size: c.members.len(),
            top_words: top_words(&ctfidf, c.class_id, top_k).expect("class is in the model"),
            centroid: centroids[&c.class_id].clone(),
        })
        .collect();
    topics.sort_by(|a, b| b.size.cmp(&a.size).then(a.id.cmp(&b.id)));
    let cents: Vec<Vec<f64>> = topics.iter().map(|t| t.centroid.clone()).collect();
    TopicModel {
        doc_topic: doc_topic_distribution(vectors, &cents),
        topics,
        labels,
        merge_history,
        classes,
        ctfidf,
        top_k,
        l1_normalize,
    }
}

/// Topics straight from cluster labels. `vectors` (document embeddings) give
/// the centroids and the document-topic distribution.
pub fn build_topic_model(
    docs: &[TokenDoc],
    labels: &[i64],
    vectors: &[Vec<f64>],
    top_k: usize,
    l1_normalize: bool,
) -> Result<TopicModel, TopicError> {
    if vectors.len() != docs.len() {
        return Err(TopicError::Misaligned {
            docs: docs.len(),
            labels: vectors.len(),
        });
    }
    let classes = aggregate_classes(docs, labels)?;
    let centroids = classes
        .iter()
        .map(|c| (c.class_id, mean_vector(vectors, &c.members)))
        .collect();
    Ok(assemble(classes, centroids, labels.to_vec(), Vec::new(), vectors, top_k, l1_normalize))
}

/// Repeatedly merges the smallest topic (ties: lower id) into the topic with
/// the most similar c-TF-IDF row (ties: lower id) until `target` remain.
/// Weights, centroids, and distributions are recomputed after every merge.
pub fn reduce_topics(model: &TopicModel, target: usize, vectors: &[Vec<f64>]) -> Result<TopicModel, TopicError> {
    let current = model.classes.len();
    if target == 0 || target > current {
        return Err(TopicError::TargetTooLarge { target, current });
    }
    let mut classes = model.classes.clone();
    let mut centroids: BTreeMap<i64, Vec<f64>> =
        model.topics.iter().map(|t| (t.id, t.centroid.clone())).collect();
    let mut labels = model.labels.clone();
    let mut history = model.merge_history.clone();
    let mut ctfidf = model.ctfidf.clone();
    while classes.len() > target {
        let src = (0..classes.len())
            .min_by_key(|&i| (classes[i].members.len(), classes[i].class_id))
            .expect("at least two classes");
        let src_row = &ctfidf.weights[src];
        let dst = (0..classes.len())
            .filter(|&i| i != src)
            .map(|i| (i, cosine_or_zero(src_row, &ctfidf.weights[i])))
            .fold(None::<(usize, f64)>, |best, (i, s)| match best {
                Some((bi, bs)) if bs > s || (bs == s && classes[bi].class_id < classes[i].class_id) => Some((bi, bs)),
                _ => Some((i, s)),
            })
            .expect("at least two classes")
            .0;
        let source = classes[src].clone();
        let (sid, tid) = (source.class_id, classes[dst].class_id);
        let (ns, nt) = (source.members.len() as f64, classes[dst].members.len() as f64);
        let merged_centroid: Vec<f64> = centroids[&tid]
            .iter()
            .zip(&centroids[&sid])
            .map(|(t, s)| (t * nt + s * ns) / (nt + ns))
            .collect();
        let t = &mut classes[dst];
        t.members.extend(&source.members);
        t.members.sort_unstable();
        for (term, n) in &source.term_counts {
            *t.term_counts.entry(term.clone()).or_default() += n;
        }
        t.total_words += source.total_words;
        classes.remove(src);
        centroids.remove(&sid);
        centroids.insert(tid, merged_centroid);
        labels.iter_mut().filter(|l| **l == sid).for_each(|l| *l = tid);
        history.push(Merge { source: sid, target: tid });
        ctfidf = compute_ctfidf(&classes, model.l1_normalize);
    }
    Ok(assemble(classes, centroids, labels, history, vectors, model.top_k, model.l1_normalize))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicWord {
    pub word: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicTableEntry {
    pub id: i64,
    pub size: usize,
    pub top_words: Vec<TopicWord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocTopicRow {
    pub doc_id: String,
    pub topic: i64,
    pub probabilities: Vec<f64>,
}

pub fn topic_table(model: &TopicModel) -> Vec<TopicTableEntry> {
    model
        .topics
        .iter()
        .map(|t| TopicTableEntry {
            id: t.id,
            size: t.size,
            top_words: t
                .top_words
                .iter()
                .map(|(w, x)| TopicWord {
                    word: w.clone(),
                    weight: *x,
                })
                .collect(),
        })
        .collect()
}

pub fn write_topic_table(path: &Path, model: &TopicModel) -> Result<(), TopicError> {
    Ok(io::write_json(path, &topic_table(model))?)
}

/// One JSON line per document; probabilities follow the topic table order.
pub fn write_doc_topics(path: &Path, doc_ids: &[String], model: &TopicModel) -> Result<(), TopicError> {
    let rows: Vec<DocTopicRow> = doc_ids
        .iter()
        .zip(&model.doc_topic)
        .zip(&model.labels)
        .map(|((id, p), &topic)| DocTopicRow {
            doc_id: id.clone(),
            topic,
            probabilities: p.clone(),
        })
        .collect();
    Ok(io::write_jsonl(path, &rows)?)
}
