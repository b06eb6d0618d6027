//! Topic quality: NPMI coherence over document co-occurrence, topic diversity,
//! and the topic-count selection rule.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::io::{self, IoError};
use crate::preprocess::TokenDoc;
use crate::topics::{reduce_topics, TopicError, TopicModel};

pub const DEFAULT_DIVERSITY_FLOOR: f64 = 0.5;
pub const DEFAULT_COUNT_BOUNDS: (usize, usize) = (10, 50);

#[derive(Debug, thiserror::Error)]
pub enum QualityError {
    #[error("coherence needs at least 2 words per topic")]
    InsufficientWords,
    #[error("no sweep point satisfies the bounds and diversity floor")]
    NoFeasiblePoint,
    #[error(transparent)]
    Topic(#[from] TopicError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Document occurrence lists for every term of a reference corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CooccurrenceStats {
    pub n_docs: usize,
    postings: BTreeMap<String, Vec<usize>>,
}

impl CooccurrenceStats {
    pub fn from_docs(docs: &[TokenDoc]) -> Self {
        let mut postings: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, d) in docs.iter().enumerate() {
            for t in d.tokens.iter().collect::<BTreeSet<_>>() {
                postings.entry(t.clone()).or_default().push(i);
            }
        }
        Self {
            n_docs: docs.len(),
            postings,
        }
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn joint_frequency(&self, a: &str, b: &str) -> usize {
        let (Some(x), Some(y)) = (self.postings.get(a), self.postings.get(b)) else {
            return 0;
        };
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < x.len() && j < y.len() {
            match x[i].cmp(&y[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }

    /// Smoothing probability used for zero counts, `1 / (10 N)`.
    pub fn epsilon(&self) -> f64 {
        1.0 / (10.0 * self.n_docs.max(1) as f64)
    }
}

/// NPMI from probabilities, clamped to `[-1, 1]`. A joint probability of 1
/// is perfect association.
pub fn npmi_from_probabilities(p_i: f64, p_j: f64, p_ij: f64) -> f64 {
    if p_ij >= 1.0 {
        return 1.0;
    }
    ((p_ij / (p_i * p_j)).ln() / -p_ij.ln()).clamp(-1.0, 1.0)
}

/// NPMI of a word pair; zero counts are replaced by the smoothing epsilon.
pub fn npmi(stats: &CooccurrenceStats, a: &str, b: &str) -> f64 {
    let n = stats.n_docs.max(1) as f64;
    let eps = stats.epsilon();
    let p = |df: usize| if df == 0 { eps } else { df as f64 / n };
    npmi_from_probabilities(
        p(stats.document_frequency(a)),
        p(stats.document_frequency(b)),
        p(stats.joint_frequency(a, b)),
    )
}

/// Mean pairwise NPMI over each topic's first `k` words, averaged over topics.
pub fn npmi_coherence(topics: &[Vec<String>], stats: &CooccurrenceStats, k: usize) -> Result<f64, QualityError> {
    if k < 2 || topics.is_empty() {
        return Err(QualityError::InsufficientWords);
    }
    let mut total = 0.0;
    for words in topics {
        let w = &words[..words.len().min(k)];
        if w.len() < 2 {
            return Err(QualityError::InsufficientWords);
        }
        let mut sum = 0.0;
        let mut pairs = 0;
        for i in 0..w.len() {
            for j in i + 1..w.len() {
                sum += npmi(stats, &w[i], &w[j]);
                pairs += 1;
            }
        }
        total += sum / pairs as f64;
    }
    Ok(total / topics.len() as f64)
}

/// Distinct words across all top-`k` lists over the number of listed words.
pub fn topic_diversity(topics: &[Vec<String>], k: usize) -> Result<f64, QualityError> {
    let lists: Vec<&[String]> = topics.iter().map(|w| &w[..w.len().min(k)]).collect();
    let listed: usize = lists.iter().map(|w| w.len()).sum();
    if listed == 0 {
        return Err(QualityError::InsufficientWords);
    }
    let unique: BTreeSet<&String> = lists.iter().flat_map(|w| w.iter()).collect();
    Ok(unique.len() as f64 / listed as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualitySweepPoint {
    pub topic_count: usize,
    pub coherence: f64,
    pub diversity: f64,
}

/// Highest coherence among points inside `bounds` with diversity at or above
/// the floor; ties go to the smaller count.
pub fn select_topic_count(
    sweep: &[QualitySweepPoint],
    diversity_floor: f64,
    bounds: (usize, usize),
) -> Result<usize, QualityError> {
    sweep
        .iter()
        .filter(|p| p.topic_count >= bounds.0 && p.topic_count <= bounds.1 && p.diversity >= diversity_floor)
        .max_by(|a, b| {
            a.coherence
                .total_cmp(&b.coherence)
                .then(b.topic_count.cmp(&a.topic_count))
        })
        .map(|p| p.topic_count)
        .ok_or(QualityError::NoFeasiblePoint)
}

/// Scores the model reduced to every count in `bounds` that it can reach.
pub fn sweep_topic_counts(
    model: &TopicModel,
    bounds: (usize, usize),
    stats: &CooccurrenceStats,
    k: usize,
) -> Result<Vec<QualitySweepPoint>, QualityError> {
    let current = model.topics.len();
    let counts: Vec<usize> = (bounds.0.max(1)..=bounds.1.min(current)).collect();
    counts
        .par_iter()
        .map(|&c| {
            let reduced = reduce_topics(model, c, &[])?;
            let words = reduced.word_lists();
            Ok(QualitySweepPoint {
                topic_count: c,
                coherence: npmi_coherence(&words, stats, k)?,
                diversity: topic_diversity(&words, k)?,
            })
        })
        .collect()
}

pub fn write_sweep_csv(path: &Path, sweep: &[QualitySweepPoint]) -> Result<(), QualityError> {
    io::ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    for p in sweep {
        w.serialize(p)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<QualitySweepPoint>, QualityError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlot {
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<QualitySweepPoint>,
    pub selected: Option<usize>,
}

/// Coherence on the x axis against diversity on the y axis.
pub fn sweep_plot(sweep: &[QualitySweepPoint], selected: Option<usize>) -> SweepPlot {
    SweepPlot {
        x_label: "NPMI coherence".into(),
        y_label: "topic diversity".into(),
        points: sweep.to_vec(),
        selected,
    }
}
