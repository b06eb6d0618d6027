//! Rating determinants: binarized ratings, seeded corpus splits, a random
//! forest over document-topic probabilities, evaluation, and exact tree
//! Shapley attribution.

mod forest;
mod metrics;
mod shap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use forest::{
    load_forest, save_forest, train_forest, Forest, ForestDocument, ForestParams, MaxFeatures, Node, Tree,
    FOREST_FORMAT_VERSION,
};
pub use metrics::{concordance_auc, evaluate, evaluate_scores, roc_curve, trapezoid_auc, EvalReport, RocPoint};
pub use shap::{
    explain, rank_determinants, tree_shap, write_beeswarm_csv, Determinant, ShapReport,
};

pub const DEFAULT_SPLIT: (f64, f64, f64) = (0.8, 0.1, 0.1);

#[derive(Debug, thiserror::Error)]
pub enum RatingError {
    #[error("rating {0} is outside 1..=5")]
    OutOfRange(u8),
    #[error("split fractions {0:?} must be positive and sum to 1")]
    BadFractions((f64, f64, f64)),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error(transparent)]
    Io(#[from] crate::io::IoError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Ratings 1 to 3 are low (0), 4 and 5 are high (1).
pub fn binarize_rating(rating: u8) -> Result<u8, RatingError> {
    match rating {
        1..=3 => Ok(0),
        4..=5 => Ok(1),
        r => Err(RatingError::OutOfRange(r)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub doc_id: String,
    pub features: Vec<f64>,
    pub label: u8,
    #[serde(default)]
    pub empty_after_preprocess: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub train: Vec<LabeledInstance>,
    pub validation: Vec<LabeledInstance>,
    pub test: Vec<LabeledInstance>,
    /// Documents dropped from (train, validation, test) for having no tokens.
    pub dropped_empty: [usize; 3],
}

fn partition_sizes(n: usize, f: (f64, f64, f64)) -> (usize, usize) {
    let train = ((n as f64 * f.0).round() as usize).min(n);
    let val = ((n as f64 * f.1).round() as usize).min(n - train);
    (train, val)
}

/// Seeded shuffle then partition, per class when `stratify` is set. Each split
/// keeps corpus order. Documents empty after preprocessing are dropped
/// afterwards and counted.
pub fn split_corpus(
    instances: &[LabeledInstance],
    fractions: (f64, f64, f64),
    seed: u64,
    stratify: bool,
) -> Result<CorpusSplit, RatingError> {
    let (a, b, c) = fractions;
    if !(a > 0.0 && b > 0.0 && c > 0.0) || (a + b + c - 1.0).abs() > 1e-9 {
        return Err(RatingError::BadFractions(fractions));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups: Vec<Vec<usize>> = if stratify {
        (0..=1u8)
            .map(|y| (0..instances.len()).filter(|&i| instances[i].label == y).collect())
            .collect()
    } else {
        vec![(0..instances.len()).collect()]
    };
    let mut parts: [Vec<usize>; 3] = Default::default();
    for mut g in groups {
        g.shuffle(&mut rng);
        let (tr, va) = partition_sizes(g.len(), fractions);
        parts[0].extend(&g[..tr]);
        parts[1].extend(&g[tr..tr + va]);
        parts[2].extend(&g[tr + va..]);
    }
    let mut split = CorpusSplit::default();
    for (k, idx) in parts.iter_mut().enumerate() {
        idx.sort_unstable();
        let (kept, empty): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| !instances[i].empty_after_preprocess);
        if !empty.is_empty() {
            log::info!("excluding {} empty document(s) from split {k}", empty.len());
        }
        split.dropped_empty[k] = empty.len();
        let v: Vec<LabeledInstance> = kept.iter().map(|&i| instances[i].clone()).collect();
        match k {
            0 => split.train = v,
            1 => split.validation = v,
            _ => split.test = v,
        }
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(n: usize, ones: usize) -> Vec<LabeledInstance> {
        (0..n)
            .map(|i| LabeledInstance {
                doc_id: format!("d{i}"),
                features: vec![i as f64],
                label: u8::from(i < ones),
                empty_after_preprocess: false,
            })
            .collect()
    }

    #[test]
    fn binarization() {
        let got: Vec<u8> = (1..=5).map(|r| binarize_rating(r).unwrap()).collect();
        assert_eq!(got, [0, 0, 0, 1, 1]);
        assert!(matches!(binarize_rating(6), Err(RatingError::OutOfRange(6))));
        assert!(matches!(binarize_rating(0), Err(RatingError::OutOfRange(0))));
    }

    #[test]
    fn split_sizes_and_disjointness() {
        let s = split_corpus(&inst(100, 50), DEFAULT_SPLIT, 1, false).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (80, 10, 10));
        let mut ids: Vec<&str> = s.train.iter().chain(&s.validation).chain(&s.test).map(|i| i.doc_id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 100);
        assert_eq!(split_corpus(&inst(100, 50), DEFAULT_SPLIT, 1, false).unwrap(), s);
    }

    #[test]
    fn paper_fractions_rejected() {
        assert!(matches!(
            split_corpus(&inst(10, 5), (0.8, 0.2, 0.2), 1, false),
            Err(RatingError::BadFractions(_))
        ));
    }

    #[test]
    fn stratified_ratios() {
        let s = split_corpus(&inst(100, 40), DEFAULT_SPLIT, 9, true).unwrap();
        for (part, n) in [(&s.train, 80.0), (&s.validation, 10.0), (&s.test, 10.0)] {
            let ones = part.iter().filter(|i| i.label == 1).count() as f64;
            assert!((ones - 0.4 * n).abs() <= 1.0, "{ones} of {n}");
        }
    }

    #[test]
    fn empty_documents_are_dropped_after_partition() {
        let mut data = inst(20, 10);
        data[3].empty_after_preprocess = true;
        let s = split_corpus(&data, DEFAULT_SPLIT, 4, false).unwrap();
        assert_eq!(s.dropped_empty.iter().sum::<usize>(), 1);
        assert_eq!(s.train.len() + s.validation.len() + s.test.len(), 19);
    }
}
