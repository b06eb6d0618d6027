use serde::{Deserialize, Serialize};

use super::{Forest, LabeledInstance, RatingError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Instances scoring at or above the threshold are predicted positive.
    /// The infinite sentinels are written as the strings `"inf"` and `"-inf"`.
    #[serde(with = "threshold_repr")]
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

mod threshold_repr {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &f64, s: S) -> Result<S::Ok, S::Error> {
        match *t {
            f64::INFINITY => s.serialize_str("inf"),
            f64::NEG_INFINITY => s.serialize_str("-inf"),
            x => s.serialize_f64(x),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("bad threshold {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub accuracy: f64,
    pub roc: Vec<RocPoint>,
    /// `None` when the test set holds a single class.
    pub auc: Option<f64>,
}

impl EvalReport {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

/// ROC over every distinct score plus the two infinite sentinels, highest
/// threshold first.
pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Vec<RocPoint> {
    let pos = labels.iter().filter(|&&y| y == 1).count() as f64;
    let neg = labels.len() as f64 - pos;
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    thresholds.insert(0, f64::INFINITY);
    thresholds.push(f64::NEG_INFINITY);
    thresholds
        .into_iter()
        .map(|t| {
            let (mut tp, mut fp) = (0.0, 0.0);
            for (&s, &y) in scores.iter().zip(labels) {
                if s >= t {
                    if y == 1 {
                        tp += 1.0;
                    } else {
                        fp += 1.0;
                    }
                }
            }
            RocPoint {
                threshold: t,
                fpr: if neg > 0.0 { fp / neg } else { 0.0 },
                tpr: if pos > 0.0 { tp / pos } else { 0.0 },
            }
        })
        .collect()
}

/// Area under the ROC points by the trapezoidal rule.
pub fn trapezoid_auc(roc: &[RocPoint]) -> f64 {
    roc.windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}

/// Fraction of (positive, negative) pairs ranked correctly, ties counting ½.
pub fn concordance_auc(scores: &[f64], labels: &[u8]) -> Option<f64> {
    let (mut good, mut pairs) = (0.0, 0.0);
    for (i, &yi) in labels.iter().enumerate() {
        if yi != 1 {
            continue;
        }
        for (j, &yj) in labels.iter().enumerate() {
            if yj != 0 {
                continue;
            }
            pairs += 1.0;
            good += match scores[i].total_cmp(&scores[j]) {
                std::cmp::Ordering::Greater => 1.0,
                std::cmp::Ordering::Equal => 0.5,
                std::cmp::Ordering::Less => 0.0,
            };
        }
    }
    (pairs > 0.0).then(|| good / pairs)
}

/// Confusion matrix, accuracy, ROC, and AUC from hard predictions and scores.
pub fn evaluate_scores(labels: &[u8], predicted: &[u8], scores: &[f64]) -> Result<EvalReport, RatingError> {
    if labels.is_empty() {
        return Err(RatingError::EmptyTestSet);
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for (&y, &p) in labels.iter().zip(predicted) {
        match (y, p) {
            (1, 1) => tp += 1,
            (0, 0) => tn += 1,
            (0, _) => fp += 1,
            _ => fn_ += 1,
        }
    }
    let both = labels.contains(&0) && labels.contains(&1);
    let roc = roc_curve(scores, labels);
    let auc = both.then(|| trapezoid_auc(&roc));
    Ok(EvalReport {
        tp,
        tn,
        fp,
        fn_,
        accuracy: (tp + tn) as f64 / labels.len() as f64,
        roc,
        auc,
    })
}

pub fn evaluate(forest: &Forest, test: &[LabeledInstance]) -> Result<EvalReport, RatingError> {
    if test.is_empty() {
        return Err(RatingError::EmptyTestSet);
    }
    let mut predicted = Vec::with_capacity(test.len());
    let mut scores = Vec::with_capacity(test.len());
    for i in test {
        let (c, p) = forest.predict(&i.features)?;
        predicted.push(c);
        scores.push(p);
    }
    let labels: Vec<u8> = test.iter().map(|i| i.label).collect();
    evaluate_scores(&labels, &predicted, &scores)
}
