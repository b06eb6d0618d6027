//! Topic-to-dimension mapping against an evaluation framework, per-dimension
//! review totals, and annotator agreement.
//!
//! Mapping files are plain text, one topic per line:
//!
//! ```text
//! # topic_id<TAB>dimension_id<TAB>label
//! 0	4	sync and pairing problems
//! 3	3	doctor reports
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::io::{self, IoError};
use crate::topics::TopicTableEntry;

const BUNDLED_DIMENSIONS: &str = include_str!("../data/dimensions.txt");
pub const TEMPLATE_PLACEHOLDER: &str = "TODO";

#[derive(Debug, thiserror::Error)]
pub enum FrameworkError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("topic {0} is assigned more than once")]
    DuplicateAssignment(i64),
    #[error("topic {0} has no dimension")]
    UnmappedTopic(i64),
    #[error("topic {0} is not in the model")]
    UnknownTopic(i64),
    #[error("topic {topic} maps to unknown dimension {dimension}")]
    UnknownDimension { topic: i64, dimension: u32 },
    #[error("annotators mapped different topic sets")]
    TopicSetMismatch,
    #[error(transparent)]
    Io(#[from] IoError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameworkDimension {
    pub id: u32,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Framework {
    pub dimensions: Vec<FrameworkDimension>,
}

impl Framework {
    /// The ten quality dimensions for health apps.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_DIMENSIONS).expect("bundled dimensions parse")
    }

    /// `id<TAB>name` lines; ids must be unique.
    pub fn parse(text: &str) -> Result<Self, FrameworkError> {
        let mut dimensions: Vec<FrameworkDimension> = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| FrameworkError::Parse { line: n + 1, message };
            let (id, name) = line.split_once('\t').ok_or_else(|| err("expected id<TAB>name".into()))?;
            let id: u32 = id.trim().parse().map_err(|_| err(format!("bad dimension id {id:?}")))?;
            if dimensions.iter().any(|d| d.id == id) {
                return Err(err(format!("dimension {id} defined twice")));
            }
            dimensions.push(FrameworkDimension { id, name: name.trim().to_string() });
        }
        Ok(Self { dimensions })
    }

    pub fn get(&self, id: u32) -> Option<&FrameworkDimension> {
        self.dimensions.iter().find(|d| d.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingEntry {
    pub topic_id: i64,
    pub dimension_id: u32,
    pub label: String,
}

/// Mapping as written by one annotator, before validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicMapping {
    pub annotator_id: String,
    pub entries: Vec<MappingEntry>,
    pub unmapped_allowed: bool,
}

impl TopicMapping {
    pub fn parse(text: &str, annotator_id: &str) -> Result<Self, FrameworkError> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let err = |message: String| FrameworkError::Parse { line: n + 1, message };
            let mut parts = trimmed.splitn(3, '\t');
            let topic = parts.next().unwrap_or_default().trim();
            let dim = parts
                .next()
                .ok_or_else(|| err("expected topic_id<TAB>dimension_id<TAB>label".into()))?
                .trim();
            let label = parts.next().unwrap_or_default().trim();
            let topic_id: i64 = topic.parse().map_err(|_| err(format!("bad topic id {topic:?}")))?;
            let dimension_id: u32 = dim.parse().map_err(|_| {
                err(if dim == TEMPLATE_PLACEHOLDER {
                    format!("topic {topic_id} still has the template placeholder")
                } else {
                    format!("bad dimension id {dim:?}")
                })
            })?;
            entries.push(MappingEntry {
                topic_id,
                dimension_id,
                label: label.to_string(),
            });
        }
        Ok(Self {
            annotator_id: annotator_id.to_string(),
            entries,
            unmapped_allowed: false,
        })
    }

    pub fn load(path: &Path, annotator_id: &str) -> Result<Self, FrameworkError> {
        Self::parse(&io::read_text(path)?, annotator_id)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# topic_id\tdimension_id\tlabel\n");
        for e in &self.entries {
            s.push_str(&format!("{}\t{}\t{}\n", e.topic_id, e.dimension_id, e.label));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidatedMapping {
    pub annotator_id: String,
    /// topic id → (dimension id, label)
    pub assignments: BTreeMap<i64, (u32, String)>,
}

impl ValidatedMapping {
    pub fn dimension_of(&self, topic: i64) -> Option<u32> {
        self.assignments.get(&topic).map(|a| a.0)
    }
}

/// Checks that every model topic has exactly one known dimension.
pub fn validate_mapping(
    mapping: &TopicMapping,
    topic_ids: &[i64],
    framework: &Framework,
) -> Result<ValidatedMapping, FrameworkError> {
    let known: BTreeSet<i64> = topic_ids.iter().copied().collect();
    let mut assignments = BTreeMap::new();
    for e in &mapping.entries {
        if !known.contains(&e.topic_id) {
            return Err(FrameworkError::UnknownTopic(e.topic_id));
        }
        if framework.get(e.dimension_id).is_none() {
            return Err(FrameworkError::UnknownDimension {
                topic: e.topic_id,
                dimension: e.dimension_id,
            });
        }
        if assignments
            .insert(e.topic_id, (e.dimension_id, e.label.clone()))
            .is_some()
        {
            return Err(FrameworkError::DuplicateAssignment(e.topic_id));
        }
    }
    if !mapping.unmapped_allowed {
        if let Some(&t) = known.iter().find(|t| !assignments.contains_key(t)) {
            return Err(FrameworkError::UnmappedTopic(t));
        }
    }
    Ok(ValidatedMapping {
        annotator_id: mapping.annotator_id.clone(),
        assignments,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum CountMode {
    /// Each document counts for its most probable topic (ties: first column).
    #[default]
    Argmax,
    /// Each document counts for its cluster label; noise is `-1`.
    Membership,
}

/// Reviews per topic. `topic_ids` names the columns of `doc_topic`.
pub fn topic_review_counts(
    mode: CountMode,
    topic_ids: &[i64],
    doc_topic: &[Vec<f64>],
    labels: &[i64],
) -> BTreeMap<i64, usize> {
    let mut counts = BTreeMap::new();
    match mode {
        CountMode::Argmax => {
            for row in doc_topic {
                let best = row
                    .iter()
                    .enumerate()
                    .fold(0, |b, (j, &x)| if x > row[b] { j } else { b });
                *counts.entry(topic_ids[best]).or_default() += 1;
            }
        }
        CountMode::Membership => {
            for &l in labels {
                *counts.entry(l).or_default() += 1;
            }
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionTotal {
    pub dimension_id: u32,
    pub name: String,
    pub total: usize,
    pub topics: Vec<i64>,
}

/// Totals per dimension, largest first (ties: lower id). Every dimension is
/// reported; counts for unmapped topics, noise included, are ignored.
pub fn aggregate_dimensions(
    mapping: &ValidatedMapping,
    counts: &BTreeMap<i64, usize>,
    framework: &Framework,
) -> Vec<DimensionTotal> {
    let mut totals: Vec<DimensionTotal> = framework
        .dimensions
        .iter()
        .map(|d| DimensionTotal {
            dimension_id: d.id,
            name: d.name.clone(),
            total: 0,
            topics: Vec::new(),
        })
        .collect();
    for (&topic, &(dim, _)) in &mapping.assignments {
        let slot = totals
            .iter_mut()
            .find(|t| t.dimension_id == dim)
            .expect("validated dimension");
        slot.topics.push(topic);
        slot.total += counts.get(&topic).copied().unwrap_or(0);
    }
    totals.sort_by(|a, b| b.total.cmp(&a.total).then(a.dimension_id.cmp(&b.dimension_id)));
    totals
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conflict {
    pub topic_id: i64,
    pub dimension_a: u32,
    pub dimension_b: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub rate: f64,
    pub conflicts: Vec<Conflict>,
}

/// Raw agreement between two annotators over the same topic set.
pub fn compare_annotators(a: &ValidatedMapping, b: &ValidatedMapping) -> Result<Agreement, FrameworkError> {
    if !a.assignments.keys().eq(b.assignments.keys()) {
        return Err(FrameworkError::TopicSetMismatch);
    }
    let conflicts: Vec<Conflict> = a
        .assignments
        .iter()
        .zip(&b.assignments)
        .filter(|((_, x), (_, y))| x.0 != y.0)
        .map(|((&t, x), (_, y))| Conflict {
            topic_id: t,
            dimension_a: x.0,
            dimension_b: y.0,
        })
        .collect();
    let n = a.assignments.len();
    let rate = if n == 0 { 1.0 } else { (n - conflicts.len()) as f64 / n as f64 };
    Ok(Agreement { rate, conflicts })
}

/// A mapping file with every topic listed, a placeholder dimension, and the
/// topic's top words as a starting label. The framework is listed in comments.
pub fn mapping_template(topics: &[TopicTableEntry], framework: &Framework) -> String {
    let mut s = String::from("# Replace each TODO with a dimension id, then rerun.\n#\n");
    for d in &framework.dimensions {
        s.push_str(&format!("#   {}\t{}\n", d.id, d.name));
    }
    s.push_str("#\n# topic_id\tdimension_id\tlabel\n");
    for t in topics {
        let words: Vec<&str> = t.top_words.iter().take(4).map(|w| w.word.as_str()).collect();
        s.push_str(&format!("{}\t{TEMPLATE_PLACEHOLDER}\t{}\n", t.id, words.join(" ")));
    }
    s
}

pub fn write_dimensions(path: &Path, totals: &[DimensionTotal]) -> Result<(), FrameworkError> {
    Ok(io::write_json(path, totals)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mapping(pairs: &[(i64, u32)]) -> TopicMapping {
        TopicMapping {
            annotator_id: "a".into(),
            entries: pairs
                .iter()
                .map(|&(t, d)| MappingEntry { topic_id: t, dimension_id: d, label: String::new() })
                .collect(),
            unmapped_allowed: false,
        }
    }

    #[test]
    fn bundled_framework_has_ten_dimensions() {
        let f = Framework::bundled();
        assert_eq!(f.dimensions.len(), 10);
        assert_eq!(f.get(3).unwrap().name, "Content/information validity");
        assert_eq!(f.get(10).unwrap().name, "Accessibility");
    }

    #[test]
    fn parse_mapping_file() {
        let m = TopicMapping::parse("# header\n0\t3\tbmi monitoring\n\n5\t3\tnotes\n", "x").unwrap();
        assert_eq!(m.entries.len(), 2);
        assert_eq!(m.entries[1], MappingEntry { topic_id: 5, dimension_id: 3, label: "notes".into() });
        assert_eq!(TopicMapping::parse(&m.to_text(), "x").unwrap(), m);
        let e = TopicMapping::parse("0\tTODO\tx\n", "x").unwrap_err();
        assert!(e.to_string().contains("placeholder"));
    }

    #[test]
    fn validation_errors() {
        let f = Framework::bundled();
        assert!(matches!(
            validate_mapping(&mapping(&[(3, 1), (3, 2)]), &[3], &f),
            Err(FrameworkError::DuplicateAssignment(3))
        ));
        assert!(matches!(
            validate_mapping(&mapping(&[(99, 1)]), &[3], &f),
            Err(FrameworkError::UnknownTopic(99))
        ));
        assert!(matches!(
            validate_mapping(&mapping(&[(3, 1)]), &[3, 4], &f),
            Err(FrameworkError::UnmappedTopic(4))
        ));
        assert!(matches!(
            validate_mapping(&mapping(&[(3, 11)]), &[3], &f),
            Err(FrameworkError::UnknownDimension { .. })
        ));
        let pairs: Vec<(i64, u32)> = (0..30).map(|t| (t, (t % 10 + 1) as u32)).collect();
        let ids: Vec<i64> = (0..30).collect();
        assert_eq!(validate_mapping(&mapping(&pairs), &ids, &f).unwrap().assignments.len(), 30);
    }

    #[test]
    fn content_validity_total() {
        let f = Framework::bundled();
        let m = validate_mapping(&mapping(&[(0, 3), (5, 3), (1, 4)]), &[0, 1, 5], &f).unwrap();
        let counts: BTreeMap<i64, usize> = [(0, 1078), (5, 420), (1, 300), (-1, 999)].into_iter().collect();
        let totals = aggregate_dimensions(&m, &counts, &f);
        assert_eq!(totals.len(), 10);
        assert_eq!((totals[0].dimension_id, totals[0].total), (3, 1498));
        assert_eq!(totals[1].total, 300);
        assert!(totals[2..].iter().all(|t| t.total == 0 && t.topics.is_empty()));
        assert_eq!(totals.iter().map(|t| t.total).sum::<usize>(), 1798);
    }

    #[test]
    fn agreement() {
        let f = Framework::bundled();
        let ids: Vec<i64> = (0..30).collect();
        let a: Vec<(i64, u32)> = ids.iter().map(|&t| (t, 1 + (t % 10) as u32)).collect();
        let mut b = a.clone();
        b[7].1 = 9;
        let va = validate_mapping(&mapping(&a), &ids, &f).unwrap();
        let vb = validate_mapping(&mapping(&b), &ids, &f).unwrap();
        let same = compare_annotators(&va, &va).unwrap();
        assert_eq!(same.rate, 1.0);
        assert!(same.conflicts.is_empty());
        let r = compare_annotators(&va, &vb).unwrap();
        assert!((r.rate - 29.0 / 30.0).abs() < 1e-12);
        assert_eq!(r.conflicts, [Conflict { topic_id: 7, dimension_a: 8, dimension_b: 9 }]);
        let vc = validate_mapping(&mapping(&a[..29]), &ids[..29], &f).unwrap();
        assert!(matches!(compare_annotators(&va, &vc), Err(FrameworkError::TopicSetMismatch)));
    }

    #[test]
    fn review_counts_by_mode() {
        let dt = vec![vec![0.6, 0.4], vec![0.5, 0.5], vec![0.1, 0.9]];
        let c = topic_review_counts(CountMode::Argmax, &[4, 2], &dt, &[]);
        assert_eq!(c, [(4, 2), (2, 1)].into_iter().collect());
        let c = topic_review_counts(CountMode::Membership, &[4, 2], &dt, &[4, -1, 2]);
        assert_eq!(c, [(-1, 1), (2, 1), (4, 1)].into_iter().collect());
    }
}
