use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::stages::{BEESWARM, DETERMINANTS, DIMENSIONS, EVAL, QUALITY, SWEEP, TOPICS};
use super::{PipelineError, QualitySelection, Stage};
use crate::framework::DimensionTotal;
use crate::io;
use crate::rating::{Determinant, EvalReport};

pub const REPORT_DIR: &str = "report";

/// Files of the report bundle, relative to [`REPORT_DIR`].
pub const REPORT_FILES: [&str; 7] = [
    "topics.json",
    "sweep.csv",
    "dimensions.json",
    "eval.json",
    "shap_beeswarm.csv",
    "summary.json",
    "summary.md",
];

/// Artifacts the report is assembled from, in the work directory.
pub(super) const REQUIRED: [&str; 7] = [TOPICS, SWEEP, DIMENSIONS, EVAL, BEESWARM, DETERMINANTS, QUALITY];

/// Determinants split by the sign of their effect: a feature pushes toward
/// high ratings when its attribution is larger above its median than at or
/// below it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSummary {
    pub high_rating: Vec<Determinant>,
    pub low_rating: Vec<Determinant>,
}

fn direction(d: &Determinant) -> f64 {
    d.mean_phi_above_median.unwrap_or(0.0) - d.mean_phi_at_or_below_median.unwrap_or(0.0)
}

impl DirectionSummary {
    /// `ranked` must already be ordered by mean |phi|.
    pub fn from_ranked(ranked: &[Determinant], top_n: usize) -> Self {
        let pick = |positive: bool| {
            ranked
                .iter()
                .filter(|d| if positive { direction(d) > 0.0 } else { direction(d) < 0.0 })
                .take(top_n)
                .cloned()
                .collect()
        };
        Self {
            high_rating: pick(true),
            low_rating: pick(false),
        }
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    topics: usize,
    quality: &'a QualitySelection,
    test_size: usize,
    accuracy: f64,
    auc: Option<f64>,
    ranking: Vec<&'a str>,
    determinants: &'a DirectionSummary,
}

fn fmt_auc(auc: Option<f64>) -> String {
    auc.map_or_else(|| "n/a (one class in the test set)".into(), |a| format!("{a:.3}"))
}

fn render(
    quality: &QualitySelection,
    eval: &EvalReport,
    ranked: &[Determinant],
    summary: &DirectionSummary,
    dims: &[DimensionTotal],
) -> String {
    let mut s = String::from("# Review insight report\n\n");
    let _ = writeln!(
        s,
        "Topics: {} (from {} clusters{}), NPMI coherence {:.4}, diversity {:.3}.\n",
        quality.selected_topics,
        quality.initial_topics,
        if quality.forced { ", count fixed by config" } else { "" },
        quality.coherence,
        quality.diversity
    );
    let _ = writeln!(
        s,
        "Rating classifier on {} test reviews: accuracy {:.3}, AUC {}.\n",
        eval.total(),
        eval.accuracy,
        fmt_auc(eval.auc)
    );
    s.push_str("| | predicted low | predicted high |\n|---|---|---|\n");
    let _ = writeln!(s, "| actual low | {} | {} |", eval.tn, eval.fp);
    let _ = writeln!(s, "| actual high | {} | {} |\n", eval.fn_, eval.tp);
    for (title, list) in [
        ("Determinants of high ratings", &summary.high_rating),
        ("Determinants of low ratings", &summary.low_rating),
    ] {
        let _ = writeln!(s, "## {title}\n");
        if list.is_empty() {
            s.push_str("None found.\n");
        }
        for (i, d) in list.iter().enumerate() {
            let _ = writeln!(s, "{}. {} (mean |SHAP| {:.4})", i + 1, d.name, d.mean_abs_phi);
        }
        s.push('\n');
    }
    s.push_str("## Topic ranking by mean |SHAP|\n\n");
    for (i, d) in ranked.iter().enumerate() {
        let _ = writeln!(s, "{}. {} ({:.4})", i + 1, d.name, d.mean_abs_phi);
    }
    s.push_str("\n## Quality dimensions\n\n| dimension | reviews | topics |\n|---|---|---|\n");
    for d in dims {
        let topics: Vec<String> = d.topics.iter().map(i64::to_string).collect();
        let _ = writeln!(s, "| {} | {} | {} |", d.name, d.total, topics.join(", "));
    }
    s
}

/// Assembles the report bundle in `<work_dir>/report` and returns its path.
/// Rerunning on unchanged artifacts reproduces it byte for byte.
pub fn emit_report(work_dir: &Path, top_n: usize) -> Result<PathBuf, PipelineError> {
    let absent: Vec<String> = REQUIRED
        .iter()
        .filter(|f| !work_dir.join(f).is_file())
        .map(|f| f.to_string())
        .collect();
    if !absent.is_empty() {
        return Err(PipelineError::MissingArtifacts {
            stage: Stage::Report,
            missing: absent,
        });
    }
    let out = work_dir.join(REPORT_DIR);
    for f in [TOPICS, SWEEP, DIMENSIONS, EVAL, BEESWARM] {
        let bytes = std::fs::read(work_dir.join(f)).map_err(|source| io::IoError::File {
            path: work_dir.join(f).display().to_string(),
            source,
        })?;
        io::write_atomic(&out.join(f), &bytes)?;
    }
    let quality: QualitySelection = io::read_json(&work_dir.join(QUALITY))?;
    let eval: EvalReport = io::read_json(&work_dir.join(EVAL))?;
    let ranked: Vec<Determinant> = io::read_json(&work_dir.join(DETERMINANTS))?;
    let dims: Vec<DimensionTotal> = io::read_json(&work_dir.join(DIMENSIONS))?;
    let summary = DirectionSummary::from_ranked(&ranked, top_n);
    io::write_json(
        &out.join("summary.json"),
        &Summary {
            topics: quality.selected_topics,
            quality: &quality,
            test_size: eval.total(),
            accuracy: eval.accuracy,
            auc: eval.auc,
            ranking: ranked.iter().map(|d| d.name.as_str()).collect(),
            determinants: &summary,
        },
    )?;
    io::write_atomic(
        &out.join("summary.md"),
        render(&quality, &eval, &ranked, &summary, &dims).as_bytes(),
    )?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(feature: usize, abs: f64, above: f64, below: f64) -> Determinant {
        Determinant {
            feature,
            name: format!("topic {feature}"),
            mean_abs_phi: abs,
            mean_phi_above_median: Some(above),
            mean_phi_at_or_below_median: Some(below),
        }
    }

    #[test]
    fn directions_split_by_sign() {
        let ranked = [
            det(0, 0.5, 0.4, -0.1),
            det(1, 0.4, -0.3, 0.2),
            det(2, 0.3, 0.1, 0.0),
            det(3, 0.2, 0.05, -0.05),
            det(4, 0.1, 0.0, 0.0),
        ];
        let s = DirectionSummary::from_ranked(&ranked, 2);
        assert_eq!(s.high_rating.iter().map(|d| d.feature).collect::<Vec<_>>(), [0, 2]);
        assert_eq!(s.low_rating.iter().map(|d| d.feature).collect::<Vec<_>>(), [1]);
    }

    #[test]
    fn missing_eval_is_named() {
        let dir = tempfile::tempdir().unwrap();
        match emit_report(dir.path(), 3) {
            Err(PipelineError::MissingArtifacts { missing, .. }) => assert!(missing.contains(&"eval.json".to_string())),
            other => panic!("{other:?}"),
        }
    }
}
