//! Helpers for driving the synthetic end-to-end run from tests.

use std::collections::BTreeMap;
use std::path::Path;

use review_insight::density::ClusterAssignment;
use review_insight::io;
use review_insight::pipeline::{
    run_pipeline, PipelineConfig, PipelineError, QualityConfig, RunManifest, RunOptions, StageRange,
    MANIFEST_FILE, MAPPING_TEMPLATE,
};
use review_insight::preprocess::TokenDoc;
use review_insight::rating::Determinant;
use review_insight::topics::DocTopicRow;

use super::scoring::purity;

/// Synthetic source with default planted topics, topic counts allowed down to 2.
pub fn synthetic_config(work_dir: &Path) -> PipelineConfig {
    PipelineConfig {
        work_dir: work_dir.to_path_buf(),
        quality: QualityConfig {
            min_topics: 2,
            max_topics: 20,
            ..QualityConfig::default()
        },
        ..PipelineConfig::default()
    }
}

/// Fills every placeholder of the generated template, topic `i` of the table
/// going to dimension `i % 10 + 1`, and saves it where the map stage looks.
pub fn fill_mapping(cfg: &PipelineConfig) {
    let template = std::fs::read_to_string(cfg.work_dir.join(MAPPING_TEMPLATE)).unwrap();
    let mut i = 0;
    let filled: String = template
        .lines()
        .map(|l| {
            if l.starts_with('#') {
                l.to_string()
            } else {
                let out = l.replacen("TODO", &(i % 10 + 1).to_string(), 1);
                i += 1;
                out
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(cfg.mapping_path(), filled + "\n").unwrap();
}

/// Runs everything, answering the mapping halt once.
pub fn run_to_completion(cfg: &PipelineConfig) -> RunManifest {
    match run_pipeline(cfg, StageRange::all(), RunOptions::default()) {
        Err(PipelineError::MappingRequired { .. }) => {
            fill_mapping(cfg);
            run_pipeline(cfg, StageRange::all(), RunOptions { resume: true }).unwrap()
        }
        other => other.unwrap(),
    }
}

/// Generator topic of a synthetic document id (`app/syn-00042` is review 42).
pub fn generator_topic(doc_id: &str) -> i64 {
    let n: i64 = doc_id.rsplit("syn-").next().unwrap().parse().unwrap();
    n % 5
}

/// Every file under `dir` except the run manifest, with its bytes.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                if rel != MANIFEST_FILE {
                    out.insert(rel, std::fs::read(&p).unwrap());
                }
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

/// What a finished synthetic run found, scored against the generator.
#[derive(Debug)]
pub struct Recovery {
    pub n_clusters: usize,
    pub purity: f64,
    /// Generator topic behind each of the top three determinants.
    pub top3: Vec<i64>,
    /// Determinant name per generator topic, in ranking order.
    pub names: BTreeMap<i64, String>,
}

pub fn recovery(work_dir: &Path) -> Recovery {
    let docs: Vec<TokenDoc> = io::read_jsonl(&work_dir.join("tokens.jsonl")).unwrap();
    let truth: Vec<i64> = docs.iter().map(|d| generator_topic(&d.doc_id)).collect();
    let clusters: ClusterAssignment = io::read_json(&work_dir.join("clusters.json")).unwrap();
    let rows: Vec<DocTopicRow> = io::read_jsonl(&work_dir.join("doc_topics.jsonl")).unwrap();
    let topics: Vec<serde_json::Value> = io::read_json(&work_dir.join("topics.json")).unwrap();
    // each final topic stands for the generator topic most of its documents came from
    let generator_of: Vec<i64> = topics
        .iter()
        .map(|t| {
            let mut c: BTreeMap<i64, usize> = BTreeMap::new();
            for (r, &g) in rows.iter().zip(&truth) {
                if r.topic == t["id"].as_i64().unwrap() {
                    *c.entry(g).or_default() += 1;
                }
            }
            c.iter().max_by_key(|(_, &n)| n).map_or(-1, |(&g, _)| g)
        })
        .collect();
    let ranked: Vec<Determinant> = io::read_json(&work_dir.join("determinants.json")).unwrap();
    let mut names = BTreeMap::new();
    for d in &ranked {
        names.entry(generator_of[d.feature]).or_insert_with(|| d.name.clone());
    }
    Recovery {
        n_clusters: clusters.n_clusters,
        purity: purity(&clusters.labels, &truth),
        top3: ranked.iter().take(3).map(|d| generator_of[d.feature]).collect(),
        names,
    }
}
