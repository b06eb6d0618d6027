//! Staged, resumable orchestration.
//!
//! Each stage reads and writes files in the work directory, so any stage can
//! be inspected or replaced. The run manifest records a hash of each stage's
//! parameters, inputs, and outputs; on resume a stage whose three hashes still
//! match is skipped. Every output gets a `.prov.json` sidecar naming the stage
//! and its parameter hash. Timestamps appear only in the manifest.

mod config;
mod report;
mod stages;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::io::{self, IoError};

pub use config::{
    ClassifyConfig, EmbedConfig, ExplainConfig, ExplainSet, LiveSource, MapConfig, NormalizeConfig, PipelineConfig,
    QualityConfig, ReduceConfig, ReportConfig, SourceConfig, TopicsConfig,
};
pub use report::{emit_report, DirectionSummary, REPORT_DIR, REPORT_FILES};
pub use stages::{doc_id, feature_name, QualitySelection, SplitIds};

pub const MANIFEST_FILE: &str = "run_manifest.json";
pub const MAPPING_TEMPLATE: &str = "mapping_template.tsv";

type Cause = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("stage {stage} failed: {cause}")]
    StageFailure { stage: Stage, cause: Cause },
    #[error("stage {stage} is missing {}", missing.join(", "))]
    MissingArtifacts { stage: Stage, missing: Vec<String> },
    #[error("no topic mapping; fill in {} and save it as {}", template.display(), mapping.display())]
    MappingRequired { template: PathBuf, mapping: PathBuf },
    #[error(transparent)]
    Io(#[from] IoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Harvest,
    Normalize,
    Preprocess,
    Embed,
    Reduce,
    Cluster,
    Topics,
    Quality,
    Map,
    Classify,
    Explain,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 12] = [
        Stage::Harvest,
        Stage::Normalize,
        Stage::Preprocess,
        Stage::Embed,
        Stage::Reduce,
        Stage::Cluster,
        Stage::Topics,
        Stage::Quality,
        Stage::Map,
        Stage::Classify,
        Stage::Explain,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Harvest => "harvest",
            Stage::Normalize => "normalize",
            Stage::Preprocess => "preprocess",
            Stage::Embed => "embed",
            Stage::Reduce => "reduce",
            Stage::Cluster => "cluster",
            Stage::Topics => "topics",
            Stage::Quality => "quality",
            Stage::Map => "map",
            Stage::Classify => "classify",
            Stage::Explain => "explain",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| PipelineError::Config(format!("unknown stage {s:?}")))
    }
}

/// Inclusive stage interval, written `a..b`, `a..`, `..b`, or `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageRange {
    pub first: Stage,
    pub last: Stage,
}

impl StageRange {
    pub fn all() -> Self {
        Self {
            first: Stage::Harvest,
            last: Stage::Report,
        }
    }

    pub fn single(s: Stage) -> Self {
        Self { first: s, last: s }
    }

    pub fn stages(&self) -> Vec<Stage> {
        Stage::ALL
            .into_iter()
            .filter(|s| *s >= self.first && *s <= self.last)
            .collect()
    }
}

impl FromStr for StageRange {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let r = match s.split_once("..") {
            None => Self::single(s.trim().parse()?),
            Some((a, b)) => {
                let first = if a.trim().is_empty() { Stage::Harvest } else { a.trim().parse()? };
                let last = if b.trim().is_empty() { Stage::Report } else { b.trim().parse()? };
                Self { first, last }
            }
        };
        if r.first > r.last {
            return Err(PipelineError::Config(format!("empty stage range {s:?}")));
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Completed,
    /// Hashes matched the previous run; nothing was recomputed.
    Skipped,
    /// Waiting for human input (the topic mapping).
    Halted,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub status: StageStatus,
    pub params_hash: String,
    pub input_hash: String,
    pub output_hash: String,
    pub wall_time_ms: u64,
    pub finished_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Latest record per stage, in pipeline order.
    pub stages: Vec<StageRecord>,
}

impl RunManifest {
    pub fn load_or_default(dir: &Path) -> Result<Self, IoError> {
        let p = dir.join(MANIFEST_FILE);
        if p.exists() {
            io::read_json(&p)
        } else {
            Ok(Self::default())
        }
    }

    pub fn save(&self, dir: &Path) -> Result<(), IoError> {
        io::write_json(&dir.join(MANIFEST_FILE), self)
    }

    pub fn record(&self, stage: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|r| r.stage == stage)
    }

    fn upsert(&mut self, rec: StageRecord) {
        self.stages.retain(|r| r.stage != rec.stage);
        self.stages.push(rec);
        self.stages.sort_by_key(|r| r.stage);
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Skip stages whose parameter, input, and output hashes are unchanged.
    pub resume: bool,
}

#[derive(Serialize)]
struct Provenance<'a> {
    stage: Stage,
    params_hash: &'a str,
    input_hash: &'a str,
}

/// Hash of named files: each name and content hash on its own line.
fn hash_files(dir: &Path, names: &[String]) -> Result<String, IoError> {
    let mut lines = String::new();
    for n in names {
        lines.push_str(&format!("{n}\t{}\n", io::hash_file(&dir.join(n))?));
    }
    Ok(io::sha256_hex(lines.as_bytes()))
}

fn external_hash(paths: &[PathBuf]) -> Result<String, IoError> {
    let mut lines = String::new();
    for p in paths {
        let h = if p.exists() { io::hash_file(p)? } else { "absent".into() };
        // name only, so moving the work directory keeps hashes stable
        let name = p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
        lines.push_str(&format!("{name}\t{h}\n"));
    }
    Ok(io::sha256_hex(lines.as_bytes()))
}

fn missing(dir: &Path, names: &[String]) -> Vec<String> {
    names.iter().filter(|n| !dir.join(n).is_file()).cloned().collect()
}

/// Runs the selected stages in order and returns the updated manifest. The
/// manifest is saved after every stage, so a failure leaves earlier stages
/// recorded and their outputs valid.
pub fn run_pipeline(
    config: &PipelineConfig,
    range: StageRange,
    options: RunOptions,
) -> Result<RunManifest, PipelineError> {
    config.validate()?;
    let dir = config.work_dir.as_path();
    std::fs::create_dir_all(dir).map_err(|source| IoError::File {
        path: dir.display().to_string(),
        source,
    })?;
    let mut manifest = RunManifest::load_or_default(dir)?;
    for stage in range.stages() {
        let io_spec = stages::io_spec(config, stage);
        let absent = missing(dir, &io_spec.inputs);
        if !absent.is_empty() {
            return Err(PipelineError::MissingArtifacts { stage, missing: absent });
        }
        let params_hash = io::sha256_hex(stages::params(config, stage).to_string().as_bytes());
        let input_hash = io::sha256_hex(
            format!(
                "{}\n{}",
                hash_files(dir, &io_spec.inputs)?,
                external_hash(&io_spec.external)?
            )
            .as_bytes(),
        );

        if options.resume {
            if let Some(prev) = manifest.record(stage) {
                let done = matches!(prev.status, StageStatus::Completed | StageStatus::Skipped);
                let outputs_intact = missing(dir, &io_spec.outputs).is_empty()
                    && hash_files(dir, &io_spec.outputs)? == prev.output_hash;
                if done && prev.params_hash == params_hash && prev.input_hash == input_hash && outputs_intact {
                    log::info!("{stage}: unchanged, skipped");
                    let mut rec = prev.clone();
                    rec.status = StageStatus::Skipped;
                    rec.wall_time_ms = 0;
                    rec.finished_at = Utc::now();
                    manifest.upsert(rec);
                    manifest.save(dir)?;
                    continue;
                }
            }
        }

        log::info!("{stage}: running");
        let started = Instant::now();
        let result = stages::run_stage(config, stage);
        let mut rec = StageRecord {
            stage,
            status: StageStatus::Completed,
            params_hash: params_hash.clone(),
            input_hash: input_hash.clone(),
            output_hash: String::new(),
            wall_time_ms: started.elapsed().as_millis() as u64,
            finished_at: Utc::now(),
            message: None,
        };
        match result {
            Ok(()) => {
                rec.output_hash = hash_files(dir, &io_spec.outputs)?;
                let prov = Provenance {
                    stage,
                    params_hash: &params_hash,
                    input_hash: &input_hash,
                };
                for out in &io_spec.outputs {
                    io::write_json(&dir.join(format!("{out}.prov.json")), &prov)?;
                }
                manifest.upsert(rec);
                manifest.save(dir)?;
            }
            Err(e) => {
                rec.status = match e {
                    PipelineError::MappingRequired { .. } => StageStatus::Halted,
                    _ => StageStatus::Failed,
                };
                rec.message = Some(e.to_string());
                manifest.upsert(rec);
                manifest.save(dir)?;
                return Err(e);
            }
        }
    }
    Ok(manifest)
}
