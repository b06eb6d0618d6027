use std::path::{Path, PathBuf};

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::density::HdbscanParams;
use crate::harvest::{AppQuery, Endpoints};
use crate::manifold::Metric;
use crate::normalize::{UntranslatedPolicy, DEFAULT_MIN_WORDS};
use crate::preprocess::PreprocessConfig;
use crate::quality::{DEFAULT_COUNT_BOUNDS, DEFAULT_DIVERSITY_FLOOR};
use crate::rating::{ForestParams, MaxFeatures, DEFAULT_SPLIT};
use crate::framework::CountMode;
use crate::topics::{DocTopicMode, DEFAULT_TOP_WORDS};
use crate::{embed, io, manifold};

/// Everything a run needs. Every section has defaults, so a config file only
/// lists what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Seeds the layout, the corpus split, and the forest.
    pub seed: u64,
    /// Directory holding every artifact and the run manifest.
    pub work_dir: PathBuf,
    pub source: SourceConfig,
    pub normalize: NormalizeConfig,
    pub preprocess: PreprocessConfig,
    pub embed: EmbedConfig,
    pub reduce: ReduceConfig,
    pub cluster: HdbscanParams,
    pub topics: TopicsConfig,
    pub quality: QualityConfig,
    pub map: MapConfig,
    pub classify: ClassifyConfig,
    pub explain: ExplainConfig,
    pub report: ReportConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            work_dir: PathBuf::from("run"),
            source: SourceConfig::default(),
            normalize: NormalizeConfig::default(),
            preprocess: PreprocessConfig::default(),
            embed: EmbedConfig::default(),
            reduce: ReduceConfig::default(),
            cluster: HdbscanParams::default(),
            topics: TopicsConfig::default(),
            quality: QualityConfig::default(),
            map: MapConfig::default(),
            classify: ClassifyConfig::default(),
            explain: ExplainConfig::default(),
            report: ReportConfig::default(),
        }
    }
}

/// Where reviews come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    /// A JSON Lines file of review records.
    Import { path: PathBuf },
    /// The bundled planted-topic generator.
    Synthetic {
        reviews: usize,
        negative_topics: Vec<usize>,
        positive_topics: Vec<usize>,
        planted_strength: f64,
        generator_seed: u64,
    },
    /// Storefront search and review feeds over HTTP.
    Live(LiveSource),
}

impl Default for SourceConfig {
    fn default() -> Self {
        let s = crate::synth::CorpusSpec::default();
        SourceConfig::Synthetic {
            reviews: s.reviews,
            negative_topics: s.negative_topics,
            positive_topics: s.positive_topics,
            planted_strength: s.planted_strength,
            generator_seed: s.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct LiveSource {
    pub query: AppQuery,
    pub endpoints: Endpoints,
    pub rate_limit_per_minute: usize,
    /// Key for author pseudonyms. Falls back to `REVIEW_INSIGHT_SALT`.
    pub salt: Option<String>,
    /// Harvest apps whose wearable keywords were not found instead of
    /// waiting for manual confirmation.
    pub auto_keep_flagged: bool,
    /// Storefronts to read feeds from; defaults to each app's supported ones.
    pub feed_countries: Option<Vec<String>>,
}

impl Default for LiveSource {
    fn default() -> Self {
        Self {
            query: AppQuery::default(),
            endpoints: Endpoints::default(),
            rate_limit_per_minute: 20,
            salt: None,
            auto_keep_flagged: false,
            feed_countries: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizeConfig {
    pub min_words: usize,
    /// `POST` endpoint of the translation service. Without one, non-English
    /// reviews follow `untranslated`.
    pub translation_endpoint: Option<String>,
    pub untranslated: UntranslatedPolicy,
}

impl Default for NormalizeConfig {
    fn default() -> Self {
        Self {
            min_words: DEFAULT_MIN_WORDS,
            translation_endpoint: None,
            untranslated: UntranslatedPolicy::Drop,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedConfig {
    /// `POST` endpoint of the embedding service.
    pub endpoint: Option<String>,
    /// Use hashed character n-grams when no endpoint is set or it fails.
    pub allow_fallback: bool,
    pub fallback_dimension: usize,
    pub ngram_range: (usize, usize),
    pub batch_size: usize,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self {
            endpoint: None,
            allow_fallback: true,
            fallback_dimension: embed::DEFAULT_FALLBACK_DIMENSION,
            ngram_range: embed::DEFAULT_NGRAM_RANGE,
            batch_size: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct ReduceConfig {
    pub n_neighbors: usize,
    pub min_dist: f64,
    /// Layout dimension used for clustering.
    pub cluster_dim: usize,
    /// Layout dimension written for plotting.
    pub plot_dim: usize,
    pub metric: Metric,
    pub epochs: Option<usize>,
}

impl Default for ReduceConfig {
    fn default() -> Self {
        Self {
            n_neighbors: manifold::DEFAULT_N_NEIGHBORS,
            min_dist: manifold::DEFAULT_MIN_DIST,
            cluster_dim: manifold::DEFAULT_CLUSTER_DIM,
            plot_dim: manifold::DEFAULT_PLOT_DIM,
            metric: Metric::Cosine,
            epochs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct TopicsConfig {
    pub top_words: usize,
    pub l1_normalize: bool,
    pub doc_topic: DocTopicMode,
}

impl Default for TopicsConfig {
    fn default() -> Self {
        Self {
            top_words: DEFAULT_TOP_WORDS,
            l1_normalize: false,
            doc_topic: DocTopicMode::CentroidCosine,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct QualityConfig {
    pub min_topics: usize,
    pub max_topics: usize,
    pub diversity_floor: f64,
    /// Words per topic used for coherence and diversity.
    pub words: usize,
    /// Skip the selection rule and reduce to exactly this many topics.
    pub target: Option<usize>,
}

impl Default for QualityConfig {
    fn default() -> Self {
        Self {
            min_topics: DEFAULT_COUNT_BOUNDS.0,
            max_topics: DEFAULT_COUNT_BOUNDS.1,
            diversity_floor: DEFAULT_DIVERSITY_FLOOR,
            words: DEFAULT_TOP_WORDS,
            target: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct MapConfig {
    /// Topic to dimension mapping. Defaults to `mapping.tsv` in the work dir;
    /// when missing, the stage writes `mapping_template.tsv` and halts.
    pub mapping: Option<PathBuf>,
    pub annotator: String,
    /// Alternative framework file; the bundled ten dimensions otherwise.
    pub framework: Option<PathBuf>,
    pub count_mode: CountMode,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            mapping: None,
            annotator: "annotator-1".into(),
            framework: None,
            count_mode: CountMode::Argmax,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    /// Train, validation, and test fractions.
    pub fractions: (f64, f64, f64),
    pub stratify: bool,
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    pub balanced: bool,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        let f = ForestParams::default();
        Self {
            fractions: DEFAULT_SPLIT,
            stratify: true,
            n_trees: f.n_trees,
            max_features: f.max_features,
            min_leaf: f.min_leaf,
            max_depth: f.max_depth,
            balanced: f.balanced,
        }
    }
}

impl ClassifyConfig {
    pub fn forest_params(&self, seed: u64) -> ForestParams {
        ForestParams {
            n_trees: self.n_trees,
            max_features: self.max_features,
            min_leaf: self.min_leaf,
            max_depth: self.max_depth,
            balanced: self.balanced,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum ExplainSet {
    #[default]
    Test,
    All,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainConfig {
    pub instances: ExplainSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Determinants listed per direction in the summary.
    pub top_n: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self { top_n: 3 }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable as TOML")
    }

    /// Reads a TOML file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = io::read_text(path).map_err(|e| PipelineError::Config(e.to_string()))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            cfg.rebase(base);
        }
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.work_dir);
        if let SourceConfig::Import { path } = &mut self.source {
            fix(path);
        }
        if let Some(p) = &mut self.map.mapping {
            fix(p);
        }
        if let Some(p) = &mut self.map.framework {
            fix(p);
        }
    }

    /// JSON schema of the config file.
    pub fn schema() -> serde_json::Value {
        serde_json::to_value(schemars::schema_for!(PipelineConfig)).expect("schema serializes")
    }

    pub fn mapping_path(&self) -> PathBuf {
        self.map
            .mapping
            .clone()
            .unwrap_or_else(|| self.work_dir.join("mapping.tsv"))
    }

    /// Checks everything that can be checked before any stage runs.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.embed.endpoint.is_none() && !self.embed.allow_fallback {
            return bad("embed.endpoint is not set and embed.allow_fallback is false".into());
        }
        if self.embed.fallback_dimension < 8 {
            return bad(format!("embed.fallback_dimension must be at least 8, got {}", self.embed.fallback_dimension));
        }
        match &self.source {
            SourceConfig::Import { path } if !path.is_file() => {
                return bad(format!("source.path {} does not exist", path.display()));
            }
            SourceConfig::Synthetic { reviews: 0, .. } => return bad("source.reviews must be positive".into()),
            SourceConfig::Live(live) => {
                live.query.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
                if live.rate_limit_per_minute == 0 {
                    return bad("source.rate_limit_per_minute must be positive".into());
                }
                if live.salt.is_none() && std::env::var("REVIEW_INSIGHT_SALT").is_err() {
                    return bad("live harvesting needs source.salt or REVIEW_INSIGHT_SALT".into());
                }
            }
            _ => {}
        }
        if let Some(p) = &self.map.framework {
            if !p.is_file() {
                return bad(format!("map.framework {} does not exist", p.display()));
            }
        }
        if self.reduce.n_neighbors < 2 || self.reduce.cluster_dim == 0 || self.reduce.plot_dim == 0 {
            return bad("reduce.n_neighbors must be at least 2 and layout dimensions positive".into());
        }
        if self.cluster.min_cluster_size < 2 {
            return bad("cluster.min_cluster_size must be at least 2".into());
        }
        if self.quality.min_topics == 0 || self.quality.min_topics > self.quality.max_topics {
            return bad("quality.min_topics must be in 1..=max_topics".into());
        }
        if self.quality.words < 2 || self.topics.top_words < self.quality.words {
            return bad("quality.words must be at least 2 and at most topics.top_words".into());
        }
        let (a, b, c) = self.classify.fractions;
        if !(a > 0.0 && b > 0.0 && c > 0.0) || (a + b + c - 1.0).abs() > 1e-9 {
            return bad(format!("classify.fractions {:?} must be positive and sum to 1", self.classify.fractions));
        }
        if self.classify.n_trees == 0 {
            return bad("classify.n_trees must be positive".into());
        }
        Ok(())
    }
}
