use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{ExplainSet, PipelineConfig, SourceConfig};
use super::{report, Cause, PipelineError, Stage, MAPPING_TEMPLATE};
use crate::density::{hdbscan, ClusterAssignment};
use crate::embed::{embed_documents, EmbeddingMatrix, FallbackEmbedder, HttpEmbedder};
use crate::framework::{
    aggregate_dimensions, mapping_template, topic_review_counts, validate_mapping, write_dimensions, Framework,
    TopicMapping, ValidatedMapping,
};
use crate::harvest::{filter_apps, harvest_reviews, HarvestManifest, Harvester, ReviewRecord};
use crate::http::{SystemClock, UreqClient};
use crate::io;
use crate::manifold::{build_knn_graph, fuzzy_simplicial_set, optimize_layout, Layout, LayoutParams};
use crate::normalize::{
    bundled_profiles, filter_corpus, normalize_reviews, CachingTranslator, HttpTranslator, NormalizeStats,
    NormalizedReview, Translator,
};
use crate::preprocess::{Preprocessor, TokenDoc};
use crate::quality::{
    npmi_coherence, select_topic_count, sweep_plot, sweep_topic_counts, topic_diversity, write_sweep_csv,
    CooccurrenceStats,
};
use crate::rating::{
    binarize_rating, evaluate, explain, load_forest, rank_determinants, save_forest, split_corpus, train_forest,
    write_beeswarm_csv, LabeledInstance,
};
use crate::synth::{review_corpus, CorpusSpec};
use crate::topics::{
    build_topic_model, membership_distribution, reduce_topics, write_doc_topics, write_topic_table, DocTopicMode,
    DocTopicRow, TopicModel, TopicTableEntry,
};

pub(super) const REVIEWS: &str = "reviews.jsonl";
const APPS: &str = "apps.jsonl";
const SCREENING: &str = "screening.json";
const HARVEST_MANIFEST: &str = "harvest_manifest.json";
pub(super) const NORMALIZED: &str = "normalized.jsonl";
const NORMALIZE_STATS: &str = "normalize_stats.json";
pub(super) const TOKENS: &str = "tokens.jsonl";
pub(super) const EMBEDDINGS: &str = "embeddings.json";
pub(super) const LAYOUT: &str = "layout.json";
const LAYOUT_PLOT: &str = "layout_2d.json";
pub(super) const CLUSTERS: &str = "clusters.json";
const CONDENSED: &str = "condensed_tree.json";
const TOPIC_MODEL_FULL: &str = "topic_model_full.json";
pub(super) const SWEEP: &str = "sweep.csv";
const SWEEP_PLOT: &str = "sweep_plot.json";
pub(super) const QUALITY: &str = "quality.json";
const TOPIC_MODEL: &str = "topic_model.json";
pub(super) const TOPICS: &str = "topics.json";
pub(super) const DOC_TOPICS: &str = "doc_topics.jsonl";
pub(super) const DIMENSIONS: &str = "dimensions.json";
const MAPPING_OUT: &str = "mapping.json";
const SPLIT: &str = "split.json";
const FOREST: &str = "forest.json";
pub(super) const EVAL: &str = "eval.json";
const EVAL_VALIDATION: &str = "eval_validation.json";
const SHAP: &str = "shap.json";
pub(super) const BEESWARM: &str = "shap_beeswarm.csv";
pub(super) const DETERMINANTS: &str = "determinants.json";

pub(super) struct IoSpec {
    /// Files in the work directory the stage reads.
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// Files outside the stage graph (imported corpora, the mapping).
    pub external: Vec<PathBuf>,
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

pub(super) fn io_spec(cfg: &PipelineConfig, stage: Stage) -> IoSpec {
    let (inputs, outputs, external): (&[&str], Vec<String>, Vec<PathBuf>) = match stage {
        Stage::Harvest => match &cfg.source {
            SourceConfig::Import { path } => (&[], names(&[REVIEWS]), vec![path.clone()]),
            SourceConfig::Synthetic { .. } => (&[], names(&[REVIEWS]), vec![]),
            SourceConfig::Live(_) => (&[], names(&[REVIEWS, APPS, SCREENING, HARVEST_MANIFEST]), vec![]),
        },
        Stage::Normalize => (&[REVIEWS], names(&[NORMALIZED, NORMALIZE_STATS]), vec![]),
        Stage::Preprocess => (&[NORMALIZED], names(&[TOKENS]), vec![]),
        Stage::Embed => (&[NORMALIZED], names(&[EMBEDDINGS]), vec![]),
        Stage::Reduce => (&[EMBEDDINGS], names(&[LAYOUT, LAYOUT_PLOT]), vec![]),
        Stage::Cluster => (&[LAYOUT], names(&[CLUSTERS, CONDENSED]), vec![]),
        Stage::Topics => (&[TOKENS, EMBEDDINGS, CLUSTERS], names(&[TOPIC_MODEL_FULL]), vec![]),
        Stage::Quality => (
            &[TOPIC_MODEL_FULL, TOKENS, EMBEDDINGS, CLUSTERS],
            names(&[SWEEP, SWEEP_PLOT, QUALITY, TOPIC_MODEL, TOPICS, DOC_TOPICS]),
            vec![],
        ),
        Stage::Map => {
            let mut ext = vec![cfg.mapping_path()];
            ext.extend(cfg.map.framework.clone());
            (&[TOPICS, DOC_TOPICS], names(&[DIMENSIONS, MAPPING_OUT]), ext)
        }
        Stage::Classify => (
            &[NORMALIZED, TOKENS, DOC_TOPICS],
            names(&[SPLIT, FOREST, EVAL, EVAL_VALIDATION]),
            vec![],
        ),
        Stage::Explain => (
            &[FOREST, SPLIT, DOC_TOPICS, TOPICS],
            names(&[SHAP, BEESWARM, DETERMINANTS]),
            vec![],
        ),
        Stage::Report => (
            &report::REQUIRED,
            report::REPORT_FILES
                .iter()
                .map(|f| format!("{}/{f}", report::REPORT_DIR))
                .collect(),
            vec![],
        ),
    };
    IoSpec {
        inputs: names(inputs),
        outputs,
        external,
    }
}

/// Parameters that determine a stage's output, hashed into the manifest.
pub(super) fn params(cfg: &PipelineConfig, stage: Stage) -> Value {
    let p = match stage {
        Stage::Harvest => json!(cfg.source),
        Stage::Normalize => json!(cfg.normalize),
        Stage::Preprocess => json!(cfg.preprocess),
        Stage::Embed => json!(cfg.embed),
        Stage::Reduce => json!({ "reduce": cfg.reduce, "seed": cfg.seed }),
        Stage::Cluster => json!(cfg.cluster),
        Stage::Topics => json!(cfg.topics),
        Stage::Quality => json!({ "quality": cfg.quality, "doc_topic": cfg.topics.doc_topic }),
        Stage::Map => json!(cfg.map),
        Stage::Classify => json!({ "classify": cfg.classify, "seed": cfg.seed }),
        Stage::Explain => json!(cfg.explain),
        Stage::Report => json!(cfg.report),
    };
    json!({ "stage": stage, "version": env!("CARGO_PKG_VERSION"), "params": p })
}

pub(super) fn run_stage(cfg: &PipelineConfig, stage: Stage) -> Result<(), PipelineError> {
    let dir = cfg.work_dir.as_path();
    let fail = |cause: Cause| PipelineError::StageFailure { stage, cause };
    match stage {
        Stage::Harvest => harvest(cfg, dir).map_err(fail),
        Stage::Normalize => normalize(cfg, dir).map_err(fail),
        Stage::Preprocess => preprocess(cfg, dir).map_err(fail),
        Stage::Embed => embed(cfg, dir).map_err(fail),
        Stage::Reduce => reduce(cfg, dir).map_err(fail),
        Stage::Cluster => cluster(cfg, dir).map_err(fail),
        Stage::Topics => topics(cfg, dir).map_err(fail),
        Stage::Quality => quality(cfg, dir).map_err(fail),
        Stage::Map => map(cfg, dir),
        Stage::Classify => classify(cfg, dir).map_err(fail),
        Stage::Explain => explain_stage(cfg, dir).map_err(fail),
        Stage::Report => report::emit_report(dir, cfg.report.top_n).map(|_| ()),
    }
}

/// Document id used from normalization on: `app_id/review_id`.
pub fn doc_id(review: &ReviewRecord) -> String {
    format!("{}/{}", review.app_id, review.review_id)
}

/// Column name for a topic feature: id and its first three words.
pub fn feature_name(topic: &TopicTableEntry) -> String {
    let words: Vec<&str> = topic.top_words.iter().take(3).map(|w| w.word.as_str()).collect();
    format!("topic {}: {}", topic.id, words.join(", "))
}

fn harvest(cfg: &PipelineConfig, dir: &Path) -> Result<(), Cause> {
    let reviews = match &cfg.source {
        SourceConfig::Import { path } => {
            let all: Vec<ReviewRecord> = io::read_jsonl(path)?;
            let mut seen = std::collections::HashSet::new();
            let mut out = Vec::with_capacity(all.len());
            for r in all {
                if !(1..=5).contains(&r.rating) {
                    return Err(format!("review {} has rating {}", doc_id(&r), r.rating).into());
                }
                if seen.insert(doc_id(&r)) {
                    out.push(r);
                } else {
                    log::warn!("duplicate review {} ignored", doc_id(&r));
                }
            }
            out
        }
        SourceConfig::Synthetic {
            reviews,
            negative_topics,
            positive_topics,
            planted_strength,
            generator_seed,
        } => {
            review_corpus(&CorpusSpec {
                reviews: *reviews,
                negative_topics: negative_topics.clone(),
                positive_topics: positive_topics.clone(),
                planted_strength: *planted_strength,
                seed: *generator_seed,
                ..CorpusSpec::default()
            })
            .reviews
        }
        SourceConfig::Live(live) => {
            let salt = match &live.salt {
                Some(s) => s.clone(),
                None => std::env::var("REVIEW_INSIGHT_SALT")?,
            };
            let h = Harvester::new(
                live.endpoints.clone(),
                Arc::new(UreqClient::default()),
                Arc::new(SystemClock),
                live.rate_limit_per_minute,
                salt,
            );
            let mpath = dir.join(HARVEST_MANIFEST);
            let mut manifest = HarvestManifest::load_or_default(&mpath)?;
            let apps = h.search_apps(&live.query, &mut manifest);
            manifest.save(&mpath)?;
            let apps = apps?;
            let (kept, screening) = filter_apps(&apps, &live.query);
            io::write_jsonl(&dir.join(APPS), &apps)?;
            io::write_json(&dir.join(SCREENING), &screening)?;
            let prior: Vec<ReviewRecord> = if dir.join(REVIEWS).exists() {
                io::read_jsonl(&dir.join(REVIEWS))?
            } else {
                Vec::new()
            };
            let fresh = harvest_reviews(
                &h,
                &kept,
                Some(&screening),
                live.feed_countries.as_deref(),
                live.auto_keep_flagged,
                &mut manifest,
            );
            manifest.save(&mpath)?;
            let mut seen = std::collections::HashSet::new();
            prior
                .into_iter()
                .chain(fresh?)
                .filter(|r| seen.insert(doc_id(r)))
                .collect()
        }
    };
    log::info!("{} reviews", reviews.len());
    io::write_jsonl(&dir.join(REVIEWS), &reviews)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NormalizeSummary {
    stats: NormalizeStats,
    min_words: usize,
    kept: usize,
}

fn normalize(cfg: &PipelineConfig, dir: &Path) -> Result<(), Cause> {
    let reviews: Vec<ReviewRecord> = io::read_jsonl(&dir.join(REVIEWS))?;
    let translator = cfg
        .normalize
        .translation_endpoint
        .as_ref()
        .map(|e| CachingTranslator::new(HttpTranslator::new(e.clone(), Arc::new(UreqClient::default()))));
    let (normed, stats) = normalize_reviews(
        &reviews,
        &bundled_profiles(),
        translator.as_ref().map(|t| t as &dyn Translator),
        cfg.normalize.untranslated,
    );
    let kept = filter_corpus(normed, cfg.normalize.min_words)?;
    log::info!("{} of {} reviews kept", kept.len(), reviews.len());
    io::write_jsonl(&dir.join(NORMALIZED), &kept)?;
    io::write_json(
        &dir.join(NORMALIZE_STATS),
        &NormalizeSummary {
            stats,
            min_words: cfg.normalize.min_words,
            kept: kept.len(),
        },
    )?;
    Ok(())
}

fn load_normalized(dir: &Path) -> Result<(Vec<String>, Vec<String>, Vec<NormalizedReview>), Cause> {
    let rows: Vec<NormalizedReview> = io::read_jsonl(&dir.join(NORMALIZED))?;
    let ids = rows.iter().map(|r| doc_id(&r.review)).collect();
    let texts = rows.iter().map(NormalizedReview::english_text).collect();
    Ok((ids, texts, rows))
}

fn preprocess(cfg: &PipelineConfig, dir: &Path) -> Result<(), Cause> {
    let (ids, texts, _) = load_normalized(dir)?;
    let pairs: Vec<(&str, &str)> = ids.iter().map(String::as_str).zip(texts.iter().map(String::as_str)).collect();
    let docs = Preprocessor::bundled(cfg.preprocess).preprocess_all(pairs);
    let empty = docs.iter().filter(|d| d.empty_after_preprocess).count();
    if empty > 0 {
        log::info!("{empty} documents have no tokens after preprocessing");
    }
    io::write_jsonl(&dir.join(TOKENS), &docs)?;
    Ok(())
}

fn embed(cfg: &PipelineConfig, dir: &Path) -> Result<(), Cause> {
    let (ids, texts, _) = load_normalized(dir)?;
    let e = &cfg.embed;
    let fallback = FallbackEmbedder::new(e.fallback_dimension, e.ngram_range)?;
    let matrix = match &e.endpoint {
        Some(url) => {
            let http = HttpEmbedder::new(url.clone(), Arc::new(UreqClient::default()));
            match embed_documents(&ids, &texts, &http, e.batch_size) {
                Ok(m) => m,
                Err(err) if e.allow_fallback => {
                    log::warn!("embedding service failed ({err}); using the hashed fallback");
                    embed_documents(&ids, &texts, &fallback, e.batch_size)?
                }
                Err(err) => return Err(err.into()),
            }
        }
        None => embed_documents(&ids, &texts, &fallback, e.batch_size)?,
    };
    matrix.validate()?;
    io::write_json(&dir.join(EMBEDDINGS), &matrix)?;
    Ok(())
}

fn reduce(cfg: &PipelineConfig, dir: &Path) -> Result<(), Cause> {
    let m: EmbeddingMatrix = io::read_json(&dir.join(EMBEDDINGS))?;
    let r = &cfg.reduce;
    let k = r.n_neighbors.min(m.len().saturating_sub(1));
    let fuzzy = fuzzy_simplicial_set(&build_knn_graph(&m.vectors, k, r.metric)?);
    let params = LayoutParams {
        dim: r.cluster_dim,
        min_dist: r.min_dist,
        epochs: r.epochs,
        seed: cfg.seed,
        ..LayoutParams::default()
    };
    let layout = optimize_layout(&fuzzy, &params)?;
    let plot = optimize_layout(&fuzzy, &LayoutParams { dim: r.plot_dim, ..params })?;
    io::write_json(&dir.join(LAYOUT), &layout)?;
    io::write_json(&dir.join(LAYOUT_PLOT), &plot)?;
    Ok(())
}

fn cluster(cfg: &PipelineConfig, dir: &Path) -> Result<(), Cause> {
    let layout: Layout = io::read_json(&dir.join(LAYOUT))?;
    let (assignment, tree) = hdbscan(&layout.vectors, &cfg.cluster)?;
    log::info!(
        "{} clusters, {} noise points",
        assignment.n_clusters,
        assignment.noise_count()
    );
    io::write_json(&dir.join(CLUSTERS), &assignment)?;
    io::write_json(&dir.join(CONDENSED), &tree)?;
    Ok(())
}

fn topics(cfg: &PipelineConfig, dir: &Path) -> Result<(), Cause> {
    let docs: Vec<TokenDoc> = io::read_jsonl(&dir.join(TOKENS))?;
    let m: EmbeddingMatrix = io::read_json(&dir.join(EMBEDDINGS))?;
    let clusters: ClusterAssignment = io::read_json(&dir.join(CLUSTERS))?;
    let model = build_topic_model(
        &docs,
        &clusters.labels,
        &m.vectors,
        cfg.topics.top_words,
        cfg.topics.l1_normalize,
    )?;
    io::write_json(&dir.join(TOPIC_MODEL_FULL), &model)?;
    Ok(())
}

/// What the quality stage chose and how the chosen model scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualitySelection {
    pub initial_topics: usize,
    pub selected_topics: usize,
    /// True when `quality.target` overrode the selection rule.
    pub forced: bool,
    pub coherence: f64,
    pub diversity: f64,
}

fn quality(cfg: &PipelineConfig, dir: &Path) -> Result<(), Cause> {
    let full: TopicModel = io::read_json(&dir.join(TOPIC_MODEL_FULL))?;
    let docs: Vec<TokenDoc> = io::read_jsonl(&dir.join(TOKENS))?;
    let m: EmbeddingMatrix = io::read_json(&dir.join(EMBEDDINGS))?;
    let q = &cfg.quality;
    let stats = CooccurrenceStats::from_docs(&docs);
    let bounds = (q.min_topics, q.max_topics);
    let sweep = sweep_topic_counts(&full, bounds, &stats, q.words)?;
    let selected = match q.target {
        Some(t) => t,
        None => select_topic_count(&sweep, q.diversity_floor, bounds)?,
    };
    let mut model = if selected == full.topics.len() {
        full.clone()
    } else {
        reduce_topics(&full, selected, &m.vectors)?
    };
    if cfg.topics.doc_topic == DocTopicMode::MembershipStrength {
        let clusters: ClusterAssignment = io::read_json(&dir.join(CLUSTERS))?;
        model.doc_topic = membership_distribution(&model.labels, &clusters.strengths, &model.topic_ids());
    }
    let words = model.word_lists();
    let selection = QualitySelection {
        initial_topics: full.topics.len(),
        selected_topics: selected,
        forced: q.target.is_some(),
        coherence: npmi_coherence(&words, &stats, q.words)?,
        diversity: topic_diversity(&words, q.words)?,
    };
    log::info!("{} topics reduced to {selected}", full.topics.len());
    write_sweep_csv(&dir.join(SWEEP), &sweep)?;
    let plot_selected = sweep.iter().any(|p| p.topic_count == selected).then_some(selected);
    io::write_json(&dir.join(SWEEP_PLOT), &sweep_plot(&sweep, plot_selected))?;
    io::write_json(&dir.join(QUALITY), &selection)?;
    io::write_json(&dir.join(TOPIC_MODEL), &model)?;
    write_topic_table(&dir.join(TOPICS), &model)?;
    let ids: Vec<String> = docs.iter().map(|d| d.doc_id.clone()).collect();
    write_doc_topics(&dir.join(DOC_TOPICS), &ids, &model)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MapOutput {
    mapping: ValidatedMapping,
    topic_counts: BTreeMap<i64, usize>,
}

fn map(cfg: &PipelineConfig, dir: &Path) -> Result<(), PipelineError> {
    let fail = |cause: Cause| PipelineError::StageFailure { stage: Stage::Map, cause };
    let topics: Vec<TopicTableEntry> = io::read_json(&dir.join(TOPICS))?;
    let framework = match &cfg.map.framework {
        Some(p) => Framework::parse(&io::read_text(p)?).map_err(|e| fail(e.into()))?,
        None => Framework::bundled(),
    };
    let mapping_path = cfg.mapping_path();
    if !mapping_path.exists() {
        let template = dir.join(MAPPING_TEMPLATE);
        io::write_atomic(&template, mapping_template(&topics, &framework).as_bytes())?;
        return Err(PipelineError::MappingRequired {
            template,
            mapping: mapping_path,
        });
    }
    let run = || -> Result<(), Cause> {
        let mapping = TopicMapping::load(&mapping_path, &cfg.map.annotator)?;
        let ids: Vec<i64> = topics.iter().map(|t| t.id).collect();
        let validated = validate_mapping(&mapping, &ids, &framework)?;
        let rows: Vec<DocTopicRow> = io::read_jsonl(&dir.join(DOC_TOPICS))?;
        let doc_topic: Vec<Vec<f64>> = rows.iter().map(|r| r.probabilities.clone()).collect();
        let labels: Vec<i64> = rows.iter().map(|r| r.topic).collect();
        let counts = topic_review_counts(cfg.map.count_mode, &ids, &doc_topic, &labels);
        let totals = aggregate_dimensions(&validated, &counts, &framework);
        write_dimensions(&dir.join(DIMENSIONS), &totals)?;
        io::write_json(
            &dir.join(MAPPING_OUT),
            &MapOutput {
                mapping: validated,
                topic_counts: counts,
            },
        )?;
        Ok(())
    };
    run().map_err(fail)
}

/// Document ids per split, sorted as in the split.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitIds {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
    pub dropped_empty: [usize; 3],
}

fn classify(cfg: &PipelineConfig, dir: &Path) -> Result<(), Cause> {
    let (ids, _, reviews) = load_normalized(dir)?;
    let docs: Vec<TokenDoc> = io::read_jsonl(&dir.join(TOKENS))?;
    let rows: Vec<DocTopicRow> = io::read_jsonl(&dir.join(DOC_TOPICS))?;
    if docs.len() != ids.len() || rows.len() != ids.len() {
        return Err(format!(
            "{} reviews, {} token docs, {} doc-topic rows",
            ids.len(),
            docs.len(),
            rows.len()
        )
        .into());
    }
    let mut instances = Vec::with_capacity(ids.len());
    for ((r, d), row) in reviews.iter().zip(&docs).zip(&rows) {
        if d.doc_id != row.doc_id || d.doc_id != doc_id(&r.review) {
            return Err(format!("artifacts disagree on document order at {}", d.doc_id).into());
        }
        instances.push(LabeledInstance {
            doc_id: d.doc_id.clone(),
            features: row.probabilities.clone(),
            label: binarize_rating(r.review.rating)?,
            empty_after_preprocess: d.empty_after_preprocess,
        });
    }
    let c = &cfg.classify;
    let split = split_corpus(&instances, c.fractions, cfg.seed, c.stratify)?;
    let forest = train_forest(&split.train, &c.forest_params(cfg.seed))?;
    let test = evaluate(&forest, &split.test)?;
    let validation = if split.validation.is_empty() {
        None
    } else {
        Some(evaluate(&forest, &split.validation)?)
    };
    log::info!("test accuracy {:.3}, AUC {:?}", test.accuracy, test.auc);
    let ids = |v: &[LabeledInstance]| v.iter().map(|i| i.doc_id.clone()).collect();
    io::write_json(
        &dir.join(SPLIT),
        &SplitIds {
            train: ids(&split.train),
            validation: ids(&split.validation),
            test: ids(&split.test),
            dropped_empty: split.dropped_empty,
        },
    )?;
    save_forest(&dir.join(FOREST), &forest)?;
    io::write_json(&dir.join(EVAL), &test)?;
    io::write_json(&dir.join(EVAL_VALIDATION), &validation)?;
    Ok(())
}

fn explain_stage(cfg: &PipelineConfig, dir: &Path) -> Result<(), Cause> {
    let forest = load_forest(&dir.join(FOREST))?;
    let split: SplitIds = io::read_json(&dir.join(SPLIT))?;
    let rows: Vec<DocTopicRow> = io::read_jsonl(&dir.join(DOC_TOPICS))?;
    let topics: Vec<TopicTableEntry> = io::read_json(&dir.join(TOPICS))?;
    let by_id: HashMap<&str, &Vec<f64>> = rows.iter().map(|r| (r.doc_id.as_str(), &r.probabilities)).collect();
    let xs: Vec<Vec<f64>> = match cfg.explain.instances {
        ExplainSet::Test => split
            .test
            .iter()
            .map(|id| {
                by_id
                    .get(id.as_str())
                    .map(|x| x.to_vec())
                    .ok_or_else(|| format!("test document {id} has no doc-topic row"))
            })
            .collect::<Result<_, _>>()?,
        ExplainSet::All => rows.iter().map(|r| r.probabilities.clone()).collect(),
    };
    let feature_names: Vec<String> = topics.iter().map(feature_name).collect();
    let report = explain(&forest, &xs, &feature_names)?;
    io::write_json(&dir.join(SHAP), &report)?;
    write_beeswarm_csv(&dir.join(BEESWARM), &report)?;
    io::write_json(&dir.join(DETERMINANTS), &rank_determinants(&report))?;
    Ok(())
}
