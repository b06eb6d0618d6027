use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use review_insight::harvest::{
    filter_apps, harvest_reviews, AppRecord, HarvestManifest, Harvester, ReviewRecord, ScreeningReport,
};
use review_insight::http::{SystemClock, UreqClient};
use review_insight::io;
use review_insight::pipeline::{
    doc_id, run_pipeline, LiveSource, PipelineConfig, PipelineError, RunOptions, SourceConfig, Stage, StageRange,
};

#[derive(Parser)]
#[command(name = "review-insight", version, about = "App-store reviews to rating determinants")]
struct Cli {
    /// TOML config; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Skip stages whose parameters, inputs and outputs are unchanged.
    #[arg(long, global = true)]
    resume: bool,
    /// Overrides the config's global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a range of stages, `a..b`, `a..`, `..b` or a single name.
    Run {
        #[arg(long, default_value = "harvest..report")]
        stages: String,
    },
    /// Collect reviews (the configured source), or search and page feeds by hand.
    Harvest {
        #[command(subcommand)]
        step: Option<HarvestStep>,
    },
    Normalize,
    Preprocess,
    Embed,
    Reduce,
    Cluster,
    Topics,
    Quality,
    /// Apply the topic-to-dimension mapping (writes a template when missing).
    Map,
    Classify,
    Explain,
    Report,
    /// Print the default config as TOML, or its JSON schema.
    Config {
        #[arg(long)]
        schema: bool,
    },
}

#[derive(Subcommand)]
enum HarvestStep {
    /// Search the storefronts and screen the results.
    Search {
        #[arg(long, num_args = 1.., required = true)]
        terms: Vec<String>,
        #[arg(long, num_args = 1..)]
        countries: Vec<String>,
        /// Directory for apps.jsonl and screening.json (default: work_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Page through the review feeds of screened apps.
    Reviews {
        /// apps.jsonl from `harvest search`.
        #[arg(long)]
        apps: PathBuf,
        #[arg(long, num_args = 1..)]
        countries: Vec<String>,
        #[arg(long)]
        auto_keep_flagged: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn stage_of(c: &Command) -> Option<Stage> {
    Some(match c {
        Command::Harvest { step: None } => Stage::Harvest,
        Command::Normalize => Stage::Normalize,
        Command::Preprocess => Stage::Preprocess,
        Command::Embed => Stage::Embed,
        Command::Reduce => Stage::Reduce,
        Command::Cluster => Stage::Cluster,
        Command::Topics => Stage::Topics,
        Command::Quality => Stage::Quality,
        Command::Map => Stage::Map,
        Command::Classify => Stage::Classify,
        Command::Explain => Stage::Explain,
        Command::Report => Stage::Report,
        _ => return None,
    })
}

fn live(cfg: &PipelineConfig) -> LiveSource {
    match &cfg.source {
        SourceConfig::Live(l) => l.clone(),
        _ => LiveSource::default(),
    }
}

fn harvester(l: &LiveSource) -> Result<Harvester, Box<dyn std::error::Error>> {
    let salt = match &l.salt {
        Some(s) => s.clone(),
        None => std::env::var("REVIEW_INSIGHT_SALT").map_err(|_| "set source.salt or REVIEW_INSIGHT_SALT")?,
    };
    Ok(Harvester::new(
        l.endpoints.clone(),
        Arc::new(UreqClient::default()),
        Arc::new(SystemClock),
        l.rate_limit_per_minute,
        salt,
    ))
}

fn harvest_step(cfg: &PipelineConfig, step: HarvestStep, resume: bool) -> Result<(), Box<dyn std::error::Error>> {
    let mut l = live(cfg);
    match step {
        HarvestStep::Search { terms, countries, out } => {
            l.query.terms = terms;
            if !countries.is_empty() {
                l.query.countries = countries;
            }
            let dir = out.unwrap_or_else(|| cfg.work_dir.clone());
            let mpath = dir.join("harvest_manifest.json");
            let mut manifest = HarvestManifest::load_or_default(&mpath)?;
            let apps = harvester(&l)?.search_apps(&l.query, &mut manifest)?;
            manifest.save(&mpath)?;
            let (kept, screening) = filter_apps(&apps, &l.query);
            io::write_jsonl(&dir.join("apps.jsonl"), &kept)?;
            io::write_json(&dir.join("screening.json"), &screening)?;
            let flagged = screening.flagged().count();
            println!("{} apps found, {} kept, {flagged} awaiting wearable confirmation", apps.len(), kept.len());
        }
        HarvestStep::Reviews { apps, countries, auto_keep_flagged, out } => {
            let dir = out.unwrap_or_else(|| cfg.work_dir.clone());
            let app_list: Vec<AppRecord> = io::read_jsonl(&apps)?;
            let screening_path = apps.with_file_name("screening.json");
            let screening: Option<ScreeningReport> =
                if screening_path.exists() { Some(io::read_json(&screening_path)?) } else { None };
            let mpath = dir.join("harvest_manifest.json");
            let mut manifest = if resume { HarvestManifest::load_or_default(&mpath)? } else { HarvestManifest::default() };
            let reviews_path = dir.join("reviews.jsonl");
            let prior: Vec<ReviewRecord> =
                if resume && reviews_path.exists() { io::read_jsonl(&reviews_path)? } else { Vec::new() };
            let cs = (!countries.is_empty()).then_some(countries);
            let fresh = harvest_reviews(
                &harvester(&l)?,
                &app_list,
                screening.as_ref(),
                cs.as_deref(),
                auto_keep_flagged || l.auto_keep_flagged,
                &mut manifest,
            );
            manifest.save(&mpath)?;
            let fresh = fresh?;
            let n_new = fresh.len();
            let mut seen = HashSet::new();
            let all: Vec<ReviewRecord> = prior.into_iter().chain(fresh).filter(|r| seen.insert(doc_id(r))).collect();
            io::write_jsonl(&reviews_path, &all)?;
            println!("{n_new} new reviews, {} in {}", all.len(), reviews_path.display());
        }
    }
    Ok(())
}

fn load(path: Option<&Path>, seed: Option<u64>) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let cfg = match load(cli.config.as_deref(), cli.seed) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result: Result<(), Box<dyn std::error::Error>> = match cli.command {
        Command::Config { schema } => {
            if schema {
                println!("{}", serde_json::to_string_pretty(&PipelineConfig::schema()).expect("schema is JSON"));
            } else {
                print!("{}", cfg.to_toml());
            }
            Ok(())
        }
        Command::Harvest { step: Some(step) } => harvest_step(&cfg, step, cli.resume),
        ref c => {
            let range = match c {
                Command::Run { stages } => stages.parse(),
                c => Ok(StageRange::single(stage_of(c).expect("stage command"))),
            };
            range
                .and_then(|r| Ok((r, run_pipeline(&cfg, r, RunOptions { resume: cli.resume })?)))
                .map(|(range, m)| {
                    for r in m.stages.iter().filter(|r| range.stages().contains(&r.stage)) {
                        println!("{:<10} {:?} {} ms", r.stage.name(), r.status, r.wall_time_ms);
                    }
                })
                .map_err(Into::into)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            // a halted mapping stage is an expected stop, not a crash
            if matches!(e.downcast_ref::<PipelineError>(), Some(PipelineError::MappingRequired { .. })) {
                ExitCode::from(3)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
