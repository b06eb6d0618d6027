mod common;

use common::fixture_run::{fill_mapping, recovery, run_to_completion, snapshot, synthetic_config};
use review_insight::io;
use review_insight::pipeline::{
    emit_report, run_pipeline, PipelineConfig, PipelineError, RunManifest, RunOptions, Stage, StageRange,
    StageStatus, REPORT_DIR, REPORT_FILES,
};

fn statuses(m: &RunManifest) -> Vec<(Stage, StageStatus)> {
    m.stages.iter().map(|r| (r.stage, r.status)).collect()
}

#[test]
fn synthetic_run_recovers_planted_topics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synthetic_config(dir.path());
    run_to_completion(&cfg);
    let w = dir.path();
    let r = recovery(w);
    assert!(r.n_clusters >= 5, "{} clusters", r.n_clusters);
    assert!(r.purity >= 0.8);
    assert!(r.top3.contains(&1) && r.top3.contains(&3), "{:?}", r.top3);

    let summary: serde_json::Value = io::read_json(&w.join("report/summary.json")).unwrap();
    let names = |k: &str| -> Vec<String> {
        summary["determinants"][k]
            .as_array()
            .unwrap()
            .iter()
            .map(|d| d["name"].as_str().unwrap().to_string())
            .collect()
    };
    // generator topic 1 is planted low, 3 high
    let name_of = |g: i64| r.names[&g].clone();
    assert!(names("high_rating").contains(&name_of(3)));
    assert!(names("low_rating").contains(&name_of(1)));
    let md = std::fs::read_to_string(w.join("report/summary.md")).unwrap();
    assert!(md.contains("Determinants of high ratings") && md.contains(&name_of(3)));
}

#[test]
fn map_stage_halts_with_template_then_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synthetic_config(dir.path());
    let err = run_pipeline(&cfg, StageRange::all(), RunOptions::default()).unwrap_err();
    let PipelineError::MappingRequired { template, .. } = err else {
        panic!("{err:?}")
    };
    let text = std::fs::read_to_string(&template).unwrap();
    assert!(text.contains("TODO") && text.contains("Content/information validity"));
    let m = RunManifest::load_or_default(dir.path()).unwrap();
    assert_eq!(m.record(Stage::Map).unwrap().status, StageStatus::Halted);
    assert!(m.record(Stage::Classify).is_none());

    fill_mapping(&cfg);
    let m = run_pipeline(&cfg, StageRange::all(), RunOptions { resume: true }).unwrap();
    let s = statuses(&m);
    for (stage, status) in &s {
        let expected = if *stage < Stage::Map { StageStatus::Skipped } else { StageStatus::Completed };
        assert_eq!(*status, expected, "{stage}");
    }
    assert!(dir.path().join("dimensions.json").is_file());
}

#[test]
fn resume_skips_unchanged_stages() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synthetic_config(dir.path());
    run_pipeline(&cfg, "..cluster".parse().unwrap(), RunOptions::default()).unwrap();
    let again = run_pipeline(&cfg, "..cluster".parse().unwrap(), RunOptions { resume: true }).unwrap();
    assert!(again.stages.iter().all(|r| r.status == StageStatus::Skipped && r.wall_time_ms == 0));

    // A changed clustering parameter reruns clustering only.
    let mut changed = cfg.clone();
    changed.cluster.min_cluster_size = 12;
    let m = run_pipeline(&changed, "..cluster".parse().unwrap(), RunOptions { resume: true }).unwrap();
    assert_eq!(m.record(Stage::Embed).unwrap().status, StageStatus::Skipped);
    assert_eq!(m.record(Stage::Cluster).unwrap().status, StageStatus::Completed);

    // A tampered output is not trusted.
    std::fs::write(dir.path().join("layout.json"), "{}").unwrap();
    let m = run_pipeline(&changed, "..cluster".parse().unwrap(), RunOptions { resume: true }).unwrap();
    assert_eq!(m.record(Stage::Reduce).unwrap().status, StageStatus::Completed);
}

#[test]
fn stage_subset_needs_its_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synthetic_config(dir.path());
    match run_pipeline(&cfg, "cluster..topics".parse().unwrap(), RunOptions::default()) {
        Err(PipelineError::MissingArtifacts { stage, missing }) => {
            assert_eq!(stage, Stage::Cluster);
            assert_eq!(missing, ["layout.json"]);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn missing_embedding_backend_fails_before_any_stage() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = synthetic_config(dir.path());
    cfg.embed.allow_fallback = false;
    assert!(matches!(
        run_pipeline(&cfg, StageRange::all(), RunOptions::default()),
        Err(PipelineError::Config(_))
    ));
    assert!(!dir.path().join("reviews.jsonl").exists());
}

#[test]
fn report_needs_the_classifier() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synthetic_config(dir.path());
    run_pipeline(&cfg, "..quality".parse().unwrap(), RunOptions::default()).unwrap();
    match emit_report(dir.path(), 3) {
        Err(PipelineError::MissingArtifacts { missing, .. }) => {
            assert!(missing.contains(&"eval.json".to_string()), "{missing:?}")
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn every_output_has_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synthetic_config(dir.path());
    let m = run_to_completion(&cfg);
    for f in REPORT_FILES {
        let p = dir.path().join(REPORT_DIR).join(format!("{f}.prov.json"));
        let prov: serde_json::Value = io::read_json(&p).unwrap();
        assert_eq!(prov["stage"], "report");
        assert_eq!(prov["params_hash"], m.record(Stage::Report).unwrap().params_hash.as_str());
    }
    let prov: serde_json::Value = io::read_json(&dir.path().join("clusters.json.prov.json")).unwrap();
    assert_eq!(prov["params_hash"], m.record(Stage::Cluster).unwrap().params_hash.as_str());
}

#[test]
fn config_file_round_trip_and_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig {
        work_dir: "out".into(),
        ..PipelineConfig::default()
    };
    let p = dir.path().join("run.toml");
    std::fs::write(&p, cfg.to_toml()).unwrap();
    let loaded = PipelineConfig::load(&p).unwrap();
    assert_eq!(loaded.work_dir, dir.path().join("out"));
    assert_eq!(loaded.mapping_path(), dir.path().join("out").join("mapping.tsv"));
}

#[test]
fn identical_configs_give_identical_artifacts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_to_completion(&synthetic_config(a.path()));
    run_to_completion(&synthetic_config(b.path()));
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    assert_eq!(sa.keys().collect::<Vec<_>>(), sb.keys().collect::<Vec<_>>());
    for (name, bytes) in &sa {
        assert!(bytes == &sb[name], "{name} differs");
    }
    let report = a.path().join(REPORT_DIR);
    let before = snapshot(&report);
    emit_report(a.path(), 3).unwrap();
    assert_eq!(snapshot(&report), before);
}
