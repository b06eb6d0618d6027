//! The whole staged pipeline on the bundled synthetic corpus. The mapping
//! stage stops for a human; here every topic is assigned a dimension in turn.
//!
//! cargo run --release --example pipeline_run -- [work_dir]

use review_insight::pipeline::{run_pipeline, PipelineConfig, PipelineError, QualityConfig, RunOptions, StageRange};

fn main() -> Result<(), PipelineError> {
    let work_dir = std::env::args().nth(1).unwrap_or_else(|| "pipeline-run".into());
    let cfg = PipelineConfig {
        work_dir: work_dir.into(),
        quality: QualityConfig {
            min_topics: 2,
            max_topics: 20,
            ..Default::default()
        },
        ..Default::default()
    };
    match run_pipeline(&cfg, StageRange::all(), RunOptions { resume: true }) {
        Err(PipelineError::MappingRequired { template, mapping }) => {
            let text = std::fs::read_to_string(&template).expect("template");
            let mut i = 0;
            let filled: Vec<String> = text
                .lines()
                .map(|l| {
                    if l.starts_with('#') {
                        return l.to_string();
                    }
                    i += 1;
                    l.replacen("TODO", &((i - 1) % 10 + 1).to_string(), 1)
                })
                .collect();
            std::fs::write(&mapping, filled.join("\n") + "\n").expect("mapping");
            println!("filled {}", mapping.display());
        }
        other => {
            other?;
        }
    }
    let m = run_pipeline(&cfg, StageRange::all(), RunOptions { resume: true })?;
    for r in &m.stages {
        println!("{:<10} {:?} {} ms", r.stage.name(), r.status, r.wall_time_ms);
    }
    let summary = std::fs::read_to_string(cfg.work_dir.join("report/summary.md")).expect("report");
    print!("{summary}");
    Ok(())
}
