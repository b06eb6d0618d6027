//! Score a topic model at every reachable topic count and pick one.

use review_insight::embed::fallback_embed;
use review_insight::preprocess::{PreprocessConfig, Preprocessor};
use review_insight::quality::{npmi_coherence, select_topic_count, sweep_topic_counts, topic_diversity, CooccurrenceStats};
use review_insight::synth::{review_corpus, CorpusSpec};
use review_insight::topics::build_topic_model;

fn main() {
    let corpus = review_corpus(&CorpusSpec {
        reviews: 300,
        ..Default::default()
    });
    let texts: Vec<String> = corpus.reviews.iter().map(|r| format!("{} {}", r.title, r.body)).collect();
    let ids: Vec<String> = corpus.reviews.iter().map(|r| r.review_id.clone()).collect();
    let p = Preprocessor::bundled(PreprocessConfig::default());
    let docs: Vec<_> = ids.iter().zip(&texts).map(|(id, t)| p.preprocess_doc(id, t)).collect();
    let vectors = fallback_embed(&ids, &texts, 64, (3, 5)).unwrap().vectors;
    // split each generator topic in two so the sweep has something to merge
    let labels: Vec<i64> = corpus.topics.iter().enumerate().map(|(i, &t)| (2 * t + i % 2) as i64).collect();
    let model = build_topic_model(&docs, &labels, &vectors, 10, false).unwrap();

    let stats = CooccurrenceStats::from_docs(&docs);
    let words = model.word_lists();
    println!(
        "{} topics: NPMI {:.4}, diversity {:.3}",
        words.len(),
        npmi_coherence(&words, &stats, 10).unwrap(),
        topic_diversity(&words, 10).unwrap()
    );
    let sweep = sweep_topic_counts(&model, (2, 10), &stats, 10).unwrap();
    for s in &sweep {
        println!("{:>3} topics: NPMI {:.4}, diversity {:.3}", s.topic_count, s.coherence, s.diversity);
    }
    println!("selected {} topics", select_topic_count(&sweep, 0.5, (2, 10)).unwrap());
}
