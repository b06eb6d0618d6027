//! c-TF-IDF topics from a synthetic corpus, using the generating topic as the
//! cluster label, then merged down to three topics.

use review_insight::embed::fallback_embed;
use review_insight::preprocess::{PreprocessConfig, Preprocessor};
use review_insight::synth::{review_corpus, CorpusSpec};
use review_insight::topics::{build_topic_model, reduce_topics, topic_table};

fn main() {
    let corpus = review_corpus(&CorpusSpec {
        reviews: 200,
        ..Default::default()
    });
    let texts: Vec<String> = corpus.reviews.iter().map(|r| format!("{} {}", r.title, r.body)).collect();
    let ids: Vec<String> = corpus.reviews.iter().map(|r| r.review_id.clone()).collect();
    let p = Preprocessor::bundled(PreprocessConfig::default());
    let docs: Vec<_> = ids.iter().zip(&texts).map(|(id, t)| p.preprocess_doc(id, t)).collect();
    let vectors = fallback_embed(&ids, &texts, 128, (3, 5)).unwrap().vectors;
    let labels: Vec<i64> = corpus.topics.iter().map(|&t| t as i64).collect();

    let model = build_topic_model(&docs, &labels, &vectors, 6, false).expect("topics");
    for t in topic_table(&model) {
        let words: Vec<String> = t.top_words.iter().map(|w| format!("{} {:.2}", w.word, w.weight)).collect();
        println!("topic {} ({} docs): {}", t.id, t.size, words.join(", "));
    }

    let reduced = reduce_topics(&model, 3, &vectors).expect("reduction");
    for m in &reduced.merge_history {
        println!("merged topic {} into {}", m.source, m.target);
    }
    for t in &reduced.topics {
        let words: Vec<&str> = t.top_words.iter().map(|(w, _)| w.as_str()).collect();
        println!("topic {} ({} docs): {}", t.id, t.size, words.join(", "));
    }
    println!("doc 0 distribution: {:.3?}", reduced.doc_topic[0]);
}
