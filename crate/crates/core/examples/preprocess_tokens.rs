//! Token cleaning for term weighting: stopwords, numbers, lemmas, nouns only.

use review_insight::preprocess::{build_vocabulary, PreprocessConfig, Preprocessor};

fn main() {
    let texts = [
        ("r1", "The cuffs weren't pairing with my phone after the 2.3 update, batteries drained in days"),
        ("r2", "Great app! Readings sync to my watch and the charts help my doctor"),
        ("r3", "It is what it is"),
    ];
    for config in [
        PreprocessConfig::default(),
        PreprocessConfig {
            nouns_only: false,
            ..Default::default()
        },
    ] {
        let p = Preprocessor::bundled(config);
        println!("{config:?}");
        let docs = p.preprocess_all(texts.to_vec());
        for d in &docs {
            println!("  {} {:?}{}", d.doc_id, d.tokens, if d.empty_after_preprocess { " (empty)" } else { "" });
        }
        let vocab = build_vocabulary(&docs, 1).expect("documents");
        let terms: Vec<String> = vocab
            .terms()
            .iter()
            .map(|t| format!("{}:{}/{}", t.term, t.document_frequency, t.corpus_frequency))
            .collect();
        println!("  vocabulary {}", terms.join(" "));
    }
}
