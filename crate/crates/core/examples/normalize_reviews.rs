//! Language identification and translation. A local service stands in for
//! the translation backend; it substitutes words from a small dictionary.

use std::sync::Arc;

use chrono::Utc;
use review_insight::fixture::translator;
use review_insight::harvest::ReviewRecord;
use review_insight::http::UreqClient;
use review_insight::normalize::{
    bundled_profiles, detect_language, filter_corpus, normalize_reviews, CachingTranslator, HttpTranslator,
    UntranslatedPolicy,
};

fn review(id: &str, title: &str, body: &str) -> ReviewRecord {
    ReviewRecord {
        review_id: id.into(),
        app_id: "101".into(),
        country: "us".into(),
        title: title.into(),
        body: body.into(),
        rating: 3,
        author_key: None,
        fetched_at: Utc::now(),
    }
}

fn main() {
    let profiles = bundled_profiles();
    let samples = [
        "The cuff connects quickly and my readings are always in the history",
        "Die Manschette verbindet sich schnell und die Werte sind immer gespeichert",
        "La aplicación no guarda las mediciones de la presión arterial",
        "Le brassard se connecte rapidement et les mesures sont enregistrées",
        "ok",
    ];
    for s in samples {
        let d = detect_language(s, &profiles, 10);
        println!("{:<4} {:.2}  {s}", d.language, d.confidence);
    }

    let dictionary = [("aplicación", "app"), ("guarda", "saves"), ("mediciones", "measurements"), ("presión", "pressure")]
        .into_iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
    let server = translator(dictionary, false);
    let t = CachingTranslator::new(HttpTranslator::new(
        format!("{}/translate", server.base_url()),
        Arc::new(UreqClient::default()),
    ));
    let reviews = vec![
        review("1", "Solid", "The cuff connects quickly and my readings are always in the history, which my doctor likes a lot when we look at trends together every month"),
        review("2", "Mala", "La aplicación no guarda las mediciones de la presión arterial y tengo que escribir todo a mano en un cuaderno, es muy frustrante para mí"),
        review("3", "Short", "Works fine"),
    ];
    let (normed, stats) = normalize_reviews(&reviews, &profiles, Some(&t), UntranslatedPolicy::Drop);
    println!("{stats:?}");
    for n in &normed {
        println!("[{}] {} words: {}", n.detected_language, n.word_count, n.english_text());
    }
    let kept = filter_corpus(normed, 25).expect("some reviews are long enough");
    println!("{} reviews have at least 25 words", kept.len());
}
