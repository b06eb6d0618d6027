//! Document embeddings: the hashed character n-gram fallback, and the HTTP
//! client against a local service that returns simple made-up vectors.

use std::sync::Arc;

use review_insight::embed::{cosine_similarity, embed_documents, fallback_embed, HttpEmbedder};
use review_insight::fixture::{embedding_service, EmbeddingMode};
use review_insight::http::UreqClient;

fn main() {
    let texts: Vec<String> = [
        "bluetooth pairing fails and the cuff disconnects",
        "the cuff keeps disconnecting from bluetooth",
        "subscription price is too high for what it offers",
    ]
    .map(String::from)
    .to_vec();
    let ids: Vec<String> = (0..texts.len()).map(|i| format!("d{i}")).collect();

    let m = fallback_embed(&ids, &texts, 256, (3, 5)).expect("fallback");
    println!("{} x {} from {}", m.len(), m.dimension, m.backend_id);
    for i in 0..texts.len() {
        for j in i + 1..texts.len() {
            let c = cosine_similarity(&m.vectors[i], &m.vectors[j]).unwrap();
            println!("cos(d{i}, d{j}) = {c:.3}");
        }
    }

    let server = embedding_service(4, EmbeddingMode::Echo);
    let backend = HttpEmbedder::new(format!("{}/embed", server.base_url()), Arc::new(UreqClient::default()));
    let remote = embed_documents(&ids, &texts, &backend, 2).expect("service");
    println!("{} requests for {} texts: {:?}", server.request_count(), texts.len(), remote.vectors);
}
