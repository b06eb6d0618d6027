//! Document embeddings: an HTTP embedding service client and a deterministic
//! hashed character n-gram fallback.

use std::hash::Hasher;
use std::sync::Arc;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::http::{Clock, HttpClient, RetryPolicy, SystemClock};

pub const DEFAULT_FALLBACK_DIMENSION: usize = 256;
pub const DEFAULT_NGRAM_RANGE: (usize, usize) = (3, 5);
pub const FALLBACK_BACKEND_ID: &str = "fallback-hashed-char-ngrams";

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("no texts to embed")]
    EmptyInput,
    #[error("embedding backend error: {0}")]
    Backend(String),
    #[error("vector {index} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("vector {index} contains a non-finite value")]
    NonFiniteValue { index: usize },
    #[error("cannot take cosine of a zero vector")]
    ZeroVector,
    #[error("fallback dimension must be at least 8 (got {0})")]
    DimensionTooSmall(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    pub doc_ids: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
    pub dimension: usize,
    pub backend_id: String,
}

impl EmbeddingMatrix {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Checks shape and finiteness.
    pub fn validate(&self) -> Result<(), EmbedError> {
        for (i, v) in self.vectors.iter().enumerate() {
            if v.len() != self.dimension {
                return Err(EmbedError::DimensionMismatch {
                    index: i,
                    expected: self.dimension,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(EmbedError::NonFiniteValue { index: i });
            }
        }
        Ok(())
    }
}

pub trait EmbeddingBackend: Send + Sync {
    fn id(&self) -> String;
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError>;
}

/// Embeds `texts` in batches; row `i` corresponds to `texts[i]`. The first
/// vector fixes the dimension for every later one.
pub fn embed_documents(
    doc_ids: &[String],
    texts: &[String],
    backend: &dyn EmbeddingBackend,
    batch_size: usize,
) -> Result<EmbeddingMatrix, EmbedError> {
    if texts.is_empty() {
        return Err(EmbedError::EmptyInput);
    }
    assert_eq!(doc_ids.len(), texts.len(), "doc ids must align with texts");
    let mut vectors = Vec::with_capacity(texts.len());
    let mut dimension = None;
    for chunk in texts.chunks(batch_size.max(1)) {
        let got = backend.embed_batch(chunk)?;
        if got.len() != chunk.len() {
            return Err(EmbedError::Backend(format!(
                "asked for {} vectors, got {}",
                chunk.len(),
                got.len()
            )));
        }
        for v in got {
            let index = vectors.len();
            let expected = *dimension.get_or_insert(v.len());
            if v.len() != expected {
                return Err(EmbedError::DimensionMismatch {
                    index,
                    expected,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(EmbedError::NonFiniteValue { index });
            }
            vectors.push(v);
        }
    }
    Ok(EmbeddingMatrix {
        doc_ids: doc_ids.to_vec(),
        vectors,
        dimension: dimension.unwrap_or(0),
        backend_id: backend.id(),
    })
}

/// Client for `POST {endpoint}` with `{"texts": [...]}` → `{"vectors": [[...]]}`.
pub struct HttpEmbedder {
    pub endpoint: String,
    pub client: Arc<dyn HttpClient>,
    pub clock: Arc<dyn Clock>,
    pub retry: RetryPolicy,
}

impl HttpEmbedder {
    pub fn new(endpoint: impl Into<String>, client: Arc<dyn HttpClient>) -> Self {
        Self {
            endpoint: endpoint.into(),
            client,
            clock: Arc::new(SystemClock),
            retry: RetryPolicy::default(),
        }
    }
}

impl EmbeddingBackend for HttpEmbedder {
    fn id(&self) -> String {
        format!("http:{}", self.endpoint)
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let body = json!({ "texts": texts });
        let res = self
            .retry
            .run(self.clock.as_ref(), || self.client.post_json(&self.endpoint, &body))
            .map_err(|e| EmbedError::Backend(e.to_string()))?;
        if !(200..300).contains(&res.status) {
            return Err(EmbedError::Backend(format!("status {}", res.status)));
        }
        let v: Value = serde_json::from_str(&res.body)
            .map_err(|e| EmbedError::Backend(format!("malformed response: {e}")))?;
        let rows = v["vectors"]
            .as_array()
            .ok_or_else(|| EmbedError::Backend("response lacks \"vectors\"".into()))?;
        rows.iter()
            .enumerate()
            .map(|(i, row)| {
                let row = row
                    .as_array()
                    .ok_or_else(|| EmbedError::Backend(format!("vector {i} is not an array")))?;
                row.iter()
                    .map(|x| match x {
                        Value::Number(n) => n.as_f64().ok_or(EmbedError::NonFiniteValue { index: i }),
                        // JSON cannot carry NaN/Inf; encoders emit null or strings.
                        Value::Null | Value::String(_) => Err(EmbedError::NonFiniteValue { index: i }),
                        _ => Err(EmbedError::Backend(format!("vector {i} has a non-numeric entry"))),
                    })
                    .collect()
            })
            .collect()
    }
}

/// Signed feature hashing of character n-grams, L2-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FallbackEmbedder {
    pub dimension: usize,
    pub ngram_range: (usize, usize),
}

impl Default for FallbackEmbedder {
    fn default() -> Self {
        Self {
            dimension: DEFAULT_FALLBACK_DIMENSION,
            ngram_range: DEFAULT_NGRAM_RANGE,
        }
    }
}

impl FallbackEmbedder {
    pub fn new(dimension: usize, ngram_range: (usize, usize)) -> Result<Self, EmbedError> {
        if dimension < 8 {
            return Err(EmbedError::DimensionTooSmall(dimension));
        }
        Ok(Self {
            dimension,
            ngram_range,
        })
    }

    pub fn embed_one(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dimension];
        let lower = text.to_lowercase();
        let (lo, hi) = (self.ngram_range.0.max(1), self.ngram_range.1.max(self.ngram_range.0.max(1)));
        for word in lower.split_whitespace() {
            let chars: Vec<char> = std::iter::once(' ')
                .chain(word.chars())
                .chain(std::iter::once(' '))
                .collect();
            for n in lo..=hi {
                for gram in chars.windows(n) {
                    let mut h = FnvHasher::default();
                    for c in gram {
                        h.write_u32(*c as u32);
                    }
                    let hash = h.finish();
                    let bucket = (hash % self.dimension as u64) as usize;
                    let sign = if (hash >> 63) & 1 == 0 { 1.0 } else { -1.0 };
                    v[bucket] += sign;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        } else {
            // Texts without any n-gram map to a fixed unit vector.
            v[0] = 1.0;
        }
        v
    }
}

impl EmbeddingBackend for FallbackEmbedder {
    fn id(&self) -> String {
        format!(
            "{FALLBACK_BACKEND_ID}:d{}:n{}-{}",
            self.dimension, self.ngram_range.0, self.ngram_range.1
        )
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

pub fn fallback_embed(
    doc_ids: &[String],
    texts: &[String],
    dimension: usize,
    ngram_range: (usize, usize),
) -> Result<EmbeddingMatrix, EmbedError> {
    let e = FallbackEmbedder::new(dimension, ngram_range)?;
    embed_documents(doc_ids, texts, &e, texts.len().max(1))
}

pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64, EmbedError> {
    if u.len() != v.len() {
        return Err(EmbedError::DimensionMismatch {
            index: 0,
            expected: u.len(),
            got: v.len(),
        });
    }
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(EmbedError::ZeroVector);
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("d{i}")).collect()
    }

    #[test]
    fn cosine_cases() {
        assert!((cosine_similarity(&[3.0, 4.0], &[3.0, 4.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        // 1 / sqrt(2)
        let c = cosine_similarity(&[1.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((c - 0.70711).abs() < 1e-5);
        assert!(matches!(cosine_similarity(&[0.0, 0.0], &[1.0, 1.0]), Err(EmbedError::ZeroVector)));
    }

    #[test]
    fn fallback_is_deterministic_and_unit_norm() {
        let texts = vec!["the cuff will not sync".to_string(), "the cuff will not sync".to_string(), String::new()];
        let m = fallback_embed(&ids(3), &texts, 64, (3, 5)).unwrap();
        assert_eq!(m.vectors[0], m.vectors[1]);
        for v in &m.vectors {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-9);
        }
        m.validate().unwrap();
    }

    #[test]
    fn fallback_is_stable_across_builds() {
        // Pinned so that a change of hash function or n-gram scheme is noticed:
        // " ab" and "ab " land in the same bucket with the same sign at d = 8.
        let v = FallbackEmbedder::new(8, (3, 3)).unwrap().embed_one("ab");
        assert_eq!(v, [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0]);
        let wide = FallbackEmbedder::new(4096, (3, 3)).unwrap().embed_one("ab");
        let nonzero: Vec<f64> = wide.into_iter().filter(|x| *x != 0.0).collect();
        assert_eq!(nonzero.len(), 2);
        assert!(nonzero.iter().all(|x| (x.abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12));
    }

    #[test]
    fn fallback_rejects_tiny_dimension() {
        assert!(matches!(FallbackEmbedder::new(4, (3, 5)), Err(EmbedError::DimensionTooSmall(4))));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(
            embed_documents(&[], &[], &FallbackEmbedder::default(), 8),
            Err(EmbedError::EmptyInput)
        ));
    }

    #[test]
    fn disjoint_ngrams_are_orthogonal() {
        let e = FallbackEmbedder::new(256, (3, 5)).unwrap();
        let c = cosine_similarity(&e.embed_one("abc"), &e.embed_one("xyz")).unwrap();
        assert_eq!(c, 0.0);
    }
}
