use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use serde_json::json;

use crate::http::{Clock, HttpClient, RetryPolicy, SystemClock};

#[derive(Debug, Clone, thiserror::Error)]
#[error("translation backend error: {0}")]
pub struct TranslationBackendError(pub String);

/// Translates text into English.
pub trait Translator: Send + Sync {
    fn translate(&self, text: &str, source_language: &str) -> Result<String, TranslationBackendError>;
}

/// HTTP backend: `POST {endpoint}` with `{"text", "source_language"}`,
/// answered by `{"text"}`.
pub struct HttpTranslator {
    pub endpoint: String,
    pub client: Arc<dyn HttpClient>,
    pub clock: Arc<dyn Clock>,
    pub retry: RetryPolicy,
}

impl HttpTranslator {
    pub fn new(endpoint: impl Into<String>, client: Arc<dyn HttpClient>) -> Self {
        Self {
            endpoint: endpoint.into(),
            client,
            clock: Arc::new(SystemClock),
            retry: RetryPolicy::default(),
        }
    }
}

impl Translator for HttpTranslator {
    fn translate(&self, text: &str, source_language: &str) -> Result<String, TranslationBackendError> {
        let body = json!({ "text": text, "source_language": source_language });
        let res = self
            .retry
            .run(self.clock.as_ref(), || self.client.post_json(&self.endpoint, &body))
            .map_err(|e| TranslationBackendError(e.to_string()))?;
        if !(200..300).contains(&res.status) {
            return Err(TranslationBackendError(format!("status {}", res.status)));
        }
        let v: serde_json::Value = serde_json::from_str(&res.body)
            .map_err(|e| TranslationBackendError(format!("malformed response: {e}")))?;
        v["text"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| TranslationBackendError("response lacks \"text\"".into()))
    }
}

/// Memoizes successful translations by `(text, source_language)`.
pub struct CachingTranslator<T> {
    inner: T,
    cache: RwLock<HashMap<(String, String), String>>,
}

impl<T: Translator> CachingTranslator<T> {
    pub fn new(inner: T) -> Self {
        Self {
            inner,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn cached_entries(&self) -> usize {
        self.cache.read().map(|c| c.len()).unwrap_or(0)
    }
}

impl<T: Translator> Translator for CachingTranslator<T> {
    fn translate(&self, text: &str, source_language: &str) -> Result<String, TranslationBackendError> {
        let key = (text.to_string(), source_language.to_string());
        if let Some(hit) = self.cache.read().ok().and_then(|c| c.get(&key).cloned()) {
            return Ok(hit);
        }
        let out = self.inner.translate(text, source_language)?;
        if let Ok(mut c) = self.cache.write() {
            c.insert(key, out.clone());
        }
        Ok(out)
    }
}

/// In-memory dictionary translator, word by word. Useful offline and in tests.
pub struct DictionaryTranslator(pub HashMap<String, String>);

impl Translator for DictionaryTranslator {
    fn translate(&self, text: &str, _source_language: &str) -> Result<String, TranslationBackendError> {
        Ok(text
            .split_whitespace()
            .map(|w| self.0.get(w).cloned().unwrap_or_else(|| w.to_string()))
            .collect::<Vec<_>>()
            .join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Counting(AtomicUsize);
    impl Translator for Counting {
        fn translate(&self, text: &str, _: &str) -> Result<String, TranslationBackendError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Ok(text.to_uppercase())
        }
    }

    #[test]
    fn cache_hits_skip_backend() {
        let t = CachingTranslator::new(Counting(AtomicUsize::new(0)));
        assert_eq!(t.translate("hallo", "de").unwrap(), "HALLO");
        assert_eq!(t.translate("hallo", "de").unwrap(), "HALLO");
        t.translate("hallo", "nl").unwrap();
        assert_eq!(t.inner.0.load(Ordering::SeqCst), 2);
        assert_eq!(t.cached_entries(), 2);
    }
}
