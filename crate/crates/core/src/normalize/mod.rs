//! Language detection, translation to English, and length filtering.

mod langid;
mod translate;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::harvest::ReviewRecord;

pub use langid::{
    bundled_profiles, detect_language, ranked_trigrams, Detection, LanguageProfile, DEFAULT_MIN_CHARS,
    PROFILE_SIZE, UNKNOWN,
};
pub use translate::{CachingTranslator, DictionaryTranslator, HttpTranslator, TranslationBackendError, Translator};

pub const DEFAULT_MIN_WORDS: usize = 25;

#[derive(Debug, thiserror::Error)]
pub enum NormalizeError {
    #[error("no review has at least {min_words} words")]
    EmptyCorpus { min_words: usize },
    #[error(transparent)]
    Translation(#[from] TranslationBackendError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedReview {
    pub review: ReviewRecord,
    pub detected_language: String,
    pub english_title: String,
    pub english_body: String,
    pub translated: bool,
    pub word_count: usize,
}

impl NormalizedReview {
    /// Title and body joined by a single space (the embedding input).
    pub fn english_text(&self) -> String {
        match (self.english_title.is_empty(), self.english_body.is_empty()) {
            (true, _) => self.english_body.clone(),
            (_, true) => self.english_title.clone(),
            _ => format!("{} {}", self.english_title, self.english_body),
        }
    }
}

/// What to do with a review whose translation failed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum UntranslatedPolicy {
    #[default]
    Drop,
    KeepOriginal,
}

/// Whitespace-delimited words after NFKC normalization.
pub fn word_count(text: &str) -> usize {
    text.nfkc().collect::<String>().split_whitespace().count()
}

pub fn review_length(review: &NormalizedReview) -> usize {
    word_count(&review.english_title) + word_count(&review.english_body)
}

fn passthrough(review: &ReviewRecord, language: &str) -> NormalizedReview {
    let mut n = NormalizedReview {
        review: review.clone(),
        detected_language: language.to_string(),
        english_title: review.title.clone(),
        english_body: review.body.clone(),
        translated: false,
        word_count: 0,
    };
    n.word_count = review_length(&n);
    n
}

/// English and undetected reviews pass through; others go to the backend.
pub fn translate_review(
    review: &ReviewRecord,
    language: &str,
    translator: Option<&dyn Translator>,
) -> Result<NormalizedReview, TranslationBackendError> {
    if language == "en" || language == UNKNOWN {
        return Ok(passthrough(review, language));
    }
    let translator =
        translator.ok_or_else(|| TranslationBackendError("no translation backend configured".into()))?;
    let title = if review.title.trim().is_empty() {
        String::new()
    } else {
        translator.translate(&review.title, language)?
    };
    let body = if review.body.trim().is_empty() {
        String::new()
    } else {
        translator.translate(&review.body, language)?
    };
    let mut n = NormalizedReview {
        review: review.clone(),
        detected_language: language.to_string(),
        english_title: title,
        english_body: body,
        translated: true,
        word_count: 0,
    };
    n.word_count = review_length(&n);
    Ok(n)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NormalizeStats {
    pub total: usize,
    pub translated: usize,
    pub dropped_untranslated: usize,
    pub kept_untranslated: usize,
    pub languages: std::collections::BTreeMap<String, usize>,
}

/// Detects, translates, and applies the untranslated-review policy. Order is preserved.
pub fn normalize_reviews(
    reviews: &[ReviewRecord],
    profiles: &[LanguageProfile],
    translator: Option<&dyn Translator>,
    policy: UntranslatedPolicy,
) -> (Vec<NormalizedReview>, NormalizeStats) {
    let results: Vec<(String, Result<NormalizedReview, TranslationBackendError>)> = reviews
        .par_iter()
        .map(|r| {
            let text = format!("{} {}", r.title, r.body);
            let lang = detect_language(&text, profiles, DEFAULT_MIN_CHARS).language;
            let res = translate_review(r, &lang, translator);
            (lang, res)
        })
        .collect();
    let mut stats = NormalizeStats {
        total: reviews.len(),
        ..Default::default()
    };
    let mut out = Vec::with_capacity(reviews.len());
    for (r, (lang, res)) in reviews.iter().zip(results) {
        *stats.languages.entry(lang.clone()).or_default() += 1;
        match res {
            Ok(n) => {
                stats.translated += usize::from(n.translated);
                out.push(n);
            }
            Err(e) => match policy {
                UntranslatedPolicy::Drop => {
                    log::warn!("dropping review {} ({lang}): {e}", r.review_id);
                    stats.dropped_untranslated += 1;
                }
                UntranslatedPolicy::KeepOriginal => {
                    log::warn!("keeping untranslated review {} ({lang}): {e}", r.review_id);
                    stats.kept_untranslated += 1;
                    out.push(passthrough(r, &lang));
                }
            },
        }
    }
    (out, stats)
}

/// Keeps reviews with at least `min_words` words, preserving order.
pub fn filter_corpus(
    reviews: Vec<NormalizedReview>,
    min_words: usize,
) -> Result<Vec<NormalizedReview>, NormalizeError> {
    let kept: Vec<_> = reviews
        .into_iter()
        .filter(|r| r.word_count >= min_words)
        .collect();
    if kept.is_empty() {
        return Err(NormalizeError::EmptyCorpus { min_words });
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    pub(crate) fn review(title: &str, body: &str) -> ReviewRecord {
        ReviewRecord {
            review_id: "r".into(),
            app_id: "a".into(),
            country: "us".into(),
            title: title.into(),
            body: body.into(),
            rating: 4,
            author_key: None,
            fetched_at: chrono::Utc.timestamp_opt(0, 0).unwrap(),
        }
    }

    fn words(n: usize) -> String {
        vec!["word"; n].join(" ")
    }

    fn normalized(n_words: usize) -> NormalizedReview {
        passthrough(&review("", &words(n_words)), "en")
    }

    #[test]
    fn length_sums_title_and_body() {
        assert_eq!(review_length(&passthrough(&review(&words(3), &words(33)), "en")), 36);
        assert_eq!(review_length(&passthrough(&review("", &words(25)), "en")), 25);
        assert_eq!(review_length(&passthrough(&review("", ""), "en")), 0);
    }

    #[test]
    fn word_count_normalizes_unicode_spaces() {
        // NFKC maps the ideographic space to an ASCII space.
        assert_eq!(word_count("a\u{3000}b  c"), 3);
    }

    #[test]
    fn filter_boundary_at_twenty_five() {
        let kept = filter_corpus(vec![normalized(24), normalized(25), normalized(40)], 25).unwrap();
        let counts: Vec<_> = kept.iter().map(|r| r.word_count).collect();
        assert_eq!(counts, [25, 40]);
    }

    #[test]
    fn nothing_survives_is_an_error() {
        assert!(matches!(
            filter_corpus(vec![normalized(3)], 25),
            Err(NormalizeError::EmptyCorpus { min_words: 25 })
        ));
    }

    #[test]
    fn english_passes_through() {
        let r = review("Great", "Works with my cuff");
        let n = translate_review(&r, "en", None).unwrap();
        assert!(!n.translated);
        assert_eq!(n.english_body, r.body);
        assert_eq!(n.review, r);
    }

    #[test]
    fn german_goes_through_backend() {
        let dict = DictionaryTranslator(
            [("Daten", "data"), ("meine", "my"), ("verliert", "loses")]
                .into_iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
        );
        let r = review("", "verliert meine Daten");
        let n = translate_review(&r, "de", Some(&dict)).unwrap();
        assert!(n.translated);
        assert_eq!(n.english_body, "loses my data");
        assert_eq!(n.review.body, "verliert meine Daten");
    }

    struct Down;
    impl Translator for Down {
        fn translate(&self, _: &str, _: &str) -> Result<String, TranslationBackendError> {
            Err(TranslationBackendError("down".into()))
        }
    }

    #[test]
    fn backend_failure_policy() {
        let reviews = vec![
            review("Bug", "Die App stürzt ständig ab und verliert meine Daten"),
            review("Nice", "This app keeps crashing after the update and loses my readings"),
        ];
        let p = bundled_profiles();
        let (out, stats) = normalize_reviews(&reviews, &p, Some(&Down), UntranslatedPolicy::Drop);
        assert_eq!(out.len(), 1);
        assert_eq!(stats.dropped_untranslated, 1);
        let (out, stats) = normalize_reviews(&reviews, &p, Some(&Down), UntranslatedPolicy::KeepOriginal);
        assert_eq!(out.len(), 2);
        assert!(!out[0].translated);
        assert_eq!(stats.kept_untranslated, 1);
    }

    proptest::proptest! {
        #[test]
        fn filter_keeps_exactly_long_reviews(lens in proptest::collection::vec(0usize..40, 1..30), min in 0usize..40) {
            let input: Vec<_> = lens.iter().map(|&n| normalized(n)).collect();
            match filter_corpus(input.clone(), min) {
                Ok(out) => {
                    let expect: Vec<_> = input.into_iter().filter(|r| r.word_count >= min).collect();
                    proptest::prop_assert_eq!(out, expect);
                }
                Err(_) => proptest::prop_assert!(lens.iter().all(|&n| n < min)),
            }
        }
    }
}
