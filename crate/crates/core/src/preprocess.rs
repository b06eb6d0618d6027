//! Token cleaning for term weighting and coherence scoring.
//!
//! Stages, in order: lowercase, tokenize on non-alphanumerics, drop stop,
//! custom and common words, drop tokens containing digits, lemmatize, keep
//! lexicon nouns. Each filtering stage can be switched off.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::io::term_lines;

const STOPWORDS: &str = include_str!("../data/stopwords.txt");
const CUSTOM_STOPWORDS: &str = include_str!("../data/custom_stopwords.txt");
const COMMON_WORDS: &str = include_str!("../data/common_words.txt");
const NOUNS: &str = include_str!("../data/nouns.txt");
const LEMMA_EXCEPTIONS: &str = include_str!("../data/lemma_exceptions.txt");

#[derive(Debug, thiserror::Error)]
pub enum PreprocessError {
    #[error("vocabulary is empty (min document frequency {min_df})")]
    EmptyVocabulary { min_df: usize },
    #[error("no documents")]
    NoDocuments,
}

fn lower_set(text: &str) -> BTreeSet<String> {
    term_lines(text).map(str::to_lowercase).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StopList {
    pub standard_stopwords: BTreeSet<String>,
    pub custom_stopwords: BTreeSet<String>,
    pub common_word_list: BTreeSet<String>,
}

impl StopList {
    pub fn bundled() -> Self {
        Self {
            standard_stopwords: lower_set(STOPWORDS),
            custom_stopwords: lower_set(CUSTOM_STOPWORDS),
            common_word_list: lower_set(COMMON_WORDS),
        }
    }

    /// Builds a stoplist from one-term-per-line file contents.
    pub fn from_texts(standard: &str, custom: &str, common: &str) -> Self {
        Self {
            standard_stopwords: lower_set(standard),
            custom_stopwords: lower_set(custom),
            common_word_list: lower_set(common),
        }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.standard_stopwords.contains(token)
            || self.custom_stopwords.contains(token)
            || self.common_word_list.contains(token)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NounLexicon(pub BTreeSet<String>);

impl NounLexicon {
    pub fn bundled() -> Self {
        Self(lower_set(NOUNS))
    }

    pub fn from_text(text: &str) -> Self {
        Self(lower_set(text))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }
}

pub trait Lemmatizer: Send + Sync {
    fn lemma(&self, token: &str) -> String;
}

/// Exception table plus plural-suffix rules.
///
/// With a lexicon attached, a token already in the lexicon is left alone and
/// the first suffix candidate found in the lexicon wins; otherwise the first
/// applicable rule is used.
#[derive(Debug, Clone, Default)]
pub struct RuleLemmatizer {
    exceptions: HashMap<String, String>,
    lexicon: Option<NounLexicon>,
}

impl RuleLemmatizer {
    pub fn bundled() -> Self {
        Self::from_exceptions(LEMMA_EXCEPTIONS)
    }

    /// Parses `surface<TAB>lemma` lines.
    pub fn from_exceptions(text: &str) -> Self {
        let exceptions = term_lines(text)
            .filter_map(|l| l.split_once('\t'))
            .map(|(a, b)| (a.trim().to_lowercase(), b.trim().to_lowercase()))
            .collect();
        Self {
            exceptions,
            lexicon: None,
        }
    }

    pub fn with_lexicon(mut self, lexicon: NounLexicon) -> Self {
        self.lexicon = Some(lexicon);
        self
    }

    fn candidates(token: &str) -> Vec<String> {
        let n = token.chars().count();
        if n <= 3 || token.ends_with("ss") || token.ends_with("us") || token.ends_with("is") {
            return Vec::new();
        }
        let mut out = Vec::new();
        if let Some(stem) = token.strip_suffix("ies") {
            out.push(format!("{stem}y"));
        }
        if token.ends_with("sses")
            || token.ends_with("ches")
            || token.ends_with("shes")
            || token.ends_with("xes")
        {
            out.push(token[..token.len() - 2].to_string());
        }
        if let Some(stem) = token.strip_suffix('s') {
            out.push(stem.to_string());
        }
        out
    }
}

impl Lemmatizer for RuleLemmatizer {
    fn lemma(&self, token: &str) -> String {
        if let Some(l) = self.exceptions.get(token) {
            return l.clone();
        }
        if let Some(lex) = &self.lexicon {
            if lex.contains(token) {
                return token.to_string();
            }
        }
        let cands = Self::candidates(token);
        if let Some(lex) = &self.lexicon {
            if let Some(c) = cands.iter().find(|c| lex.contains(c)) {
                return c.clone();
            }
        }
        cands.into_iter().next().unwrap_or_else(|| token.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(default)]
pub struct PreprocessConfig {
    pub drop_stopwords: bool,
    pub drop_numeric: bool,
    pub lemmatize: bool,
    pub nouns_only: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            drop_stopwords: true,
            drop_numeric: true,
            lemmatize: true,
            nouns_only: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenDoc {
    pub doc_id: String,
    pub tokens: Vec<String>,
    pub empty_after_preprocess: bool,
}

pub struct Preprocessor {
    pub stoplist: StopList,
    pub lemmatizer: Box<dyn Lemmatizer>,
    pub nouns: NounLexicon,
    pub config: PreprocessConfig,
}

impl Preprocessor {
    /// Bundled stoplists, lexicon, and lexicon-aware rule lemmatizer.
    pub fn bundled(config: PreprocessConfig) -> Self {
        let nouns = NounLexicon::bundled();
        Self {
            stoplist: StopList::bundled(),
            lemmatizer: Box::new(RuleLemmatizer::bundled().with_lexicon(nouns.clone())),
            nouns,
            config,
        }
    }

    pub fn preprocess_doc(&self, doc_id: &str, text: &str) -> TokenDoc {
        let c = &self.config;
        let lower = text.to_lowercase();
        let tokens: Vec<String> = lower
            .split(|ch: char| !ch.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .filter(|t| !(c.drop_stopwords && self.stoplist.contains(t)))
            .filter(|t| !(c.drop_numeric && t.chars().any(|ch| ch.is_numeric())))
            .map(|t| {
                if c.lemmatize {
                    self.lemmatizer.lemma(t)
                } else {
                    t.to_string()
                }
            })
            // a lemma can land on a stopword ("its" -> "it")
            .filter(|t| !(c.drop_stopwords && self.stoplist.contains(t)))
            .filter(|t| !(c.nouns_only && !self.nouns.contains(t)))
            .collect();
        TokenDoc {
            doc_id: doc_id.to_string(),
            empty_after_preprocess: tokens.is_empty(),
            tokens,
        }
    }

    pub fn preprocess_all<'a, I>(&self, docs: I) -> Vec<TokenDoc>
    where
        I: IntoParallelIterator<Item = (&'a str, &'a str)>,
        I::Iter: IndexedParallelIterator,
    {
        docs.into_par_iter()
            .map(|(id, text)| self.preprocess_doc(id, text))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermStats {
    pub term: String,
    pub document_frequency: usize,
    pub corpus_frequency: usize,
}

/// Term table; `term_id` is the position in `terms`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<TermStats>", into = "Vec<TermStats>")]
pub struct Vocabulary {
    terms: Vec<TermStats>,
    index: HashMap<String, usize>,
}

impl From<Vec<TermStats>> for Vocabulary {
    fn from(terms: Vec<TermStats>) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.term.clone(), i))
            .collect();
        Self { terms, index }
    }
}

impl From<Vocabulary> for Vec<TermStats> {
    fn from(v: Vocabulary) -> Self {
        v.terms
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, id: usize) -> &str {
        &self.terms[id].term
    }

    pub fn stats(&self, id: usize) -> &TermStats {
        &self.terms[id]
    }

    pub fn terms(&self) -> &[TermStats] {
        &self.terms
    }
}

/// Vocabulary over terms with document frequency ≥ `min_document_frequency`;
/// ids follow first occurrence.
pub fn build_vocabulary(
    docs: &[TokenDoc],
    min_document_frequency: usize,
) -> Result<Vocabulary, PreprocessError> {
    if docs.is_empty() {
        return Err(PreprocessError::NoDocuments);
    }
    let mut order: Vec<&str> = Vec::new();
    let mut stats: HashMap<&str, (usize, usize)> = HashMap::new();
    for d in docs {
        let mut seen = BTreeSet::new();
        for t in &d.tokens {
            let e = stats.entry(t.as_str()).or_insert_with(|| {
                order.push(t.as_str());
                (0, 0)
            });
            e.1 += 1;
            if seen.insert(t.as_str()) {
                e.0 += 1;
            }
        }
    }
    let terms: Vec<TermStats> = order
        .into_iter()
        .filter_map(|t| {
            let (df, cf) = stats[t];
            (df >= min_document_frequency).then(|| TermStats {
                term: t.to_string(),
                document_frequency: df,
                corpus_frequency: cf,
            })
        })
        .collect();
    if terms.is_empty() {
        return Err(PreprocessError::EmptyVocabulary {
            min_df: min_document_frequency,
        });
    }
    Ok(terms.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pp() -> Preprocessor {
        Preprocessor::bundled(PreprocessConfig::default())
    }

    fn doc(tokens: &[&str]) -> TokenDoc {
        TokenDoc {
            doc_id: String::new(),
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            empty_after_preprocess: tokens.is_empty(),
        }
    }

    #[test]
    fn lemmatizes_to_common_base() {
        assert_eq!(pp().preprocess_doc("d", "accessibility").tokens, ["access"]);
        assert_eq!(pp().preprocess_doc("d", "Accessible").tokens, ["access"]);
    }

    #[test]
    fn domain_terms_and_numbers_vanish() {
        let d = pp().preprocess_doc("d", "app html 123");
        assert!(d.tokens.is_empty());
        assert!(d.empty_after_preprocess);
    }

    #[test]
    fn staged_pipeline_by_hand() {
        // "the", "and" are stopwords; plurals reduce to lexicon nouns.
        assert_eq!(
            pp().preprocess_doc("d", "The devices and the settings").tokens,
            ["device", "setting"]
        );
    }

    #[test]
    fn mixed_alnum_tokens_are_dropped() {
        assert!(pp().preprocess_doc("d", "ios17 v2").tokens.is_empty());
    }

    #[test]
    fn stages_can_be_disabled() {
        let raw = Preprocessor::bundled(PreprocessConfig {
            drop_stopwords: false,
            drop_numeric: false,
            lemmatize: false,
            nouns_only: false,
        });
        assert_eq!(raw.preprocess_doc("d", "The app 42").tokens, ["the", "app", "42"]);
    }

    #[test]
    fn rule_lemmatizer_without_lexicon() {
        let l = RuleLemmatizer::default();
        assert_eq!(l.lemma("batteries"), "battery");
        assert_eq!(l.lemma("watches"), "watch");
        assert_eq!(l.lemma("glasses"), "glass");
        assert_eq!(l.lemma("readings"), "reading");
        assert_eq!(l.lemma("status"), "status");
        assert_eq!(l.lemma("bus"), "bus");
    }

    #[test]
    fn vocabulary_counts() {
        let docs = [doc(&["watch", "sync"]), doc(&["sync", "time"])];
        let v = build_vocabulary(&docs, 1).unwrap();
        let got: Vec<_> = v
            .terms()
            .iter()
            .map(|t| (t.term.as_str(), t.document_frequency))
            .collect();
        assert_eq!(got, [("watch", 1), ("sync", 2), ("time", 1)]);
        assert_eq!(v.id("time"), Some(2));

        let v2 = build_vocabulary(&docs, 2).unwrap();
        assert_eq!(v2.len(), 1);
        assert_eq!(v2.term(0), "sync");
    }

    #[test]
    fn empty_vocabulary() {
        assert!(matches!(
            build_vocabulary(&[doc(&[]), doc(&[])], 1),
            Err(PreprocessError::EmptyVocabulary { .. })
        ));
    }

    #[test]
    fn vocabulary_serde_rebuilds_index() {
        let v = build_vocabulary(&[doc(&["a", "b", "a"])], 1).unwrap();
        let back: Vocabulary = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(back.id("b"), Some(1));
        assert_eq!(back.stats(0).corpus_frequency, 2);
    }

    fn text_strategy() -> impl Strategy<Value = String> {
        let words = prop::sample::select(vec![
            "the", "devices", "app", "Settings", "battery", "batteries", "its", "42", "glasses",
            "accessibility", "watches", "sync", "doctors", "x1", "readings", "ÄRZTE", "news",
        ]);
        prop::collection::vec(words, 0..20).prop_map(|w| w.join(" "))
    }

    proptest! {
        #[test]
        fn idempotent_and_clean(text in text_strategy()) {
            let p = pp();
            let once = p.preprocess_doc("d", &text);
            let twice = p.preprocess_doc("d", &once.tokens.join(" "));
            prop_assert_eq!(&once, &twice);
            for t in &once.tokens {
                prop_assert!(!t.chars().any(|c| c.is_numeric()));
                prop_assert!(!p.stoplist.contains(t));
            }
        }

        #[test]
        fn vocabulary_invariants(docs in prop::collection::vec(prop::collection::vec("[a-d]", 0..6), 1..10)) {
            let docs: Vec<TokenDoc> = docs.iter().map(|d| doc(&d.iter().map(String::as_str).collect::<Vec<_>>())).collect();
            if let Ok(v) = build_vocabulary(&docs, 1) {
                for t in v.terms() {
                    prop_assert!(t.document_frequency <= docs.len());
                    prop_assert!(t.corpus_frequency >= t.document_frequency);
                }
            }
        }
    }
}
