//! Rank-order character-trigram language identification.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

/// Number of ranked trigrams kept per profile.
pub const PROFILE_SIZE: usize = 300;
/// Texts with fewer non-whitespace characters are reported as unknown.
pub const DEFAULT_MIN_CHARS: usize = 10;
pub const UNKNOWN: &str = "unknown";

const BUNDLED: &[(&str, &str)] = &[
    ("en", include_str!("../../data/lang/en.txt")),
    ("de", include_str!("../../data/lang/de.txt")),
    ("fr", include_str!("../../data/lang/fr.txt")),
    ("es", include_str!("../../data/lang/es.txt")),
    ("zh", include_str!("../../data/lang/zh.txt")),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageProfile {
    pub language_code: String,
    /// Trigram → rank, ranks consecutive from 0 (most frequent).
    pub trigram_ranks: HashMap<String, usize>,
}

impl LanguageProfile {
    /// Builds a profile from sample text. Returns `None` if the sample has no trigrams.
    pub fn from_sample(language_code: &str, sample: &str, size: usize) -> Option<Self> {
        let ranked = ranked_trigrams(sample, size);
        if ranked.is_empty() {
            return None;
        }
        Some(Self {
            language_code: language_code.to_string(),
            trigram_ranks: ranked.into_iter().enumerate().map(|(i, g)| (g, i)).collect(),
        })
    }

    /// Out-of-place distance of a ranked trigram list against this profile.
    fn distance(&self, ranked: &[String]) -> usize {
        let penalty = self.trigram_ranks.len();
        ranked
            .iter()
            .enumerate()
            .map(|(i, g)| match self.trigram_ranks.get(g) {
                Some(&r) => r.abs_diff(i),
                None => penalty,
            })
            .sum()
    }
}

/// Profiles for en, de, fr, es and zh built from the bundled samples.
pub fn bundled_profiles() -> Vec<LanguageProfile> {
    BUNDLED
        .iter()
        .filter_map(|(code, text)| LanguageProfile::from_sample(code, text, PROFILE_SIZE))
        .collect()
}

/// Lowercased words, each padded with a leading and trailing space; letters only.
fn padded_words(text: &str) -> Vec<Vec<char>> {
    let lower = text.to_lowercase();
    lower
        .split(|c: char| !c.is_alphabetic())
        .filter(|w| !w.is_empty())
        .map(|w| {
            let mut v = Vec::with_capacity(w.len() + 2);
            v.push(' ');
            v.extend(w.chars());
            v.push(' ');
            v
        })
        .collect()
}

/// Trigrams ranked by frequency, ties broken lexicographically, truncated to `size`.
pub fn ranked_trigrams(text: &str, size: usize) -> Vec<String> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for w in padded_words(text) {
        for win in w.windows(3) {
            *counts.entry(win.iter().collect()).or_default() += 1;
        }
    }
    let mut v: Vec<(String, usize)> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v.into_iter().take(size).map(|(g, _)| g).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub language: String,
    pub confidence: f64,
}

impl Detection {
    fn unknown() -> Self {
        Self {
            language: UNKNOWN.to_string(),
            confidence: 0.0,
        }
    }
}

/// Picks the profile with the smallest out-of-place distance.
///
/// Confidence is the runner-up's relative excess distance, `(d2 - d1) / d2`,
/// rescaled so that a runner-up at twice the winner's distance gives 1.0.
pub fn detect_language(text: &str, profiles: &[LanguageProfile], min_chars: usize) -> Detection {
    let n_chars = text.chars().filter(|c| !c.is_whitespace()).count();
    if n_chars < min_chars || profiles.is_empty() {
        return Detection::unknown();
    }
    let ranked = ranked_trigrams(text, PROFILE_SIZE);
    if ranked.is_empty() {
        return Detection::unknown();
    }
    let mut scored: Vec<(usize, &str)> = profiles
        .iter()
        .map(|p| (p.distance(&ranked), p.language_code.as_str()))
        .collect();
    scored.sort();
    let (d1, lang) = scored[0];
    let confidence = match scored.get(1) {
        None => 1.0,
        Some(&(d2, _)) if d2 == 0 => 0.0,
        Some(&(d2, _)) => (2.0 * (d2 - d1) as f64 / d2 as f64).min(1.0),
    };
    Detection {
        language: lang.to_string(),
        confidence,
    }
}
