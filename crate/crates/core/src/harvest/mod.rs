//! Storefront harvesting: app search, screening, review-feed paging.
//!
//! Storefront limits enforced here: at most 200 search results per
//! (term, country), at most 10 feed pages of 50 reviews (500 reviews) per
//! (app, country), and a shared request budget (20 per minute by default).

mod feed;
mod limiter;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use hmac::{Hmac, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;

use crate::http::{encode_query, Clock, HttpClient, RetryPolicy, TransportError};
use crate::io;

pub use feed::{parse_feed, FeedAuthor, FeedEntry, FeedPage, Label, SearchResponse, SearchResult};
pub use limiter::{max_in_window, RateLimiter};

pub const SEARCH_RESULT_CAP: usize = 200;
pub const MAX_PAGES: u32 = 10;
pub const PAGE_SIZE: usize = 50;
pub const MAX_REVIEWS_PER_FEED: u32 = 500;
pub const GAMES_GENRE_ID: u32 = 6014;

const DEFAULT_COUNTRIES: &str = include_str!("../../data/countries.txt");
const DEFAULT_KEYWORDS: &str = include_str!("../../data/wearable_keywords.txt");

#[derive(Debug, thiserror::Error)]
pub enum HarvestError {
    #[error("query has no search terms")]
    EmptyQuery,
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("network error: {0}")]
    Network(#[from] TransportError),
    #[error(transparent)]
    Io(#[from] io::IoError),
}

pub fn default_countries() -> Vec<String> {
    io::term_lines(DEFAULT_COUNTRIES).map(str::to_string).collect()
}

pub fn default_wearable_keywords() -> Vec<String> {
    io::term_lines(DEFAULT_KEYWORDS).map(str::to_string).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct AppQuery {
    pub terms: Vec<String>,
    pub countries: Vec<String>,
    pub wearable_keywords: Vec<String>,
    pub min_global_ratings: u64,
    pub excluded_genre_ids: BTreeSet<u32>,
}

impl Default for AppQuery {
    fn default() -> Self {
        Self {
            terms: vec!["blood pressure".into(), "hypertension".into()],
            countries: default_countries(),
            wearable_keywords: default_wearable_keywords(),
            min_global_ratings: 100,
            excluded_genre_ids: [GAMES_GENRE_ID].into_iter().collect(),
        }
    }
}

impl AppQuery {
    pub fn validate(&self) -> Result<(), HarvestError> {
        if self.terms.iter().all(|t| t.trim().is_empty()) {
            return Err(HarvestError::EmptyQuery);
        }
        if self.countries.is_empty() {
            return Err(HarvestError::InvalidQuery("no storefront countries".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppRecord {
    pub app_id: String,
    pub name: String,
    pub genre_id: u32,
    pub rating_count: u64,
    pub description: String,
    pub company_url: String,
    pub price: f64,
    pub supported_countries: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub review_id: String,
    pub app_id: String,
    pub country: String,
    pub title: String,
    pub body: String,
    pub rating: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author_key: Option<String>,
    pub fetched_at: DateTime<Utc>,
}

/// Author field of a review before anonymization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Author {
    Name(String),
    /// Already-hashed key; passes through anonymization unchanged.
    Pseudonym(String),
}

/// A review as it comes off the feed. Deliberately not serializable: author
/// names exist only in memory until [`anonymize_review`] replaces them.
#[derive(Debug, Clone, PartialEq)]
pub struct RawReview {
    pub review_id: String,
    pub app_id: String,
    pub country: String,
    pub title: String,
    pub body: String,
    pub rating: u8,
    pub author: Option<Author>,
    pub fetched_at: DateTime<Utc>,
}

impl From<ReviewRecord> for RawReview {
    fn from(r: ReviewRecord) -> Self {
        Self {
            review_id: r.review_id,
            app_id: r.app_id,
            country: r.country,
            title: r.title,
            body: r.body,
            rating: r.rating,
            author: r.author_key.map(Author::Pseudonym),
            fetched_at: r.fetched_at,
        }
    }
}

/// Replaces the author name with a salted HMAC-SHA256 key.
pub fn anonymize_review(raw: RawReview, salt: &str) -> ReviewRecord {
    let author_key = raw.author.map(|a| match a {
        Author::Pseudonym(k) => k,
        Author::Name(name) => {
            let mut mac = Hmac::<Sha256>::new_from_slice(salt.as_bytes())
                .expect("hmac accepts any key length");
            mac.update(name.as_bytes());
            hex::encode(mac.finalize().into_bytes())
        }
    });
    ReviewRecord {
        review_id: raw.review_id,
        app_id: raw.app_id,
        country: raw.country,
        title: raw.title,
        body: raw.body,
        rating: raw.rating,
        author_key,
        fetched_at: raw.fetched_at,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeedProgress {
    pub app_id: String,
    pub country: String,
    pub pages_fetched: u32,
    pub reviews_fetched: u32,
    pub completed: bool,
    #[serde(default)]
    pub malformed_pages: Vec<u32>,
    /// Grant times (epoch ms) of every request for this feed.
    #[serde(default)]
    pub request_log: Vec<i64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HarvestManifest {
    /// Keyed by `app_id/country`.
    pub feeds: BTreeMap<String, FeedProgress>,
    #[serde(default)]
    pub search_log: Vec<i64>,
}

impl HarvestManifest {
    pub fn key(app_id: &str, country: &str) -> String {
        format!("{app_id}/{country}")
    }

    pub fn feed(&self, app_id: &str, country: &str) -> Option<&FeedProgress> {
        self.feeds.get(&Self::key(app_id, country))
    }

    fn feed_mut(&mut self, app_id: &str, country: &str) -> &mut FeedProgress {
        self.feeds
            .entry(Self::key(app_id, country))
            .or_insert_with(|| FeedProgress {
                app_id: app_id.to_string(),
                country: country.to_string(),
                ..Default::default()
            })
    }

    /// Every request issued so far, search and feed alike.
    pub fn all_requests(&self) -> Vec<i64> {
        let mut v = self.search_log.clone();
        for f in self.feeds.values() {
            v.extend_from_slice(&f.request_log);
        }
        v.sort_unstable();
        v
    }

    pub fn load_or_default(path: &Path) -> Result<Self, HarvestError> {
        if path.exists() {
            Ok(io::read_json(path)?)
        } else {
            Ok(Self::default())
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), HarvestError> {
        Ok(io::write_json(path, self)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScreeningDecision {
    Kept,
    Dropped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningEntry {
    pub app_id: String,
    pub name: String,
    pub decision: ScreeningDecision,
    pub reasons: Vec<String>,
    pub keyword_matches: Vec<String>,
    /// No wearable keyword found; a human has to confirm inclusion.
    pub needs_manual_confirmation: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScreeningReport {
    pub entries: Vec<ScreeningEntry>,
}

impl ScreeningReport {
    pub fn flagged(&self) -> impl Iterator<Item = &ScreeningEntry> {
        self.entries
            .iter()
            .filter(|e| e.decision == ScreeningDecision::Kept && e.needs_manual_confirmation)
    }
}

/// Applies the rating-count and genre exclusions and flags apps without any
/// wearable keyword in name or description.
pub fn filter_apps(apps: &[AppRecord], query: &AppQuery) -> (Vec<AppRecord>, ScreeningReport) {
    let keywords: Vec<(String, String)> = query
        .wearable_keywords
        .iter()
        .map(|k| (k.clone(), k.to_lowercase()))
        .collect();
    let mut kept = Vec::new();
    let mut report = ScreeningReport::default();
    for app in apps {
        let mut reasons = Vec::new();
        if app.rating_count < query.min_global_ratings {
            reasons.push(format!(
                "rating_count {} below {}",
                app.rating_count, query.min_global_ratings
            ));
        }
        if query.excluded_genre_ids.contains(&app.genre_id) {
            reasons.push(format!("excluded genre {}", app.genre_id));
        }
        let haystack = format!("{}\n{}", app.name, app.description).to_lowercase();
        let keyword_matches: Vec<String> = keywords
            .iter()
            .filter(|(_, lower)| haystack.contains(lower.as_str()))
            .map(|(orig, _)| orig.clone())
            .collect();
        let decision = if reasons.is_empty() {
            kept.push(app.clone());
            ScreeningDecision::Kept
        } else {
            ScreeningDecision::Dropped
        };
        report.entries.push(ScreeningEntry {
            app_id: app.app_id.clone(),
            name: app.name.clone(),
            decision,
            reasons,
            needs_manual_confirmation: keyword_matches.is_empty(),
            keyword_matches,
        });
    }
    (kept, report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct Endpoints {
    /// Base URL of the search API; `/search` is appended.
    pub search_base: String,
    /// Base URL of the review feed; `/{country}/rss/customerreviews/...` is appended.
    pub feed_base: String,
}

impl Default for Endpoints {
    fn default() -> Self {
        Self {
            search_base: "https://itunes.apple.com".into(),
            feed_base: "https://itunes.apple.com".into(),
        }
    }
}

/// Storefront client. All requests from one `Harvester` share its limiter.
pub struct Harvester {
    pub endpoints: Endpoints,
    pub client: Arc<dyn HttpClient>,
    pub clock: Arc<dyn Clock>,
    pub limiter: Arc<RateLimiter>,
    pub retry: RetryPolicy,
    pub salt: String,
}

impl Harvester {
    pub fn new(
        endpoints: Endpoints,
        client: Arc<dyn HttpClient>,
        clock: Arc<dyn Clock>,
        rate_limit_per_minute: usize,
        salt: impl Into<String>,
    ) -> Self {
        let limiter = Arc::new(RateLimiter::per_minute(rate_limit_per_minute, clock.clone()));
        Self {
            endpoints,
            client,
            clock,
            limiter,
            retry: RetryPolicy::default(),
            salt: salt.into(),
        }
    }

    fn get(&self, url: &str, log: &mut Vec<i64>) -> Result<String, HarvestError> {
        let res = self.retry.run(self.clock.as_ref(), || {
            log.push(self.limiter.acquire());
            self.client.get(url)
        })?;
        if !(200..300).contains(&res.status) {
            return Err(TransportError::Status {
                url: url.to_string(),
                status: res.status,
            }
            .into());
        }
        Ok(res.body)
    }

    pub fn search_url(&self, term: &str, country: &str) -> String {
        format!(
            "{}/search?term={}&country={}&entity=software&limit={}",
            self.endpoints.search_base.trim_end_matches('/'),
            encode_query(term),
            encode_query(country),
            SEARCH_RESULT_CAP
        )
    }

    pub fn feed_url(&self, app_id: &str, country: &str, page: u32) -> String {
        format!(
            "{}/{}/rss/customerreviews/page={}/id={}/sortby=mostrecent/json",
            self.endpoints.feed_base.trim_end_matches('/'),
            country,
            page,
            app_id
        )
    }

    /// Runs every (term, country) search and merges results by app id, in
    /// first-seen order. Each pair contributes at most 200 results.
    pub fn search_apps(
        &self,
        query: &AppQuery,
        manifest: &mut HarvestManifest,
    ) -> Result<Vec<AppRecord>, HarvestError> {
        query.validate()?;
        let mut order: Vec<String> = Vec::new();
        let mut by_id: BTreeMap<String, AppRecord> = BTreeMap::new();
        for term in query.terms.iter().filter(|t| !t.trim().is_empty()) {
            for country in &query.countries {
                let url = self.search_url(term, country);
                let body = self.get(&url, &mut manifest.search_log)?;
                let resp: SearchResponse = match serde_json::from_str(&body) {
                    Ok(r) => r,
                    Err(e) => {
                        log::warn!("unparsable search response for {term:?}/{country}: {e}");
                        continue;
                    }
                };
                for r in resp.results.into_iter().take(SEARCH_RESULT_CAP) {
                    let id = r.track_id.to_string();
                    let rec = by_id.entry(id.clone()).or_insert_with(|| {
                        order.push(id.clone());
                        AppRecord {
                            app_id: id,
                            name: r.track_name,
                            genre_id: r.primary_genre_id,
                            rating_count: r.user_rating_count,
                            description: r.description,
                            company_url: r.seller_url,
                            price: r.price,
                            supported_countries: BTreeSet::new(),
                        }
                    });
                    rec.supported_countries.insert(country.clone());
                }
            }
        }
        Ok(order
            .into_iter()
            .map(|id| by_id.remove(&id).expect("recorded id"))
            .collect())
    }

    /// Pages through the review feed of `app` in each country.
    ///
    /// Returns only reviews fetched by this call. Pages already recorded in the
    /// manifest are not requested again, so a completed feed costs nothing.
    pub fn fetch_reviews(
        &self,
        app: &AppRecord,
        countries: &[String],
        manifest: &mut HarvestManifest,
    ) -> Result<Vec<ReviewRecord>, HarvestError> {
        let mut out = Vec::new();
        for country in countries {
            let progress = manifest.feed_mut(&app.app_id, country);
            while !progress.completed {
                if progress.pages_fetched >= MAX_PAGES
                    || progress.reviews_fetched >= MAX_REVIEWS_PER_FEED
                {
                    progress.completed = true;
                    break;
                }
                let page = progress.pages_fetched + 1;
                let url = self.feed_url(&app.app_id, country, page);
                let body = self.get(&url, &mut progress.request_log)?;
                progress.pages_fetched = page;
                let entries = match parse_feed(&body) {
                    Ok(e) => e,
                    Err(reason) => {
                        log::warn!("skipping malformed page {page} of {}: {reason}", app.app_id);
                        progress.malformed_pages.push(page);
                        continue;
                    }
                };
                let room = (MAX_REVIEWS_PER_FEED - progress.reviews_fetched) as usize;
                let last_page = entries.len() < PAGE_SIZE;
                let fetched_at = self.clock.now();
                for e in entries.into_iter().take(room) {
                    let raw = RawReview {
                        review_id: e.id.label,
                        app_id: app.app_id.clone(),
                        country: country.clone(),
                        title: e.title.label,
                        body: e.content.label,
                        rating: e.rating.label.trim().parse().expect("validated by parse_feed"),
                        author: e.author.map(|a| Author::Name(a.name.label)),
                        fetched_at,
                    };
                    out.push(anonymize_review(raw, &self.salt));
                    progress.reviews_fetched += 1;
                }
                if last_page {
                    progress.completed = true;
                }
            }
        }
        Ok(out)
    }
}

/// Reviews fetched so far for apps that passed screening. Flagged apps are
/// skipped unless `auto_keep_flagged` is set.
pub fn harvest_reviews(
    harvester: &Harvester,
    apps: &[AppRecord],
    screening: Option<&ScreeningReport>,
    countries: Option<&[String]>,
    auto_keep_flagged: bool,
    manifest: &mut HarvestManifest,
) -> Result<Vec<ReviewRecord>, HarvestError> {
    let flagged: BTreeSet<&str> = screening
        .map(|s| s.flagged().map(|e| e.app_id.as_str()).collect())
        .unwrap_or_default();
    let mut out = Vec::new();
    for app in apps {
        if !auto_keep_flagged && flagged.contains(app.app_id.as_str()) {
            log::info!("app {} awaits manual wearable confirmation; skipped", app.app_id);
            continue;
        }
        let cs: Vec<String> = match countries {
            Some(c) => c.to_vec(),
            None => app.supported_countries.iter().cloned().collect(),
        };
        out.extend(harvester.fetch_reviews(app, &cs, manifest)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn raw(author: Option<Author>) -> RawReview {
        RawReview {
            review_id: "r1".into(),
            app_id: "a".into(),
            country: "us".into(),
            title: "t".into(),
            body: "b".into(),
            rating: 5,
            author,
            fetched_at: Utc.timestamp_opt(0, 0).unwrap(),
        }
    }

    fn app(id: &str, ratings: u64, genre: u32, desc: &str) -> AppRecord {
        AppRecord {
            app_id: id.into(),
            name: format!("App {id}"),
            genre_id: genre,
            rating_count: ratings,
            description: desc.into(),
            company_url: String::new(),
            price: 0.0,
            supported_countries: BTreeSet::new(),
        }
    }

    #[test]
    fn same_author_same_salt_same_key() {
        let a = anonymize_review(raw(Some(Author::Name("jane_doe".into()))), "s");
        let b = anonymize_review(raw(Some(Author::Name("jane_doe".into()))), "s");
        let c = anonymize_review(raw(Some(Author::Name("jane_doe".into()))), "other");
        assert_eq!(a.author_key, b.author_key);
        assert_ne!(a.author_key, c.author_key);
        assert!(!a.author_key.as_deref().unwrap().contains("jane"));
    }

    #[test]
    fn anonymize_is_idempotent() {
        let once = anonymize_review(raw(Some(Author::Name("jane_doe".into()))), "s");
        let twice = anonymize_review(once.clone().into(), "s");
        assert_eq!(once, twice);
    }

    #[test]
    fn missing_author_stays_missing() {
        assert_eq!(anonymize_review(raw(None), "s").author_key, None);
    }

    #[test]
    fn screening_rules() {
        let q = AppQuery::default();
        let apps = vec![
            app("1", 99, 6013, "Bluetooth cuff"),
            app("2", 500, 6014, "Bluetooth game"),
            app("3", 500, 6013, "Works over Bluetooth"),
            app("4", 100, 6013, "A plain diary"),
        ];
        let (kept, report) = filter_apps(&apps, &q);
        let ids: Vec<_> = kept.iter().map(|a| a.app_id.as_str()).collect();
        assert_eq!(ids, ["3", "4"]);
        assert_eq!(report.entries[2].keyword_matches, ["Bluetooth"]);
        assert!(!report.entries[2].needs_manual_confirmation);
        let flagged: Vec<_> = report.flagged().map(|e| e.app_id.as_str()).collect();
        assert_eq!(flagged, ["4"]);
    }

    #[test]
    fn query_validation() {
        let mut q = AppQuery::default();
        q.terms.clear();
        assert!(matches!(q.validate(), Err(HarvestError::EmptyQuery)));
        let mut q = AppQuery::default();
        q.countries.clear();
        assert!(matches!(q.validate(), Err(HarvestError::InvalidQuery(_))));
    }

    #[test]
    fn defaults_match_screening_table() {
        let q = AppQuery::default();
        assert_eq!(q.min_global_ratings, 100);
        assert!(q.excluded_genre_ids.contains(&6014));
        assert!(q.wearable_keywords.iter().any(|k| k == "Bluetooth"));
        assert!(q.countries.contains(&"us".to_string()));
    }
}
