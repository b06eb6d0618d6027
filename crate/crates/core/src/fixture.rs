//! Local HTTP fixture servers speaking the storefront, translation, and
//! embedding wire formats. Each binds `127.0.0.1:0` and shuts down on drop.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde_json::{json, Value};

use crate::harvest::{FeedAuthor, FeedEntry, FeedPage, Label, SearchResponse, SearchResult, PAGE_SIZE};

type Handler = dyn Fn(&str, &str, &str) -> (u16, String) + Send + Sync;

/// A running server. `requests` records `METHOD path` for every request.
pub struct FixtureServer {
    server: Arc<tiny_http::Server>,
    handle: Option<JoinHandle<()>>,
    base_url: String,
    requests: Arc<Mutex<Vec<String>>>,
}

impl FixtureServer {
    fn spawn(handler: Arc<Handler>) -> Self {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").expect("bind fixture server"));
        let port = server
            .server_addr()
            .to_ip()
            .expect("tcp listener")
            .port();
        let requests = Arc::new(Mutex::new(Vec::new()));
        let (srv, log) = (server.clone(), requests.clone());
        let handle = std::thread::spawn(move || {
            for mut req in srv.incoming_requests() {
                let method = req.method().to_string();
                let url = req.url().to_string();
                let mut body = String::new();
                let _ = req.as_reader().read_to_string(&mut body);
                log.lock().unwrap().push(format!("{method} {url}"));
                let (status, text) = handler(&method, &url, &body);
                let header = tiny_http::Header::from_bytes("Content-Type", "application/json")
                    .expect("static header");
                let resp = tiny_http::Response::from_string(text)
                    .with_status_code(status)
                    .with_header(header);
                let _ = req.respond(resp);
            }
        });
        Self {
            server,
            handle: Some(handle),
            base_url: format!("http://127.0.0.1:{port}"),
            requests,
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    pub fn requests(&self) -> Vec<String> {
        self.requests.lock().unwrap().clone()
    }

    pub fn request_count(&self) -> usize {
        self.requests.lock().unwrap().len()
    }
}

impl Drop for FixtureServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn split_url(url: &str) -> (&str, BTreeMap<String, String>) {
    let (path, query) = url.split_once('?').unwrap_or((url, ""));
    let params = query
        .split('&')
        .filter_map(|kv| kv.split_once('='))
        .map(|(k, v)| (k.to_string(), decode_component(v)))
        .collect();
    (path, params)
}

fn decode_component(s: &str) -> String {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'+' => out.push(b' '),
            b'%' if i + 2 < bytes.len() => {
                let hex = std::str::from_utf8(&bytes[i + 1..i + 3]).unwrap_or("");
                match u8::from_str_radix(hex, 16) {
                    Ok(b) => {
                        out.push(b);
                        i += 2;
                    }
                    Err(_) => out.push(b'%'),
                }
            }
            b => out.push(b),
        }
        i += 1;
    }
    String::from_utf8_lossy(&out).into_owned()
}

/// One app hosted by the storefront fixture.
#[derive(Debug, Clone)]
pub struct FixtureApp {
    pub result: SearchResult,
    pub countries: BTreeSet<String>,
    /// Reviews per country, newest first.
    pub reviews: BTreeMap<String, Vec<FeedEntry>>,
}

impl FixtureApp {
    pub fn new(id: u64, name: &str, genre: u32, rating_count: u64, description: &str) -> Self {
        Self {
            result: SearchResult {
                track_id: id,
                track_name: name.to_string(),
                primary_genre_id: genre,
                user_rating_count: rating_count,
                description: description.to_string(),
                seller_url: format!("https://example.com/{id}"),
                price: 0.0,
            },
            countries: BTreeSet::new(),
            reviews: BTreeMap::new(),
        }
    }

    /// Adds `n` generated reviews in `country` (also makes the app visible there).
    pub fn with_reviews(mut self, country: &str, n: usize) -> Self {
        self.countries.insert(country.to_string());
        let id = self.result.track_id;
        let entries = (0..n)
            .map(|i| FeedEntry {
                id: Label::new(format!("{id}-{country}-{i}")),
                title: Label::new(format!("Review {i}")),
                content: Label::new(format!(
                    "Review number {i} for app {id} talks about the cuff and the sync feature"
                )),
                rating: Label::new(((i % 5) + 1).to_string()),
                author: Some(FeedAuthor {
                    name: Label::new(format!("user{}", i % 7)),
                }),
            })
            .collect();
        self.reviews.insert(country.to_string(), entries);
        self
    }

    pub fn in_country(mut self, country: &str) -> Self {
        self.countries.insert(country.to_string());
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct StorefrontConfig {
    pub apps: Vec<FixtureApp>,
    /// (app_id, country, page) triples answered with a non-JSON body.
    pub malformed_pages: BTreeSet<(u64, String, u32)>,
    /// Number of initial requests answered with HTTP 503.
    pub fail_first: usize,
}

/// Storefront fixture: `/search` and the paged JSON review feed.
pub fn storefront(config: StorefrontConfig) -> FixtureServer {
    let config = Arc::new(config);
    let failures = Arc::new(Mutex::new(config.fail_first));
    FixtureServer::spawn(Arc::new(move |_method, url, _body| {
        {
            let mut f = failures.lock().unwrap();
            if *f > 0 {
                *f -= 1;
                return (503, "{}".into());
            }
        }
        let (path, params) = split_url(url);
        if path == "/search" {
            let term = params.get("term").cloned().unwrap_or_default().to_lowercase();
            let country = params.get("country").cloned().unwrap_or_default();
            let limit: usize = params
                .get("limit")
                .and_then(|l| l.parse().ok())
                .unwrap_or(50);
            let results: Vec<SearchResult> = config
                .apps
                .iter()
                .filter(|a| a.countries.contains(&country))
                .filter(|a| {
                    a.result.track_name.to_lowercase().contains(&term)
                        || a.result.description.to_lowercase().contains(&term)
                })
                .take(limit)
                .map(|a| a.result.clone())
                .collect();
            let resp = SearchResponse {
                result_count: results.len(),
                results,
            };
            return (200, serde_json::to_string(&resp).expect("serializable"));
        }
        // /{country}/rss/customerreviews/page={p}/id={id}/sortby=mostrecent/json
        let parts: Vec<&str> = path.trim_start_matches('/').split('/').collect();
        if parts.len() >= 5 && parts[1] == "rss" && parts[2] == "customerreviews" {
            let country = parts[0].to_string();
            let page: u32 = parts[3].trim_start_matches("page=").parse().unwrap_or(0);
            let id: u64 = parts[4].trim_start_matches("id=").parse().unwrap_or(0);
            if page == 0 || page > 10 {
                return (400, r#"{"error":"page out of range"}"#.into());
            }
            if config.malformed_pages.contains(&(id, country.clone(), page)) {
                return (200, "<html>temporarily unavailable</html>".into());
            }
            let entries = config
                .apps
                .iter()
                .find(|a| a.result.track_id == id)
                .and_then(|a| a.reviews.get(&country))
                .map(|all| {
                    let start = (page as usize - 1) * PAGE_SIZE;
                    all.iter().skip(start).take(PAGE_SIZE).cloned().collect()
                })
                .unwrap_or_default();
            return (
                200,
                serde_json::to_string(&FeedPage::new(entries)).expect("serializable"),
            );
        }
        (404, r#"{"error":"not found"}"#.into())
    }))
}

/// Translation fixture: word-by-word dictionary substitution at `POST /translate`.
/// Unknown words pass through unchanged.
pub fn translator(dictionary: BTreeMap<String, String>, always_fail: bool) -> FixtureServer {
    FixtureServer::spawn(Arc::new(move |method, url, body| {
        if method != "POST" || split_url(url).0 != "/translate" {
            return (404, "{}".into());
        }
        if always_fail {
            return (503, r#"{"error":"unavailable"}"#.into());
        }
        let req: Value = match serde_json::from_str(body) {
            Ok(v) => v,
            Err(_) => return (400, "{}".into()),
        };
        let text = req["text"].as_str().unwrap_or("");
        let out: Vec<String> = text
            .split_whitespace()
            .map(|w| {
                let core = w.trim_matches(|c: char| !c.is_alphanumeric());
                match dictionary.get(core) {
                    Some(t) => w.replacen(core, t, 1),
                    None => w.to_string(),
                }
            })
            .collect();
        (200, json!({ "text": out.join(" ") }).to_string())
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingMode {
    /// Vector `[i, len(text), 1, 0, ...]` where `i` is the running text index.
    Echo,
    /// Like `Echo`, but the first vector of every response contains `null`.
    NonFinite,
    /// Like `Echo`, but every response after the first has one extra dimension.
    GrowingDimension,
}

/// Embedding fixture at `POST /embed`: `{"texts": [...]}` → `{"vectors": [[...]]}`.
pub fn embedding_service(dimension: usize, mode: EmbeddingMode) -> FixtureServer {
    let counter = Arc::new(Mutex::new((0usize, 0usize)));
    FixtureServer::spawn(Arc::new(move |method, url, body| {
        if method != "POST" || split_url(url).0 != "/embed" {
            return (404, "{}".into());
        }
        let req: Value = match serde_json::from_str(body) {
            Ok(v) => v,
            Err(_) => return (400, "{}".into()),
        };
        let texts: Vec<&str> = req["texts"]
            .as_array()
            .map(|a| a.iter().filter_map(Value::as_str).collect())
            .unwrap_or_default();
        let mut state = counter.lock().unwrap();
        let (next, calls) = &mut *state;
        let dim = if mode == EmbeddingMode::GrowingDimension && *calls > 0 {
            dimension + 1
        } else {
            dimension
        };
        *calls += 1;
        let vectors: Vec<Value> = texts
            .iter()
            .enumerate()
            .map(|(j, t)| {
                let mut v: Vec<Value> = vec![json!(0.0); dim];
                v[0] = json!(*next as f64);
                if dim > 1 {
                    v[1] = json!(t.chars().count() as f64);
                }
                if dim > 2 {
                    v[2] = json!(1.0);
                }
                if mode == EmbeddingMode::NonFinite && j == 0 {
                    v[dim - 1] = Value::Null;
                }
                *next += 1;
                Value::Array(v)
            })
            .collect();
        (200, json!({ "vectors": vectors }).to_string())
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_query_components() {
        assert_eq!(decode_component("blood+pressure"), "blood pressure");
        assert_eq!(decode_component("a%26b"), "a&b");
        assert_eq!(decode_component("100%"), "100%");
    }

    #[test]
    fn storefront_serves_search_and_feed() {
        let srv = storefront(StorefrontConfig {
            apps: vec![FixtureApp::new(1, "BP Tracker", 6013, 500, "hypertension log").with_reviews("us", 60)],
            ..Default::default()
        });
        let client = crate::http::UreqClient::default();
        use crate::http::HttpClient;
        let r = client
            .get(&format!("{}/search?term=hypertension&country=us&limit=200", srv.base_url()))
            .unwrap();
        let resp: SearchResponse = serde_json::from_str(&r.body).unwrap();
        assert_eq!(resp.results.len(), 1);
        let page2 = client
            .get(&format!(
                "{}/us/rss/customerreviews/page=2/id=1/sortby=mostrecent/json",
                srv.base_url()
            ))
            .unwrap();
        assert_eq!(crate::harvest::parse_feed(&page2.body).unwrap().len(), 10);
        assert_eq!(srv.request_count(), 2);
    }
}
