//! Harvester wired to a storefront fixture on a virtual clock.

use std::sync::Arc;

use review_insight::fixture::{FixtureApp, FixtureServer};
use review_insight::harvest::{AppQuery, Endpoints, Harvester};
use review_insight::http::{ManualClock, UreqClient};

pub fn harvester(server: &FixtureServer, limit: usize) -> (Harvester, ManualClock) {
    let clock = ManualClock::default();
    let endpoints = Endpoints {
        search_base: server.base_url().to_string(),
        feed_base: server.base_url().to_string(),
    };
    let h = Harvester::new(endpoints, Arc::new(UreqClient::default()), Arc::new(clock.clone()), limit, "salt");
    (h, clock)
}

pub fn query(terms: &[&str], countries: &[&str]) -> AppQuery {
    AppQuery {
        terms: terms.iter().map(|s| s.to_string()).collect(),
        countries: countries.iter().map(|s| s.to_string()).collect(),
        ..AppQuery::default()
    }
}

/// The screening fixtures: one keeper, one under the rating floor, one game,
/// one without wearable keywords.
pub fn screening_apps() -> Vec<FixtureApp> {
    vec![
        FixtureApp::new(1, "Cuff Sync", 6013, 5000, "hypertension diary with Bluetooth cuff").with_reviews("us", 620),
        FixtureApp::new(2, "Tiny BP", 6013, 99, "blood pressure log with Bluetooth").with_reviews("us", 10),
        FixtureApp::new(3, "BP Quest", 6014, 800, "hypertension game, connect the dots").with_reviews("us", 10),
        FixtureApp::new(4, "Plain BP", 6013, 300, "blood pressure notes").with_reviews("us", 40),
    ]
}

/// Page request paths (feed pages only) seen by the server.
pub fn feed_requests(server: &FixtureServer) -> Vec<String> {
    server.requests().into_iter().filter(|r| r.contains("customerreviews")).collect()
}
