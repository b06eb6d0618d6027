//! Search a local storefront, screen the apps, and page through their review
//! feeds under the 20-requests-per-minute limit. The clock is virtual, so the
//! pauses the limiter imposes cost nothing.

use std::sync::Arc;
use std::time::Duration;

use review_insight::fixture::{storefront, FixtureApp, StorefrontConfig};
use review_insight::harvest::{filter_apps, harvest_reviews, max_in_window, AppQuery, Endpoints, HarvestManifest, Harvester};
use review_insight::http::{Clock, ManualClock, UreqClient};

fn main() {
    let server = storefront(StorefrontConfig {
        apps: vec![
            FixtureApp::new(101, "Cuff Sync", 6013, 5200, "Hypertension diary for Bluetooth cuffs").with_reviews("us", 620),
            FixtureApp::new(102, "BP Notes", 6013, 310, "Blood pressure log").with_reviews("us", 80),
            FixtureApp::new(103, "Pressure Quest", 6014, 900, "A hypertension game").with_reviews("us", 10),
            FixtureApp::new(104, "Tiny BP", 6013, 99, "Blood pressure with Sync").with_reviews("gb", 10),
        ],
        ..Default::default()
    });
    let clock = ManualClock::default();
    let start = clock.now_millis();
    let h = Harvester::new(
        Endpoints {
            search_base: server.base_url().into(),
            feed_base: server.base_url().into(),
        },
        Arc::new(UreqClient::default()),
        Arc::new(clock.clone()),
        20,
        "example-salt",
    );
    let query = AppQuery {
        countries: vec!["us".into(), "gb".into()],
        ..AppQuery::default()
    };

    let mut manifest = HarvestManifest::default();
    let apps = h.search_apps(&query, &mut manifest).expect("search");
    let (kept, screening) = filter_apps(&apps, &query);
    for e in &screening.entries {
        println!("{:>4} {:<16} {:?} {:?} keywords={:?}", e.app_id, e.name, e.decision, e.reasons, e.keyword_matches);
    }

    // BP Notes has no wearable keyword; an unattended run keeps it anyway
    let reviews = harvest_reviews(&h, &kept, Some(&screening), None, true, &mut manifest).expect("feeds");
    for (key, f) in &manifest.feeds {
        println!("{key}: {} pages, {} reviews", f.pages_fetched, f.reviews_fetched);
    }
    let log = manifest.all_requests();
    println!(
        "{} reviews from {} requests over {} virtual seconds; busiest minute had {}",
        reviews.len(),
        log.len(),
        (clock.now_millis() - start) / 1000,
        max_in_window(&log, Duration::from_secs(60))
    );
    println!("first author pseudonym: {:?}", reviews[0].author_key);
}
