//! Storefront wire formats: search results and the customer-review feed.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchResponse {
    #[serde(default)]
    pub result_count: usize,
    #[serde(default)]
    pub results: Vec<SearchResult>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchResult {
    pub track_id: u64,
    pub track_name: String,
    #[serde(default)]
    pub primary_genre_id: u32,
    #[serde(default)]
    pub user_rating_count: u64,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub seller_url: String,
    #[serde(default)]
    pub price: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Label {
    pub label: String,
}

impl Label {
    pub fn new(s: impl Into<String>) -> Self {
        Self { label: s.into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeedAuthor {
    pub name: Label,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeedEntry {
    pub id: Label,
    #[serde(default = "empty_label")]
    pub title: Label,
    #[serde(default = "empty_label")]
    pub content: Label,
    #[serde(rename = "im:rating")]
    pub rating: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author: Option<FeedAuthor>,
}

fn empty_label() -> Label {
    Label::new("")
}

/// A single entry is sometimes sent as an object rather than a list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entries {
    Many(Vec<FeedEntry>),
    One(Box<FeedEntry>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Feed {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry: Option<Entries>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeedPage {
    pub feed: Feed,
}

impl FeedPage {
    pub fn new(entries: Vec<FeedEntry>) -> Self {
        Self {
            feed: Feed {
                entry: if entries.is_empty() {
                    None
                } else {
                    Some(Entries::Many(entries))
                },
            },
        }
    }

    pub fn into_entries(self) -> Vec<FeedEntry> {
        match self.feed.entry {
            None => Vec::new(),
            Some(Entries::Many(v)) => v,
            Some(Entries::One(e)) => vec![*e],
        }
    }
}

/// Parses a feed page. `Err` carries a short reason for the skip log.
pub fn parse_feed(body: &str) -> Result<Vec<FeedEntry>, String> {
    let page: FeedPage = serde_json::from_str(body).map_err(|e| e.to_string())?;
    let entries = page.into_entries();
    for e in &entries {
        let r: u8 = e
            .rating
            .label
            .trim()
            .parse()
            .map_err(|_| format!("bad rating {:?}", e.rating.label))?;
        if !(1..=5).contains(&r) {
            return Err(format!("rating {r} out of range"));
        }
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_entry_object_is_accepted() {
        let body = r#"{"feed":{"entry":{"id":{"label":"9"},"title":{"label":"t"},
            "content":{"label":"c"},"im:rating":{"label":"4"}}}}"#;
        let e = parse_feed(body).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].id.label, "9");
    }

    #[test]
    fn missing_entry_is_empty_page() {
        assert!(parse_feed(r#"{"feed":{}}"#).unwrap().is_empty());
    }

    #[test]
    fn garbage_is_rejected() {
        assert!(parse_feed("<html>").is_err());
        let bad = r#"{"feed":{"entry":[{"id":{"label":"1"},"im:rating":{"label":"9"}}]}}"#;
        assert!(parse_feed(bad).is_err());
    }
}
