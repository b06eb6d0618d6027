//! Review insight: from app-store reviews to rating determinants.
//!
//! The crate is organized as a set of stages that can be used on their own or
//! chained through [`pipeline`]:
//!
//! ```text
//! harvest -> normalize -> preprocess -> embed -> manifold -> density
//!         -> topics -> quality -> framework -> rating -> report
//! ```
//!
//! - [`harvest`]: storefront search, review-feed paging, rate limiting, anonymization.
//! - [`normalize`]: language identification, pluggable translation, length filtering.
//! - [`preprocess`]: token cleaning for class-based term weighting and coherence.
//! - [`embed`]: embedding service client and a deterministic hashed fallback.
//! - [`manifold`]: exact kNN graph, fuzzy simplicial set, seeded layout optimization.
//! - [`density`]: HDBSCAN with a multiway condensed tree and excess-of-mass selection.
//! - [`topics`]: c-TF-IDF, topic reduction by merging, document-topic distributions.
//! - [`quality`]: NPMI coherence, topic diversity, topic-count selection.
//! - [`framework`]: topic to quality-dimension mapping and annotator comparison.
//! - [`rating`]: random forest, ROC/AUC metrics, exact tree Shapley attribution.
//! - [`pipeline`]: staged, resumable orchestration with content-hash manifests.
//!
//! [`fixture`] hosts small HTTP servers that speak the storefront, translation,
//! and embedding wire formats, and [`synth`] generates seeded synthetic data.
//! Both are used by tests and by the runnable examples.

pub mod density;
pub mod embed;
pub mod fixture;
pub mod framework;
pub mod harvest;
pub mod http;
pub mod io;
pub mod manifold;
pub mod normalize;
pub mod pipeline;
pub mod preprocess;
pub mod quality;
pub mod rating;
pub mod synth;
pub mod topics;
