//! Seeded synthetic data: Gaussian blobs, topic-probability feature sets with
//! a planted label rule, and a review corpus with planted topics.

use chrono::{TimeZone, Utc};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::harvest::ReviewRecord;

/// Gaussian blobs with unit-free isotropic spread. Returns points and the
/// generating blob of each point; points are grouped by blob.
pub fn gaussian_blobs(
    sizes: &[usize],
    dim: usize,
    separation: f64,
    std_dev: f64,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<i64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, std_dev).expect("finite std dev");
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (b, &n) in sizes.iter().enumerate() {
        let center: Vec<f64> = (0..dim).map(|_| rng.random_range(-separation..separation)).collect();
        for _ in 0..n {
            points.push(center.iter().map(|c| c + noise.sample(&mut rng)).collect());
            labels.push(b as i64);
        }
    }
    (points, labels)
}

/// Points drawn uniformly from `[0, extent)^dim`.
pub fn uniform_scatter(n: usize, dim: usize, extent: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(0.0..extent)).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    /// Rows are probability vectors over `k` topics.
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub informative: Vec<usize>,
}

/// Symmetric Dirichlet(1) rows; label is 1 when the informative topics'
/// combined share exceeds its median. `flip_rate` flips labels at random.
pub fn topic_feature_set(n: usize, k: usize, informative: &[usize], flip_rate: f64, seed: u64) -> FeatureSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = Gamma::new(1.0, 1.0).expect("valid shape");
    let features: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let g: Vec<f64> = (0..k).map(|_| gamma.sample(&mut rng)).collect();
            let s: f64 = g.iter().sum();
            g.into_iter().map(|x| x / s).collect()
        })
        .collect();
    let score: Vec<f64> = features
        .iter()
        .map(|row| informative.iter().map(|&t| row[t]).sum())
        .collect();
    let mut sorted = score.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[n / 2];
    let labels = score
        .iter()
        .map(|&s| {
            let y = u8::from(s >= median);
            if rng.random_bool(flip_rate) {
                1 - y
            } else {
                y
            }
        })
        .collect();
    FeatureSet {
        features,
        labels,
        informative: informative.to_vec(),
    }
}

pub const TOPIC_VOCABULARIES: [[&str; 15]; 5] = [
    [
        "bluetooth", "device", "sync", "connection", "pairing", "monitor", "cuff", "watch", "wifi", "signal",
        "sensor", "firmware", "battery", "band", "tracker",
    ],
    [
        "login", "password", "account", "registration", "email", "verification", "username", "code",
        "credential", "session", "captcha", "token", "identity", "reset", "server",
    ],
    [
        "weight", "scale", "bmi", "body", "fat", "mass", "muscle", "diet", "calorie", "kilogram", "pound", "goal",
        "meal", "nutrition", "waist",
    ],
    [
        "doctor", "physician", "nurse", "clinic", "appointment", "report", "pdf", "cardiologist", "hospital",
        "prescription", "consultation", "visit", "therapist", "message", "export",
    ],
    [
        "privacy", "consent", "policy", "advertisement", "permission", "location", "sharing", "security",
        "encryption", "breach", "cookie", "law", "regulation", "insurer", "marketing",
    ],
];

pub const FILLER_WORDS: [&str; 16] = [
    "reading", "pressure", "heart", "measurement", "history", "chart", "graph", "reminder", "feature", "screen",
    "button", "version", "phone", "update", "day", "time",
];

const GLUE: [&str; 10] = ["the", "and", "my", "with", "is", "it", "this", "for", "a", "of"];

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub reviews: usize,
    /// Topics whose reviews are mostly rated 1 to 3.
    pub negative_topics: Vec<usize>,
    /// Topics whose reviews are mostly rated 4 or 5.
    pub positive_topics: Vec<usize>,
    /// Probability that a planted topic's rating follows its direction.
    pub planted_strength: f64,
    pub topic_words_per_review: usize,
    pub filler_words_per_review: usize,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            reviews: 500,
            negative_topics: vec![1],
            positive_topics: vec![3],
            planted_strength: 0.9,
            topic_words_per_review: 14,
            filler_words_per_review: 3,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub reviews: Vec<ReviewRecord>,
    /// Generating topic per review.
    pub topics: Vec<usize>,
}

/// Reviews cycle through the five topics; each mixes topic nouns, a few shared
/// filler nouns, and function words, and is long enough to pass the length filter.
pub fn review_corpus(spec: &CorpusSpec) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let epoch = Utc.with_ymd_and_hms(2023, 1, 1, 0, 0, 0).unwrap();
    let mut reviews = Vec::with_capacity(spec.reviews);
    let mut topics = Vec::with_capacity(spec.reviews);
    for i in 0..spec.reviews {
        let topic = i % TOPIC_VOCABULARIES.len();
        let vocab = &TOPIC_VOCABULARIES[topic];
        let mut body = Vec::new();
        for w in 0..spec.topic_words_per_review + spec.filler_words_per_review {
            body.push(*GLUE.choose(&mut rng).unwrap());
            if w < spec.topic_words_per_review {
                body.push(*vocab.choose(&mut rng).unwrap());
            } else {
                body.push(*FILLER_WORDS.choose(&mut rng).unwrap());
            }
        }
        let title = format!("{} {}", vocab.choose(&mut rng).unwrap(), vocab.choose(&mut rng).unwrap());
        let positive = if spec.negative_topics.contains(&topic) {
            !rng.random_bool(spec.planted_strength)
        } else if spec.positive_topics.contains(&topic) {
            rng.random_bool(spec.planted_strength)
        } else {
            rng.random_bool(0.5)
        };
        let rating = if positive { rng.random_range(4..=5) } else { rng.random_range(1..=3) };
        reviews.push(ReviewRecord {
            review_id: format!("syn-{i:05}"),
            app_id: format!("{}", 1000 + i % 7),
            country: "us".into(),
            title,
            body: body.join(" "),
            rating,
            author_key: None,
            fetched_at: epoch,
        });
        topics.push(topic);
    }
    SyntheticCorpus { reviews, topics }
}
