mod common;

use common::hdbscan_naive::naive_hdbscan;
use common::scoring::{canonical, purity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use review_insight::density::{condense_hierarchy, hdbscan, mutual_reachability_mst, HdbscanParams, NOISE};

fn blob(rng: &mut ChaCha8Rng, center: (f64, f64), n: usize, spread: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| vec![center.0 + spread * rng.random_range(-1.0..1.0), center.1 + spread * rng.random_range(-1.0..1.0)])
        .collect()
}

#[test]
fn matches_naive_reference_on_random_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..60 {
        let n = rng.random_range(5..=50);
        let grid = case % 3 == 0;
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                if grid {
                    // integer coordinates produce many tied distances
                    vec![rng.random_range(0..6) as f64, rng.random_range(0..6) as f64]
                } else {
                    vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)]
                }
            })
            .collect();
        let mcs = rng.random_range(2..=8.min(n));
        let ms = rng.random_range(1..=mcs.min(n - 1));
        let allow = case % 4 == 1;
        let params = HdbscanParams { min_cluster_size: mcs, min_samples: Some(ms), allow_single_cluster: allow };
        let (got, _) = hdbscan(&points, &params).unwrap();
        let want = naive_hdbscan(&points, mcs, ms, allow);
        assert_eq!(canonical(&got.labels), canonical(&want), "case {case}: n={n} mcs={mcs} ms={ms}");
    }
}

#[test]
fn two_blobs_give_two_leaves_and_pure_labels() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut points = blob(&mut rng, (0.0, 0.0), 20, 1.0);
    points.extend(blob(&mut rng, (20.0, 20.0), 20, 1.0));
    let truth: Vec<i64> = (0..40).map(|i| i / 20).collect();
    let mst = mutual_reachability_mst(&points, 5).unwrap();
    let tree = condense_hierarchy(&mst, 5).unwrap();
    assert_eq!(tree.leaves().len(), 2);
    let (a, _) = hdbscan(&points, &HdbscanParams { min_cluster_size: 5, ..Default::default() }).unwrap();
    assert_eq!(a.n_clusters, 2);
    assert_eq!(purity(&a.labels, &truth), 1.0);
    assert!(a.noise_count() < 4);
}

#[test]
fn uniform_scatter_is_mostly_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let points = blob(&mut rng, (0.0, 0.0), 30, 10.0);
    let (a, _) = hdbscan(&points, &HdbscanParams { min_cluster_size: 15, ..Default::default() }).unwrap();
    assert!(a.noise_count() > 15, "{:?}", a.labels);
}

#[test]
fn single_tight_blob() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let points = blob(&mut rng, (3.0, 3.0), 25, 0.1);
    let params = HdbscanParams { min_cluster_size: 5, allow_single_cluster: true, ..Default::default() };
    let (a, _) = hdbscan(&points, &params).unwrap();
    assert_eq!(a.n_clusters, 1);
    for (l, s) in a.labels.iter().zip(&a.strengths) {
        assert_eq!(*l, 0);
        assert!(*s > 0.0 && *s <= 1.0);
    }
}

#[test]
fn permuting_input_permutes_labels() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut points = blob(&mut rng, (0.0, 0.0), 15, 1.0);
    points.extend(blob(&mut rng, (9.0, 0.0), 15, 1.0));
    points.extend(blob(&mut rng, (0.0, 9.0), 15, 1.0));
    let params = HdbscanParams { min_cluster_size: 5, ..Default::default() };
    let (a, _) = hdbscan(&points, &params).unwrap();
    let perm: Vec<usize> = (0..points.len()).rev().collect();
    let shuffled: Vec<Vec<f64>> = perm.iter().map(|&i| points[i].clone()).collect();
    let (b, _) = hdbscan(&shuffled, &params).unwrap();
    let back: Vec<i64> = perm.iter().map(|&i| a.labels[i]).collect();
    assert_eq!(canonical(&back), canonical(&b.labels));
    assert!(a.labels.iter().filter(|&&l| l != NOISE).count() > 30);
}
