//! HDBSCAN on two blobs plus scattered noise.

use review_insight::density::{hdbscan, HdbscanParams, NOISE};
use review_insight::synth::{gaussian_blobs, uniform_scatter};

fn main() {
    let (mut points, truth) = gaussian_blobs(&[60, 40], 2, 1.0, 1.0, 1);
    // random centres can land close together; push the second blob away
    for (p, &t) in points.iter_mut().zip(&truth) {
        if t == 1 {
            p[0] += 15.0;
            p[1] += 15.0;
        }
    }
    points.extend(uniform_scatter(15, 2, 30.0, 2));
    let params = HdbscanParams {
        min_cluster_size: 10,
        ..Default::default()
    };
    let (assignment, tree) = hdbscan(&points, &params).expect("clusters");
    println!("{} clusters, {} noise points", assignment.n_clusters, assignment.noise_count());
    for c in 0..assignment.n_clusters as i64 {
        let size = assignment.labels.iter().filter(|&&l| l == c).count();
        println!("cluster {c}: {size} points");
    }
    let strongest = assignment
        .labels
        .iter()
        .zip(&assignment.strengths)
        .filter(|(l, _)| **l != NOISE)
        .filter(|(_, s)| **s >= 0.99)
        .count();
    println!("{strongest} points at full membership strength; condensed tree has {} clusters", tree.clusters.len());
}
