//! Reduce 32-dimensional blobs to 2-D and check how well they separate.

use review_insight::manifold::{build_knn_graph, fuzzy_simplicial_set, optimize_layout, LayoutParams, Metric};
use review_insight::synth::gaussian_blobs;

fn main() {
    let (points, truth) = gaussian_blobs(&[150, 150, 150], 32, 10.0, 1.0, 4);
    let graph = build_knn_graph(&points, 15, Metric::Euclidean).expect("graph");
    let fuzzy = fuzzy_simplicial_set(&graph);
    println!("{} edges, connected: {}", fuzzy.edges().len(), fuzzy.is_connected());

    let layout = optimize_layout(&fuzzy, &LayoutParams { dim: 2, ..Default::default() }).expect("layout");
    for b in 0..3 {
        let members: Vec<&Vec<f64>> = layout.vectors.iter().zip(&truth).filter(|(_, &t)| t == b).map(|(v, _)| v).collect();
        let cx = members.iter().map(|v| v[0]).sum::<f64>() / members.len() as f64;
        let cy = members.iter().map(|v| v[1]).sum::<f64>() / members.len() as f64;
        println!("blob {b}: centre ({cx:.2}, {cy:.2})");
    }
    let again = optimize_layout(&fuzzy, &LayoutParams { dim: 2, ..Default::default() }).unwrap();
    println!("same seed, same layout: {}", again.vectors == layout.vectors);
}
