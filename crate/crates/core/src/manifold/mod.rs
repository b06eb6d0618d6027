//! UMAP dimensionality reduction.
//!
//! Exact brute-force kNN, the fuzzy simplicial set with per-point `rho` and
//! `sigma`, and a seeded single-lane SGD layout with negative sampling.

mod curve;
mod init;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use curve::fit_ab;

pub const DEFAULT_N_NEIGHBORS: usize = 15;
pub const DEFAULT_MIN_DIST: f64 = 0.1;
pub const DEFAULT_CLUSTER_DIM: usize = 5;
pub const DEFAULT_PLOT_DIM: usize = 2;
const SIGMA_ITERATIONS: usize = 64;
const SIGMA_TOLERANCE: f64 = 1e-5;
const MIN_SIGMA_SCALE: f64 = 1e-3;

#[derive(Debug, thiserror::Error)]
pub enum ManifoldError {
    #[error("k = {k} requires more than {n} points")]
    KTooLarge { k: usize, n: usize },
    #[error("k must be at least 1")]
    KTooSmall,
    #[error("points have inconsistent dimensions")]
    RaggedInput,
    #[error("layout dimension and epoch count must be positive")]
    BadParams,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Euclidean,
    #[default]
    Cosine,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::Cosine => {
                let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
                for (x, y) in a.iter().zip(b) {
                    dot += x * y;
                    na += x * x;
                    nb += y * y;
                }
                if na == 0.0 && nb == 0.0 {
                    0.0
                } else if na == 0.0 || nb == 0.0 {
                    1.0
                } else {
                    (1.0 - dot / (na.sqrt() * nb.sqrt())).max(0.0)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborGraph {
    pub k: usize,
    /// Per point, neighbor indices sorted by (distance, index).
    pub indices: Vec<Vec<usize>>,
    pub distances: Vec<Vec<f64>>,
}

impl NeighborGraph {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Exact kNN by brute force. Ties go to the lower index.
pub fn build_knn_graph(points: &[Vec<f64>], k: usize, metric: Metric) -> Result<NeighborGraph, ManifoldError> {
    let n = points.len();
    if k == 0 {
        return Err(ManifoldError::KTooSmall);
    }
    if k >= n {
        return Err(ManifoldError::KTooLarge { k, n });
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(ManifoldError::RaggedInput);
    }
    let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut d: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (metric.distance(&points[i], &points[j]), j))
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.truncate(k);
            (d.iter().map(|x| x.1).collect(), d.iter().map(|x| x.0).collect())
        })
        .collect();
    let (indices, distances) = rows.into_iter().unzip();
    Ok(NeighborGraph { k, indices, distances })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyGraph {
    pub n: usize,
    pub rho: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Directed memberships before symmetrization, per point.
    pub directed: Vec<Vec<(usize, f64)>>,
    /// Symmetric weights as an adjacency list sorted by neighbor index.
    pub adjacency: Vec<Vec<(usize, f64)>>,
}

impl FuzzyGraph {
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency[i]
            .binary_search_by_key(&j, |e| e.0)
            .map(|p| self.adjacency[i][p].1)
            .unwrap_or(0.0)
    }

    /// Undirected edges `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().filter(move |e| e.0 > i).map(move |&(j, w)| (i, j, w)))
            .collect()
    }

    /// True when every point is reachable from point 0.
    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &(j, _) in &self.adjacency[i] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == self.n
    }
}

/// Bisection for `sigma` such that `Σ_j exp(-max(0, d_j - rho) / sigma) = log2(k)`.
fn smooth_knn_sigma(dists: &[f64], rho: f64) -> f64 {
    let target = (dists.len() as f64).log2();
    let (mut lo, mut hi, mut mid) = (0.0_f64, f64::INFINITY, 1.0_f64);
    for _ in 0..SIGMA_ITERATIONS {
        let psum: f64 = dists
            .iter()
            .map(|&d| {
                let gap = d - rho;
                if gap > 0.0 {
                    (-gap / mid).exp()
                } else {
                    1.0
                }
            })
            .sum();
        if (psum - target).abs() < SIGMA_TOLERANCE {
            break;
        }
        if psum > target {
            hi = mid;
            mid = (lo + hi) / 2.0;
        } else {
            lo = mid;
            mid = if hi.is_infinite() { mid * 2.0 } else { (lo + hi) / 2.0 };
        }
    }
    let mean = dists.iter().sum::<f64>() / dists.len().max(1) as f64;
    mid.max(MIN_SIGMA_SCALE * mean).max(f64::MIN_POSITIVE)
}

pub fn fuzzy_simplicial_set(graph: &NeighborGraph) -> FuzzyGraph {
    let n = graph.len();
    let mut rho = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    let mut directed = Vec::with_capacity(n);
    for i in 0..n {
        let d = &graph.distances[i];
        let r = d.first().copied().unwrap_or(0.0);
        let s = smooth_knn_sigma(d, r);
        let row: Vec<(usize, f64)> = graph.indices[i]
            .iter()
            .zip(d)
            .map(|(&j, &dij)| (j, (-(dij - r).max(0.0) / s).exp()))
            .filter(|&(_, w)| w > 0.0)
            .collect();
        rho.push(r);
        sigma.push(s);
        directed.push(row);
    }
    // a ∪ b = a + b - a·b over both directions
    let mut adj: Vec<std::collections::BTreeMap<usize, (f64, f64)>> = vec![Default::default(); n];
    for (i, row) in directed.iter().enumerate() {
        for &(j, w) in row {
            adj[i].entry(j).or_insert((0.0, 0.0)).0 = w;
            adj[j].entry(i).or_insert((0.0, 0.0)).1 = w;
        }
    }
    let adjacency = adj
        .into_iter()
        .map(|m| {
            m.into_iter()
                .map(|(j, (a, b))| (j, a + b - a * b))
                .collect()
        })
        .collect();
    FuzzyGraph {
        n,
        rho,
        sigma,
        directed,
        adjacency,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum InitMethod {
    /// Spectral when the graph is connected, seeded random otherwise.
    Auto,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutParams {
    pub dim: usize,
    pub min_dist: f64,
    pub spread: f64,
    /// `None` picks 500 epochs up to 10k points and 200 above.
    pub epochs: Option<usize>,
    pub seed: u64,
    pub negative_sample_rate: usize,
    pub learning_rate: f64,
    pub init: InitMethod,
}

impl Default for LayoutParams {
    fn default() -> Self {
        Self {
            dim: DEFAULT_CLUSTER_DIM,
            min_dist: DEFAULT_MIN_DIST,
            spread: 1.0,
            epochs: None,
            seed: 42,
            negative_sample_rate: 5,
            learning_rate: 1.0,
            init: InitMethod::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub vectors: Vec<Vec<f64>>,
    pub dim: usize,
    pub seed: u64,
}

impl Layout {
    pub fn is_finite(&self) -> bool {
        self.vectors.iter().flatten().all(|x| x.is_finite())
    }
}

fn clip(g: f64) -> f64 {
    g.clamp(-4.0, 4.0)
}

/// Cross-entropy SGD with negative sampling. Deterministic for a fixed seed.
pub fn optimize_layout(fuzzy: &FuzzyGraph, params: &LayoutParams) -> Result<Layout, ManifoldError> {
    if params.dim == 0 || params.epochs == Some(0) {
        return Err(ManifoldError::BadParams);
    }
    let n = fuzzy.n;
    let epochs = params
        .epochs
        .unwrap_or(if n <= 10_000 { 500 } else { 200 });
    let (a, b) = fit_ab(params.spread, params.min_dist);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut y = match params.init {
        InitMethod::Auto if n > params.dim + 1 && fuzzy.is_connected() => {
            init::spectral(fuzzy, params.dim, &mut rng)
        }
        _ => init::random(n, params.dim, &mut rng),
    };

    // Both directions of each undirected edge, as in the symmetric sparse matrix.
    let mut heads = Vec::new();
    let mut tails = Vec::new();
    let mut weights = Vec::new();
    for (i, row) in fuzzy.adjacency.iter().enumerate() {
        for &(j, w) in row {
            heads.push(i);
            tails.push(j);
            weights.push(w);
        }
    }
    let w_max = weights.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..weights.len())
        .filter(|&e| weights[e] >= w_max / epochs as f64)
        .collect();
    let eps: Vec<f64> = keep.iter().map(|&e| w_max / weights[e]).collect();
    let eps_neg: Vec<f64> = eps
        .iter()
        .map(|e| e / params.negative_sample_rate.max(1) as f64)
        .collect();
    let mut next = eps.clone();
    let mut next_neg = eps_neg.clone();
    let dim = params.dim;
    let mut grad_buf = vec![0.0; dim];

    for epoch in 0..epochs {
        let alpha = params.learning_rate * (1.0 - epoch as f64 / epochs as f64);
        let ep = epoch as f64;
        for (slot, &e) in keep.iter().enumerate() {
            if next[slot] > ep {
                continue;
            }
            let (i, j) = (heads[e], tails[e]);
            let d2: f64 = (0..dim).map(|c| (y[i][c] - y[j][c]).powi(2)).sum();
            let coeff = if d2 > 0.0 {
                -2.0 * a * b * d2.powf(b - 1.0) / (1.0 + a * d2.powf(b))
            } else {
                0.0
            };
            for c in 0..dim {
                grad_buf[c] = clip(coeff * (y[i][c] - y[j][c])) * alpha;
            }
            for c in 0..dim {
                y[i][c] += grad_buf[c];
                y[j][c] -= grad_buf[c];
            }
            next[slot] += eps[slot];

            let n_neg = ((ep - next_neg[slot]) / eps_neg[slot]).floor().max(0.0) as usize;
            for _ in 0..n_neg {
                let k = rng.random_range(0..n);
                if k == i {
                    continue;
                }
                let d2: f64 = (0..dim).map(|c| (y[i][c] - y[k][c]).powi(2)).sum();
                let coeff = if d2 > 0.0 {
                    2.0 * b / ((0.001 + d2) * (1.0 + a * d2.powf(b)))
                } else {
                    0.0
                };
                for c in 0..dim {
                    let g = if coeff > 0.0 { clip(coeff * (y[i][c] - y[k][c])) } else { 4.0 };
                    y[i][c] += g * alpha;
                }
            }
            next_neg[slot] += n_neg as f64 * eps_neg[slot];
        }
    }
    Ok(Layout {
        vectors: y,
        dim,
        seed: params.seed,
    })
}

/// kNN graph, fuzzy set, and layout in one call.
pub fn reduce(
    points: &[Vec<f64>],
    n_neighbors: usize,
    metric: Metric,
    params: &LayoutParams,
) -> Result<Layout, ManifoldError> {
    let k = n_neighbors.min(points.len().saturating_sub(1));
    let g = build_knn_graph(points, k, metric)?;
    let f = fuzzy_simplicial_set(&g);
    optimize_layout(&f, params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn knn_on_a_line() {
        let g = build_knn_graph(&pts(&[0.0, 1.0, 3.0]), 1, Metric::Euclidean).unwrap();
        assert_eq!(g.indices, vec![vec![1], vec![0], vec![1]]);
        assert_eq!(g.distances, vec![vec![1.0], vec![1.0], vec![2.0]]);
    }

    #[test]
    fn knn_tie_goes_to_lower_index() {
        let g = build_knn_graph(&pts(&[0.0, -1.0, 1.0]), 1, Metric::Euclidean).unwrap();
        assert_eq!(g.indices[0], vec![1]);
    }

    #[test]
    fn knn_precondition() {
        assert!(matches!(
            build_knn_graph(&pts(&[0.0, 1.0]), 2, Metric::Euclidean),
            Err(ManifoldError::KTooLarge { k: 2, n: 2 })
        ));
    }

    #[test]
    fn duplicates_have_zero_distance() {
        let g = build_knn_graph(&pts(&[2.0, 2.0, 5.0]), 1, Metric::Euclidean).unwrap();
        assert_eq!(g.distances[0], vec![0.0]);
        assert_eq!(g.indices[0], vec![1]);
    }

    #[test]
    fn nearest_neighbor_membership_is_one() {
        let p: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64).sqrt(), (i % 7) as f64]).collect();
        let g = build_knn_graph(&p, 5, Metric::Euclidean).unwrap();
        let f = fuzzy_simplicial_set(&g);
        for (i, row) in f.directed.iter().enumerate() {
            assert_eq!(row[0].0, g.indices[i][0]);
            assert_eq!(row[0].1, 1.0);
        }
        for (i, row) in f.adjacency.iter().enumerate() {
            for &(j, w) in row {
                assert!(w > 0.0 && w <= 1.0);
                assert_eq!(w, f.weight(j, i));
            }
        }
    }

    #[test]
    fn sigma_hits_log2_k() {
        let d = [0.5, 0.9, 1.3, 2.0, 2.2, 3.0, 4.0, 5.0];
        let rho = d[0];
        let s = smooth_knn_sigma(&d, rho);
        let total: f64 = d.iter().map(|&x| (-(x - rho).max(0.0) / s).exp()).sum();
        assert!((total - 3.0).abs() < 1e-4, "{total}");
    }

    #[test]
    fn union_formula() {
        // Point 2's only neighbor is 1; 1's only neighbor is 0: edge (1,2) has a=0, b=1.
        let g = build_knn_graph(&pts(&[0.0, 1.0, 3.0]), 1, Metric::Euclidean).unwrap();
        let f = fuzzy_simplicial_set(&g);
        assert_eq!(f.weight(1, 2), 1.0);
        assert_eq!(f.weight(0, 2), 0.0);
    }

    #[test]
    fn cosine_metric() {
        assert!((Metric::Cosine.distance(&[1.0, 0.0], &[0.0, 2.0]) - 1.0).abs() < 1e-12);
        assert!(Metric::Cosine.distance(&[1.0, 1.0], &[2.0, 2.0]).abs() < 1e-12);
    }

    #[test]
    fn small_layout_is_finite_and_shaped() {
        let p: Vec<Vec<f64>> = (0..50).map(|i| vec![(i as f64).sin(), (i as f64 * 0.3).cos(), i as f64 / 50.0]).collect();
        let params = LayoutParams { dim: 2, epochs: Some(50), ..Default::default() };
        let l = reduce(&p, 10, Metric::Euclidean, &params).unwrap();
        assert_eq!(l.vectors.len(), 50);
        assert!(l.vectors.iter().all(|v| v.len() == 2));
        assert!(l.is_finite());
    }

    #[test]
    fn layout_rejects_zero_dim() {
        let g = build_knn_graph(&pts(&[0.0, 1.0, 3.0]), 1, Metric::Euclidean).unwrap();
        let f = fuzzy_simplicial_set(&g);
        let params = LayoutParams { dim: 0, ..Default::default() };
        assert!(matches!(optimize_layout(&f, &params), Err(ManifoldError::BadParams)));
    }
}
