//! HDBSCAN over a layout: core distances, mutual-reachability MST, condensed
//! tree, and excess-of-mass cluster selection.
//!
//! The hierarchy is built from equal-weight MST edges merged together, so a
//! cluster splits into all of its connected components at a given density at
//! once. This makes the result independent of which MST was found when
//! distances tie.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_MIN_CLUSTER_SIZE: usize = 10;
pub const NOISE: i64 = -1;

#[derive(Debug, thiserror::Error)]
pub enum DensityError {
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("min_samples must be in 1..{n}, got {min_samples}")]
    InvalidMinSamples { min_samples: usize, n: usize },
    #[error("min_cluster_size must be at least 2, got {0}")]
    InvalidMinClusterSize(usize),
    #[error("points have inconsistent dimensions")]
    RaggedInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct HdbscanParams {
    pub min_cluster_size: usize,
    /// Defaults to `min_cluster_size`.
    pub min_samples: Option<usize>,
    /// Lets the root be selected, so the whole set can form one cluster.
    pub allow_single_cluster: bool,
}

impl Default for HdbscanParams {
    fn default() -> Self {
        Self {
            min_cluster_size: DEFAULT_MIN_CLUSTER_SIZE,
            min_samples: None,
            allow_single_cluster: false,
        }
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreDistances {
    pub min_samples: usize,
    /// Distance to the `min_samples`-th nearest other point.
    pub values: Vec<f64>,
}

pub fn core_distances(points: &[Vec<f64>], min_samples: usize) -> Result<CoreDistances, DensityError> {
    let n = points.len();
    if n < 2 {
        return Err(DensityError::TooFewPoints(n));
    }
    if min_samples == 0 || min_samples >= n {
        return Err(DensityError::InvalidMinSamples { min_samples, n });
    }
    if points.iter().any(|p| p.len() != points[0].len()) {
        return Err(DensityError::RaggedInput);
    }
    let values = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut d: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| euclidean(&points[i], &points[j]))
                .collect();
            d.select_nth_unstable_by(min_samples - 1, f64::total_cmp);
            d[min_samples - 1]
        })
        .collect();
    Ok(CoreDistances { min_samples, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MstEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanningTree {
    pub core: CoreDistances,
    /// `n - 1` edges in the order Prim's algorithm added them.
    pub edges: Vec<MstEdge>,
}

impl SpanningTree {
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }
}

/// `max(core(a), core(b), d(a, b))`.
pub fn mutual_reachability(points: &[Vec<f64>], core: &CoreDistances, a: usize, b: usize) -> f64 {
    core.values[a]
        .max(core.values[b])
        .max(euclidean(&points[a], &points[b]))
}

/// Prim's algorithm over the complete mutual-reachability graph, O(n²).
pub fn mutual_reachability_mst(points: &[Vec<f64>], min_samples: usize) -> Result<SpanningTree, DensityError> {
    let core = core_distances(points, min_samples)?;
    let n = points.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut next_w = f64::INFINITY;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let w = mutual_reachability(points, &core, current, j);
            if w < best[j] {
                best[j] = w;
                from[j] = current;
            }
            if best[j] < next_w {
                next_w = best[j];
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push(MstEdge {
            a: from[next],
            b: next,
            weight: next_w,
        });
        current = next;
    }
    Ok(SpanningTree { core, edges })
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Single-linkage hierarchy with multiway merges. Nodes `0..n` are points.
struct Dendrogram {
    n: usize,
    children: Vec<Vec<usize>>,
    distance: Vec<f64>,
    size: Vec<usize>,
}

impl Dendrogram {
    fn from_edges(n: usize, edges: &[MstEdge]) -> Self {
        let mut sorted = edges.to_vec();
        sorted.sort_by(|x, y| x.weight.total_cmp(&y.weight));
        let mut d = Dendrogram {
            n,
            children: vec![Vec::new(); n],
            distance: vec![0.0; n],
            size: vec![1; n],
        };
        let mut uf = UnionFind::new(n);
        let mut top: Vec<usize> = (0..n).collect();
        let mut start = 0;
        while start < sorted.len() {
            let w = sorted[start].weight;
            let mut end = start;
            while end < sorted.len() && sorted[end].weight == w {
                end += 1;
            }
            let group = &sorted[start..end];
            let mut touched: Vec<(usize, usize)> = Vec::new();
            for e in group {
                for p in [e.a, e.b] {
                    let r = uf.find(p);
                    touched.push((r, top[r]));
                }
            }
            for e in group {
                uf.union(e.a, e.b);
            }
            let mut merged: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
            for (old_root, node) in touched {
                let r = uf.find(old_root);
                merged.entry(r).or_default().push(node);
            }
            for (r, mut kids) in merged {
                kids.sort_unstable();
                kids.dedup();
                let id = d.children.len();
                d.size.push(kids.iter().map(|&k| d.size[k]).sum());
                d.children.push(kids);
                d.distance.push(w);
                top[r] = id;
            }
            start = end;
        }
        d
    }

    fn root(&self) -> usize {
        self.children.len() - 1
    }

    fn points_under(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(x) = stack.pop() {
            if x < self.n {
                out.push(x);
            } else {
                stack.extend(&self.children[x]);
            }
        }
        out
    }
}

pub fn lambda_of(distance: f64) -> f64 {
    1.0 / distance.max(f64::EPSILON)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensedCluster {
    pub id: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub size: usize,
    pub birth_lambda: f64,
    /// Density at which the cluster split or dissolved.
    pub death_lambda: f64,
    pub stability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensedTree {
    pub min_cluster_size: usize,
    /// Cluster 0 is the root; children always have larger ids than parents.
    pub clusters: Vec<CondensedCluster>,
    /// Per point, the deepest cluster it belonged to.
    pub point_cluster: Vec<usize>,
    /// Per point, the density at which it left that cluster.
    pub point_lambda: Vec<f64>,
}

impl CondensedTree {
    pub fn leaves(&self) -> Vec<usize> {
        self.clusters
            .iter()
            .filter(|c| c.children.is_empty())
            .map(|c| c.id)
            .collect()
    }

    fn is_descendant(&self, mut c: usize, ancestor: usize) -> bool {
        loop {
            if c == ancestor {
                return true;
            }
            match self.clusters[c].parent {
                Some(p) => c = p,
                None => return false,
            }
        }
    }
}

pub fn condense_hierarchy(tree: &SpanningTree, min_cluster_size: usize) -> Result<CondensedTree, DensityError> {
    if min_cluster_size < 2 {
        return Err(DensityError::InvalidMinClusterSize(min_cluster_size));
    }
    let n = tree.core.values.len();
    let dendro = Dendrogram::from_edges(n, &tree.edges);
    let mut clusters = vec![CondensedCluster {
        id: 0,
        parent: None,
        children: Vec::new(),
        size: n,
        birth_lambda: 0.0,
        death_lambda: 0.0,
        stability: 0.0,
    }];
    let mut point_cluster = vec![0; n];
    let mut point_lambda = vec![0.0; n];
    let mut work = vec![(dendro.root(), 0usize)];
    while let Some((start, cid)) = work.pop() {
        let mut node = start;
        loop {
            let lambda = lambda_of(dendro.distance[node]);
            let kids = &dendro.children[node];
            let (big, small): (Vec<usize>, Vec<usize>) =
                kids.iter().partition(|&&k| dendro.size[k] >= min_cluster_size);
            let shed = if big.is_empty() { kids.clone() } else { small };
            for k in shed {
                for p in dendro.points_under(k) {
                    point_cluster[p] = cid;
                    point_lambda[p] = lambda;
                }
            }
            match big.len() {
                0 => {
                    clusters[cid].death_lambda = lambda;
                    break;
                }
                1 => node = big[0],
                _ => {
                    clusters[cid].death_lambda = lambda;
                    let mut new_ids = Vec::new();
                    for &k in &big {
                        let id = clusters.len();
                        clusters.push(CondensedCluster {
                            id,
                            parent: Some(cid),
                            children: Vec::new(),
                            size: dendro.size[k],
                            birth_lambda: lambda,
                            death_lambda: lambda,
                            stability: 0.0,
                        });
                        new_ids.push(id);
                        clusters[cid].children.push(id);
                    }
                    // Reversed so the stack pops children in ascending order.
                    for (&k, &id) in big.iter().zip(&new_ids).rev() {
                        work.push((k, id));
                    }
                    break;
                }
            }
        }
    }
    for p in 0..n {
        let c = &mut clusters[point_cluster[p]];
        c.stability += point_lambda[p] - c.birth_lambda;
    }
    for c in 0..clusters.len() {
        let (birth, death) = (clusters[c].birth_lambda, clusters[c].death_lambda);
        let child_sizes: usize = clusters[c].children.iter().map(|&k| clusters[k].size).sum();
        clusters[c].stability += child_sizes as f64 * (death - birth);
    }
    Ok(CondensedTree {
        min_cluster_size,
        clusters,
        point_cluster,
        point_lambda,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// `-1` for noise, otherwise `0..n_clusters`.
    pub labels: Vec<i64>,
    pub strengths: Vec<f64>,
    pub n_clusters: usize,
}

impl ClusterAssignment {
    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.n_clusters];
        for &l in &self.labels {
            if l >= 0 {
                s[l as usize] += 1;
            }
        }
        s
    }
}

/// Excess-of-mass selection. A parent is kept over its descendants unless
/// their combined stability is strictly larger. Labels are numbered by the
/// smallest point index in each cluster.
pub fn extract_clusters(tree: &CondensedTree, allow_single_cluster: bool) -> ClusterAssignment {
    let m = tree.clusters.len();
    let n = tree.point_cluster.len();
    let mut best = vec![0.0; m];
    let mut selected = vec![false; m];
    for c in (0..m).rev() {
        let cl = &tree.clusters[c];
        let below: f64 = cl.children.iter().map(|&k| best[k]).sum();
        let eligible = cl.parent.is_some() || (allow_single_cluster && cl.size >= tree.min_cluster_size);
        if eligible && cl.stability >= below {
            best[c] = cl.stability;
            selected[c] = true;
        } else {
            best[c] = below;
        }
    }
    // Keep only the topmost selected cluster on every root path.
    let mut chosen = vec![None; m];
    for c in 0..m {
        let parent_choice = tree.clusters[c].parent.and_then(|p| chosen[p]);
        chosen[c] = parent_choice.or(if selected[c] { Some(c) } else { None });
    }
    let raw: Vec<Option<usize>> = (0..n).map(|p| chosen[tree.point_cluster[p]]).collect();

    let mut first_point: Vec<(usize, usize)> = Vec::new();
    for (p, c) in raw.iter().enumerate() {
        if let Some(c) = *c {
            if !first_point.iter().any(|&(_, x)| x == c) {
                first_point.push((p, c));
            }
        }
    }
    let label_of = |c: usize| first_point.iter().position(|&(_, x)| x == c).unwrap() as i64;
    let mut max_lambda = vec![0.0_f64; m];
    for p in 0..n {
        if let Some(c) = raw[p] {
            debug_assert!(tree.is_descendant(tree.point_cluster[p], c));
            max_lambda[c] = max_lambda[c].max(tree.point_lambda[p]);
        }
    }
    let mut labels = vec![NOISE; n];
    let mut strengths = vec![0.0; n];
    for p in 0..n {
        if let Some(c) = raw[p] {
            labels[p] = label_of(c);
            strengths[p] = if max_lambda[c] > 0.0 {
                (tree.point_lambda[p] / max_lambda[c]).clamp(0.0, 1.0)
            } else {
                1.0
            };
        }
    }
    ClusterAssignment {
        labels,
        strengths,
        n_clusters: first_point.len(),
    }
}

/// Core distances, MST, condensed tree, and cluster extraction.
pub fn hdbscan(points: &[Vec<f64>], params: &HdbscanParams) -> Result<(ClusterAssignment, CondensedTree), DensityError> {
    let min_samples = params.min_samples.unwrap_or(params.min_cluster_size);
    let mst = mutual_reachability_mst(points, min_samples)?;
    let tree = condense_hierarchy(&mst, params.min_cluster_size)?;
    let assignment = extract_clusters(&tree, params.allow_single_cluster);
    Ok((assignment, tree))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn cores_and_mst_by_hand() {
        let p = line(&[0.0, 1.0, 3.0]);
        let t = mutual_reachability_mst(&p, 1).unwrap();
        assert_eq!(t.core.values, [1.0, 1.0, 2.0]);
        assert_eq!(mutual_reachability(&p, &t.core, 1, 2), 2.0);
        let mut e: Vec<_> = t.edges.iter().map(|e| (e.a.min(e.b), e.a.max(e.b), e.weight)).collect();
        e.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(e, [(0, 1, 1.0), (1, 2, 2.0)]);
        assert_eq!(t.total_weight(), 3.0);
    }

    #[test]
    fn preconditions() {
        assert!(matches!(mutual_reachability_mst(&line(&[0.0]), 1), Err(DensityError::TooFewPoints(1))));
        assert!(matches!(
            mutual_reachability_mst(&line(&[0.0, 1.0]), 2),
            Err(DensityError::InvalidMinSamples { .. })
        ));
    }

    #[test]
    fn identical_points_form_one_root() {
        let p = line(&[2.0; 6]);
        let t = mutual_reachability_mst(&p, 2).unwrap();
        let tree = condense_hierarchy(&t, 2).unwrap();
        assert_eq!(tree.clusters.len(), 1);
        assert!(tree.point_lambda.iter().all(|&l| l == lambda_of(0.0)));
    }

    #[test]
    fn scattered_points_below_floor() {
        let p = line(&[0.0, 10.0, 25.0, 47.0]);
        let (a, _) = hdbscan(&p, &HdbscanParams { min_cluster_size: 5, min_samples: Some(1), ..Default::default() }).unwrap();
        assert_eq!(a.n_clusters, 0);
        assert_eq!(a.noise_count(), 4);
    }

    #[test]
    fn multiway_split_on_ties() {
        // Three equal gaps: all three pairs separate at the same density.
        let p = line(&[0.0, 0.1, 5.0, 5.1, 10.0, 10.1]);
        let t = mutual_reachability_mst(&p, 1).unwrap();
        let tree = condense_hierarchy(&t, 2).unwrap();
        assert_eq!(tree.clusters[0].children.len(), 3);
        let a = extract_clusters(&tree, false);
        assert_eq!(a.labels, [0, 0, 1, 1, 2, 2]);
    }

    #[test]
    fn stabilities_are_nonnegative() {
        let p: Vec<Vec<f64>> = (0..40).map(|i| vec![((i * 37) % 23) as f64, ((i * 11) % 17) as f64]).collect();
        let (_, tree) = hdbscan(&p, &HdbscanParams { min_cluster_size: 4, ..Default::default() }).unwrap();
        for c in &tree.clusters {
            assert!(c.stability >= 0.0);
            if c.parent.is_some() {
                assert!(c.size >= 4);
            }
        }
    }
}
