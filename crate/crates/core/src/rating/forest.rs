use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{LabeledInstance, RatingError};
use crate::io;

pub const FOREST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `ceil(sqrt(K))`
    Sqrt,
    All,
    Fixed(usize),
}

impl MaxFeatures {
    pub fn resolve(self, k: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => (k as f64).sqrt().ceil() as usize,
            MaxFeatures::All => k,
            MaxFeatures::Fixed(m) => m.clamp(1, k.max(1)),
        }
        .max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    /// Reweights classes inversely to their frequency.
    pub balanced: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: MaxFeatures::Sqrt,
            min_leaf: 1,
            max_depth: None,
            balanced: false,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// `None` for leaves. Samples with `x[feature] <= threshold` go left.
    pub feature: Option<usize>,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    /// Bootstrap samples reaching the node, duplicates included.
    pub cover: f64,
    /// Probability of class 1 among those samples.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_for(&self, x: &[f64]) -> &Node {
        let mut n = &self.nodes[0];
        while let Some(f) = n.feature {
            n = &self.nodes[if x[f] <= n.threshold { n.left } else { n.right }];
        }
        n
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.leaf_for(x).value
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match t.nodes[i].feature {
                None => 0,
                Some(_) => 1 + go(t, t.nodes[i].left).max(go(t, t.nodes[i].right)),
            }
        }
        go(self, 0)
    }

    /// Expected output when every feature is unknown.
    pub fn expected_value(&self) -> f64 {
        let root = self.nodes[0].cover;
        self.nodes
            .iter()
            .filter(|n| n.feature.is_none())
            .map(|n| n.cover / root * n.value)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub n_features: usize,
    pub params: ForestParams,
}

impl Forest {
    fn check(&self, x: &[f64]) -> Result<(), RatingError> {
        if x.len() != self.n_features {
            return Err(RatingError::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Mean leaf probability of class 1.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, RatingError> {
        self.check(x)?;
        Ok(self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64)
    }

    /// Majority vote of per-tree classes. Ties, at tree or forest level, go to 0.
    pub fn predict_class(&self, x: &[f64]) -> Result<u8, RatingError> {
        self.check(x)?;
        let ones = self.trees.iter().filter(|t| t.predict(x) > 0.5).count();
        Ok(u8::from(2 * ones > self.trees.len()))
    }

    pub fn predict(&self, x: &[f64]) -> Result<(u8, f64), RatingError> {
        Ok((self.predict_class(x)?, self.predict_proba(x)?))
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    w: [f64; 2],
    max_features: usize,
    min_leaf: usize,
    max_depth: Option<usize>,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn weighted(&self, samples: &[usize]) -> (f64, f64) {
        samples.iter().fold((0.0, 0.0), |(t, o), &i| {
            let w = self.w[self.y[i] as usize];
            (t + w, o + if self.y[i] == 1 { w } else { 0.0 })
        })
    }

    fn gini(total: f64, ones: f64) -> f64 {
        if total <= 0.0 {
            return 0.0;
        }
        let p = ones / total;
        1.0 - p * p - (1.0 - p) * (1.0 - p)
    }

    /// Best (feature, threshold) by weighted Gini over up to `max_features`
    /// non-constant features drawn in random order.
    fn best_split(&self, samples: &[usize], rng: &mut ChaCha8Rng) -> Option<(usize, f64)> {
        let k = self.x[0].len();
        let mut features: Vec<usize> = (0..k).collect();
        features.shuffle(rng);
        let (total, total_ones) = self.weighted(samples);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut visited = 0;
        let mut order = samples.to_vec();
        for f in features {
            if visited >= self.max_features {
                break;
            }
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]));
            let first = self.x[order[0]][f];
            let last = self.x[order[order.len() - 1]][f];
            if first == last {
                continue;
            }
            visited += 1;
            let (mut lt, mut lo) = (0.0, 0.0);
            for pos in 0..order.len() - 1 {
                let i = order[pos];
                let w = self.w[self.y[i] as usize];
                lt += w;
                if self.y[i] == 1 {
                    lo += w;
                }
                let (v, next) = (self.x[i][f], self.x[order[pos + 1]][f]);
                if v == next || pos + 1 < self.min_leaf || order.len() - pos - 1 < self.min_leaf {
                    continue;
                }
                let (rt, ro) = (total - lt, total_ones - lo);
                let impurity = lt * Self::gini(lt, lo) + rt * Self::gini(rt, ro);
                if best.is_none_or(|b| impurity < b.0) {
                    let mut t = (v + next) / 2.0;
                    if t >= next || !t.is_finite() {
                        t = v;
                    }
                    best = Some((impurity, f, t));
                }
            }
        }
        best.map(|b| (b.1, b.2))
    }

    fn grow(&mut self, samples: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let (total, ones) = self.weighted(&samples);
        let id = self.nodes.len();
        self.nodes.push(Node {
            feature: None,
            threshold: 0.0,
            left: 0,
            right: 0,
            cover: samples.len() as f64,
            value: if total > 0.0 { ones / total } else { 0.0 },
        });
        let pure = ones == 0.0 || ones == total;
        let too_deep = self.max_depth.is_some_and(|d| depth >= d);
        if pure || too_deep || samples.len() < 2 * self.min_leaf {
            return id;
        }
        let Some((f, t)) = self.best_split(&samples, rng) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = samples.iter().partition(|&&i| self.x[i][f] <= t);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        let n = &mut self.nodes[id];
        n.feature = Some(f);
        n.threshold = t;
        n.left = left;
        n.right = right;
        id
    }
}

/// Bootstrap-aggregated Gini trees. Trees are grown in parallel from seeds
/// drawn in order from `params.seed`, so the result does not depend on the
/// thread count.
pub fn train_forest(train: &[LabeledInstance], params: &ForestParams) -> Result<Forest, RatingError> {
    if train.is_empty() || params.n_trees == 0 {
        return Err(RatingError::EmptyTrainingSet);
    }
    let k = train[0].features.len();
    if let Some(bad) = train.iter().find(|i| i.features.len() != k) {
        return Err(RatingError::DimensionMismatch {
            expected: k,
            got: bad.features.len(),
        });
    }
    let x: Vec<Vec<f64>> = train.iter().map(|i| i.features.clone()).collect();
    let y: Vec<u8> = train.iter().map(|i| i.label).collect();
    let n = x.len();
    let ones = y.iter().filter(|&&v| v == 1).count();
    let w = if params.balanced && ones > 0 && ones < n {
        [n as f64 / (2.0 * (n - ones) as f64), n as f64 / (2.0 * ones as f64)]
    } else {
        [1.0, 1.0]
    };
    let mut master = ChaCha8Rng::seed_from_u64(params.seed);
    let seeds: Vec<u64> = (0..params.n_trees).map(|_| master.random()).collect();
    let trees = seeds
        .par_iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut b = Builder {
                x: &x,
                y: &y,
                w,
                max_features: params.max_features.resolve(k),
                min_leaf: params.min_leaf.max(1),
                max_depth: params.max_depth,
                nodes: Vec::new(),
            };
            b.grow(sample, 0, &mut rng);
            Tree { nodes: b.nodes }
        })
        .collect();
    Ok(Forest {
        trees,
        n_features: k,
        params: *params,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestDocument {
    pub format_version: u32,
    pub forest: Forest,
}

pub fn save_forest(path: &Path, forest: &Forest) -> Result<(), RatingError> {
    let doc = ForestDocument {
        format_version: FOREST_FORMAT_VERSION,
        forest: forest.clone(),
    };
    Ok(io::write_json(path, &doc)?)
}

pub fn load_forest(path: &Path) -> Result<Forest, RatingError> {
    let doc: ForestDocument = io::read_json(path)?;
    if doc.format_version != FOREST_FORMAT_VERSION {
        return Err(RatingError::UnsupportedVersion(doc.format_version));
    }
    Ok(doc.forest)
}
