use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Forest, RatingError, Tree};
use crate::io;

#[derive(Debug, Clone, Copy)]
struct PathElement {
    feature: Option<usize>,
    zero_fraction: f64,
    one_fraction: f64,
    weight: f64,
}

fn extend(path: &mut Vec<PathElement>, zero_fraction: f64, one_fraction: f64, feature: Option<usize>) {
    let depth = path.len();
    path.push(PathElement {
        feature,
        zero_fraction,
        one_fraction,
        weight: if depth == 0 { 1.0 } else { 0.0 },
    });
    let d = depth as f64;
    for i in (0..depth).rev() {
        let wi = path[i].weight;
        path[i + 1].weight += one_fraction * wi * (i as f64 + 1.0) / (d + 1.0);
        path[i].weight = zero_fraction * wi * (d - i as f64) / (d + 1.0);
    }
}

fn unwind(path: &mut Vec<PathElement>, index: usize) {
    let depth = path.len() - 1;
    let d = depth as f64;
    let (one, zero) = (path[index].one_fraction, path[index].zero_fraction);
    let mut next = path[depth].weight;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = path[i].weight;
            path[i].weight = next * (d + 1.0) / ((i as f64 + 1.0) * one);
            next = tmp - path[i].weight * zero * (d - i as f64) / (d + 1.0);
        } else {
            path[i].weight = path[i].weight * (d + 1.0) / (zero * (d - i as f64));
        }
    }
    for i in index..depth {
        path[i].feature = path[i + 1].feature;
        path[i].zero_fraction = path[i + 1].zero_fraction;
        path[i].one_fraction = path[i + 1].one_fraction;
    }
    path.pop();
}

fn unwound_sum(path: &[PathElement], index: usize) -> f64 {
    let depth = path.len() - 1;
    let d = depth as f64;
    let (one, zero) = (path[index].one_fraction, path[index].zero_fraction);
    let mut next = path[depth].weight;
    let mut total = 0.0;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = next * (d + 1.0) / ((i as f64 + 1.0) * one);
            total += tmp;
            next = path[i].weight - tmp * zero * (d - i as f64) / (d + 1.0);
        } else {
            total += path[i].weight / zero / ((d - i as f64) / (d + 1.0));
        }
    }
    total
}

fn recurse(
    tree: &Tree,
    node: usize,
    x: &[f64],
    phi: &mut [f64],
    mut path: Vec<PathElement>,
    zero_fraction: f64,
    one_fraction: f64,
    feature: Option<usize>,
) {
    extend(&mut path, zero_fraction, one_fraction, feature);
    let n = &tree.nodes[node];
    let Some(split) = n.feature else {
        for i in 1..path.len() {
            let w = unwound_sum(&path, i);
            let e = path[i];
            phi[e.feature.expect("only the root element lacks a feature")] +=
                w * (e.one_fraction - e.zero_fraction) * n.value;
        }
        return;
    };
    let (hot, cold) = if x[split] <= n.threshold { (n.left, n.right) } else { (n.right, n.left) };
    let hot_zero = tree.nodes[hot].cover / n.cover;
    let cold_zero = tree.nodes[cold].cover / n.cover;
    let (mut inc_zero, mut inc_one) = (1.0, 1.0);
    if let Some(k) = path.iter().position(|e| e.feature == Some(split)) {
        inc_zero = path[k].zero_fraction;
        inc_one = path[k].one_fraction;
        unwind(&mut path, k);
    }
    recurse(tree, hot, x, phi, path.clone(), hot_zero * inc_zero, inc_one, Some(split));
    recurse(tree, cold, x, phi, path, cold_zero * inc_zero, 0.0, Some(split));
}

/// Exact path-dependent Shapley values of one tree's class-1 probability,
/// using node covers as the background distribution.
pub fn tree_shap(tree: &Tree, x: &[f64]) -> Vec<f64> {
    let mut phi = vec![0.0; x.len()];
    recurse(tree, 0, x, &mut phi, Vec::new(), 1.0, 1.0, None);
    phi
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapReport {
    pub base_value: f64,
    pub feature_names: Vec<String>,
    /// Per instance, per feature.
    pub values: Vec<Vec<f64>>,
    /// Feature values the attributions were computed for.
    pub features: Vec<Vec<f64>>,
}

/// Forest attributions: the mean over trees of each tree's values. The base
/// value is the mean of the trees' cover-weighted expectations.
pub fn explain(forest: &Forest, instances: &[Vec<f64>], feature_names: &[String]) -> Result<ShapReport, RatingError> {
    if let Some(bad) = instances.iter().find(|x| x.len() != forest.n_features) {
        return Err(RatingError::DimensionMismatch {
            expected: forest.n_features,
            got: bad.len(),
        });
    }
    let t = forest.trees.len() as f64;
    let base_value = forest.trees.iter().map(Tree::expected_value).sum::<f64>() / t;
    let values = instances
        .par_iter()
        .map(|x| {
            let mut phi = vec![0.0; x.len()];
            for tree in &forest.trees {
                for (p, v) in phi.iter_mut().zip(tree_shap(tree, x)) {
                    *p += v;
                }
            }
            phi.iter_mut().for_each(|p| *p /= t);
            phi
        })
        .collect();
    Ok(ShapReport {
        base_value,
        feature_names: feature_names.to_vec(),
        values,
        features: instances.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Determinant {
    pub feature: usize,
    pub name: String,
    pub mean_abs_phi: f64,
    /// Mean attribution where the feature is above its median.
    pub mean_phi_above_median: Option<f64>,
    /// Mean attribution where the feature is at or below its median.
    pub mean_phi_at_or_below_median: Option<f64>,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Features by mean absolute attribution, largest first (ties: lower index),
/// with the direction of influence split at each feature's median.
pub fn rank_determinants(report: &ShapReport) -> Vec<Determinant> {
    let k = report.values.first().map_or(0, Vec::len);
    let n = report.values.len().max(1) as f64;
    let mut out: Vec<Determinant> = (0..k)
        .map(|j| {
            let mut col: Vec<f64> = report.features.iter().map(|x| x[j]).collect();
            let m = if col.is_empty() { 0.0 } else { median(&mut col) };
            let pairs = || report.features.iter().zip(&report.values).map(move |(x, p)| (x[j], p[j]));
            Determinant {
                feature: j,
                name: report.feature_names.get(j).cloned().unwrap_or_else(|| format!("f{j}")),
                mean_abs_phi: report.values.iter().map(|p| p[j].abs()).sum::<f64>() / n,
                mean_phi_above_median: mean(pairs().filter(|(x, _)| *x > m).map(|(_, p)| p)),
                mean_phi_at_or_below_median: mean(pairs().filter(|(x, _)| *x <= m).map(|(_, p)| p)),
            }
        })
        .collect();
    out.sort_by(|a, b| b.mean_abs_phi.total_cmp(&a.mean_abs_phi).then(a.feature.cmp(&b.feature)));
    out
}

#[derive(Serialize)]
struct BeeswarmRow<'a> {
    feature: &'a str,
    feature_value: f64,
    phi: f64,
}

/// One row per (instance, feature): the data behind a beeswarm plot.
pub fn write_beeswarm_csv(path: &Path, report: &ShapReport) -> Result<(), RatingError> {
    io::ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    for (x, phi) in report.features.iter().zip(&report.values) {
        for (j, (&v, &p)) in x.iter().zip(phi).enumerate() {
            w.serialize(BeeswarmRow {
                feature: report.feature_names.get(j).map_or("", String::as_str),
                feature_value: v,
                phi: p,
            })?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
