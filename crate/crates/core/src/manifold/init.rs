//! Initial layouts: spectral (leading nontrivial eigenvectors of the
//! normalized graph) and seeded uniform random.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::FuzzyGraph;

const SPECTRAL_ITERATIONS: usize = 300;
const INIT_EXTENT: f64 = 10.0;

pub(super) fn random(n: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-INIT_EXTENT..INIT_EXTENT)).collect())
        .collect()
}

fn orthonormalize(cols: &mut [Vec<f64>], against: &[f64]) {
    for c in 0..cols.len() {
        let (done, rest) = cols.split_at_mut(c);
        let v = &mut rest[0];
        for basis in std::iter::once(against).chain(done.iter().map(|x| x.as_slice())) {
            let p: f64 = v.iter().zip(basis).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(basis).for_each(|(a, b)| *a -= p * b);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
    }
}

/// Subspace iteration on `(I + D^-1/2 W D^-1/2) / 2`, deflating the trivial
/// eigenvector `D^1/2 1`. Each coordinate is rescaled to `[0, 10]` and a
/// little noise is added so coincident points can separate.
pub(super) fn spectral(g: &FuzzyGraph, dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = g.n;
    let deg: Vec<f64> = g.adjacency.iter().map(|r| r.iter().map(|e| e.1).sum()).collect();
    let inv_sqrt: Vec<f64> = deg.iter().map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 }).collect();
    let mut trivial: Vec<f64> = deg.iter().map(|d| d.sqrt()).collect();
    let tn = trivial.iter().map(|x| x * x).sum::<f64>().sqrt();
    trivial.iter_mut().for_each(|x| *x /= tn);

    let mut q: Vec<Vec<f64>> = (0..dim)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    orthonormalize(&mut q, &trivial);
    for _ in 0..SPECTRAL_ITERATIONS {
        for col in q.iter_mut() {
            let mut next = vec![0.0; n];
            for (i, row) in g.adjacency.iter().enumerate() {
                let s: f64 = row.iter().map(|&(j, w)| w * inv_sqrt[j] * col[j]).sum();
                next[i] = 0.5 * (col[i] + inv_sqrt[i] * s);
            }
            *col = next;
        }
        orthonormalize(&mut q, &trivial);
    }
    let mut y = vec![vec![0.0; dim]; n];
    for (c, col) in q.iter().enumerate() {
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        for i in 0..n {
            y[i][c] = INIT_EXTENT * (col[i] - lo) / span + rng.random_range(-1e-4..1e-4);
        }
    }
    y
}
