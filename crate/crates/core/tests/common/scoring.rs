use std::collections::BTreeMap;

fn choose2(x: usize) -> f64 {
    (x * x.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index from the contingency table.
pub fn adjusted_rand_index(a: &[i64], b: &[i64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut table: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    let mut ra: BTreeMap<i64, usize> = BTreeMap::new();
    let mut rb: BTreeMap<i64, usize> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *ra.entry(x).or_default() += 1;
        *rb.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sa: f64 = ra.values().map(|&c| choose2(c)).sum();
    let sb: f64 = rb.values().map(|&c| choose2(c)).sum();
    let expected = sa * sb / choose2(a.len());
    let max = (sa + sb) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// Fraction of clustered items whose cluster's majority generator label matches theirs.
/// Items labelled `-1` are ignored.
pub fn purity(clusters: &[i64], truth: &[i64]) -> f64 {
    let mut by_cluster: BTreeMap<i64, BTreeMap<i64, usize>> = BTreeMap::new();
    for (&c, &t) in clusters.iter().zip(truth) {
        if c >= 0 {
            *by_cluster.entry(c).or_default().entry(t).or_default() += 1;
        }
    }
    let total: usize = by_cluster.values().flat_map(|m| m.values()).sum();
    let majority: usize = by_cluster.values().map(|m| *m.values().max().unwrap()).sum();
    if total == 0 {
        0.0
    } else {
        majority as f64 / total as f64
    }
}

/// Relabels so that labels appear in order of first occurrence; noise stays -1.
pub fn canonical(labels: &[i64]) -> Vec<i64> {
    let mut map = BTreeMap::new();
    labels
        .iter()
        .map(|&l| {
            if l < 0 {
                -1
            } else {
                let next = map.len() as i64;
                *map.entry(l).or_insert(next)
            }
        })
        .collect()
}
