//! HDBSCAN by repeated connected-component search on the full
//! mutual-reachability matrix. No spanning tree, no union-find.

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn lambda(d: f64) -> f64 {
    1.0 / d.max(f64::EPSILON)
}

struct Node {
    points: Vec<usize>,
    birth: f64,
    /// Per member point: the density at which it stopped belonging here.
    exit: Vec<(usize, f64)>,
    children: Vec<usize>,
    is_root: bool,
}

/// Components of `set` using only pairs with weight strictly below `t`.
fn components(w: &[Vec<f64>], set: &[usize], t: f64) -> Vec<Vec<usize>> {
    let mut seen = vec![false; set.len()];
    let mut out = Vec::new();
    for s in 0..set.len() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![set[s]];
        let mut stack = vec![s];
        while let Some(i) = stack.pop() {
            for j in 0..set.len() {
                if !seen[j] && w[set[i]][set[j]] < t {
                    seen[j] = true;
                    comp.push(set[j]);
                    stack.push(j);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Smallest pairwise weight `t` for which `set` is connected using pairs `<= t`.
fn connecting_level(w: &[Vec<f64>], set: &[usize]) -> f64 {
    let mut levels: Vec<f64> = Vec::new();
    for (a, &i) in set.iter().enumerate() {
        for &j in &set[a + 1..] {
            levels.push(w[i][j]);
        }
    }
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    // components(<= t) == components(< next level above t)
    let connected = |t: f64| components(w, set, f64::from_bits(t.to_bits() + 1)).len() == 1;
    let (mut lo, mut hi) = (0, levels.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if connected(levels[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    levels[lo]
}

pub fn naive_hdbscan(points: &[Vec<f64>], min_cluster_size: usize, min_samples: usize, allow_single: bool) -> Vec<i64> {
    let n = points.len();
    let core: Vec<f64> = (0..n)
        .map(|i| {
            let mut d: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| dist(&points[i], &points[j])).collect();
            d.sort_by(f64::total_cmp);
            d[min_samples - 1]
        })
        .collect();
    let w: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| core[i].max(core[j]).max(dist(&points[i], &points[j]))).collect())
        .collect();

    let mut nodes = vec![Node { points: (0..n).collect(), birth: 0.0, exit: vec![], children: vec![], is_root: true }];
    let mut queue = vec![0usize];
    while let Some(id) = queue.pop() {
        let mut current = nodes[id].points.clone();
        loop {
            let t = connecting_level(&w, &current);
            let l = lambda(t);
            let comps = components(&w, &current, t);
            let (big, small): (Vec<_>, Vec<_>) = comps.into_iter().partition(|c| c.len() >= min_cluster_size);
            for c in &small {
                for &p in c {
                    nodes[id].exit.push((p, l));
                }
            }
            if big.len() == 1 {
                current = big.into_iter().next().unwrap();
                continue;
            }
            for c in big {
                for &p in &c {
                    nodes[id].exit.push((p, l));
                }
                let child = nodes.len();
                nodes.push(Node { points: c, birth: l, exit: vec![], children: vec![], is_root: false });
                nodes[id].children.push(child);
                queue.push(child);
            }
            break;
        }
    }

    let stability = |node: &Node| node.exit.iter().map(|&(_, l)| l - node.birth).sum::<f64>();

    fn select(nodes: &[Node], id: usize, allow_single: bool, mcs: usize, stab: &dyn Fn(&Node) -> f64) -> (f64, Vec<usize>) {
        let mut sum = 0.0;
        let mut chosen = Vec::new();
        for &c in &nodes[id].children {
            let (s, mut sel) = select(nodes, c, allow_single, mcs, stab);
            sum += s;
            chosen.append(&mut sel);
        }
        let node = &nodes[id];
        let eligible = !node.is_root || (allow_single && node.points.len() >= mcs);
        let own = stab(node);
        if eligible && own >= sum {
            (own, vec![id])
        } else {
            (sum, chosen)
        }
    }
    let (_, chosen) = select(&nodes, 0, allow_single, min_cluster_size, &stability);

    let mut labels = vec![-1i64; n];
    let mut order: Vec<(usize, usize)> = chosen.iter().map(|&c| (nodes[c].points[0], c)).collect();
    order.sort_unstable();
    for (label, &(_, c)) in order.iter().enumerate() {
        for &p in &nodes[c].points {
            labels[p] = label as i64;
        }
    }
    labels
}
