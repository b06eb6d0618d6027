//! Fits the low-dimensional similarity curve `1 / (1 + a d^(2b))` to the
//! offset exponential implied by `min_dist` and `spread`.

const SAMPLES: usize = 300;
const MAX_ITERATIONS: usize = 500;

fn target(x: f64, spread: f64, min_dist: f64) -> f64 {
    if x < min_dist {
        1.0
    } else {
        (-(x - min_dist) / spread).exp()
    }
}

fn sse(xs: &[f64], ys: &[f64], a: f64, b: f64) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let f = 1.0 / (1.0 + a * x.powf(2.0 * b));
            (f - y).powi(2)
        })
        .sum()
}

/// Least-squares `(a, b)` by Levenberg-Marquardt from `(1, 1)` on 300 points
/// spaced evenly over `[0, 3 * spread]`.
pub fn fit_ab(spread: f64, min_dist: f64) -> (f64, f64) {
    let xs: Vec<f64> = (0..SAMPLES)
        .map(|i| 3.0 * spread * i as f64 / (SAMPLES - 1) as f64)
        .collect();
    let ys: Vec<f64> = xs.iter().map(|&x| target(x, spread, min_dist)).collect();
    let (mut a, mut b) = (1.0_f64, 1.0_f64);
    let mut lambda = 1e-3;
    let mut cost = sse(&xs, &ys, a, b);
    for _ in 0..MAX_ITERATIONS {
        // Normal equations J^T J and J^T r for the 2-parameter model.
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&x, &y) in xs.iter().zip(&ys) {
            if x == 0.0 {
                continue;
            }
            let u = x.powf(2.0 * b);
            let f = 1.0 / (1.0 + a * u);
            let r = f - y;
            let da = -u * f * f;
            let db = -a * u * 2.0 * x.ln() * f * f;
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        let mut improved = false;
        for _ in 0..30 {
            let (m11, m22) = (jaa * (1.0 + lambda), jbb * (1.0 + lambda));
            let det = m11 * m22 - jab * jab;
            if det.abs() < f64::MIN_POSITIVE {
                lambda *= 10.0;
                continue;
            }
            let step_a = -(m22 * ga - jab * gb) / det;
            let step_b = -(m11 * gb - jab * ga) / det;
            let (na, nb) = (a + step_a, b + step_b);
            let new_cost = if na > 0.0 && nb > 0.0 { sse(&xs, &ys, na, nb) } else { f64::INFINITY };
            if new_cost < cost {
                let rel = (cost - new_cost) / cost.max(f64::MIN_POSITIVE);
                a = na;
                b = nb;
                cost = new_cost;
                lambda = (lambda / 10.0).max(1e-12);
                improved = rel > 1e-15;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_reference_parameters() {
        // Values produced by the reference implementation's curve fit.
        let (a, b) = fit_ab(1.0, 0.1);
        assert!((a - 1.5769).abs() < 2e-3, "a = {a}");
        assert!((b - 0.8951).abs() < 2e-3, "b = {b}");
        let (a, b) = fit_ab(1.0, 0.001);
        assert!((a - 1.9290).abs() < 5e-3, "a = {a}");
        assert!((b - 0.7915).abs() < 5e-3, "b = {b}");
    }

    #[test]
    fn fit_is_a_local_minimum() {
        let xs: Vec<f64> = (0..SAMPLES).map(|i| 3.0 * i as f64 / (SAMPLES - 1) as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| target(x, 1.0, 0.25)).collect();
        let (a, b) = fit_ab(1.0, 0.25);
        let best = sse(&xs, &ys, a, b);
        for (da, db) in [(1e-3, 0.0), (-1e-3, 0.0), (0.0, 1e-3), (0.0, -1e-3)] {
            assert!(sse(&xs, &ys, a + da, b + db) >= best);
        }
    }
}
