//! Predict high versus low ratings from topic shares, evaluate, and rank the
//! topics by mean absolute SHAP value.

use review_insight::rating::{explain, evaluate, rank_determinants, split_corpus, train_forest, ForestParams, LabeledInstance};
use review_insight::synth::topic_feature_set;

fn main() {
    let data = topic_feature_set(1500, 12, &[2, 7], 0.05, 11);
    let instances: Vec<LabeledInstance> = data
        .features
        .iter()
        .zip(&data.labels)
        .enumerate()
        .map(|(i, (f, &y))| LabeledInstance {
            doc_id: format!("r{i}"),
            features: f.clone(),
            label: y,
            empty_after_preprocess: false,
        })
        .collect();
    let split = split_corpus(&instances, (0.8, 0.1, 0.1), 42, true).unwrap();
    let forest = train_forest(&split.train, &ForestParams::default()).unwrap();
    let eval = evaluate(&forest, &split.test).unwrap();
    println!(
        "accuracy {:.3}, AUC {:.3}, confusion tn={} fp={} fn={} tp={}",
        eval.accuracy,
        eval.auc.unwrap_or(f64::NAN),
        eval.tn,
        eval.fp,
        eval.fn_,
        eval.tp
    );

    let xs: Vec<Vec<f64>> = split.test.iter().map(|i| i.features.clone()).collect();
    let names: Vec<String> = (0..12).map(|k| format!("topic {k}")).collect();
    let report = explain(&forest, &xs, &names).unwrap();
    let check = report.base_value + report.values[0].iter().sum::<f64>();
    println!("base {:.4}; base + sum(phi) = {check:.6}, forest says {:.6}", report.base_value, forest.predict_proba(&xs[0]).unwrap());
    for d in rank_determinants(&report).iter().take(4) {
        let dir = d.mean_phi_above_median.unwrap_or(0.0) - d.mean_phi_at_or_below_median.unwrap_or(0.0);
        println!("{:<9} mean |phi| {:.4}  {}", d.name, d.mean_abs_phi, if dir > 0.0 { "raises" } else { "lowers" });
    }
}
