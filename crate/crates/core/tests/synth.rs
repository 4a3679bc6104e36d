mod common;

use common::setup;
use deeplcp_core::baselines::{featurize, fit_and_score, Algo, ForestParams};
use deeplcp_core::metrics::{evaluate, split_indices};
use deeplcp_core::semantic::transform_batch;
use deeplcp_core::synth::{generate, ground_truth_prob, SynthConfig};
use deeplcp_core::{clean_record, CleaningConfig, Label};

/// Hanley-McNeil standard error of an AUC estimate.
fn auc_se(auc: f64, n_pos: f64, n_neg: f64) -> f64 {
    let q1 = auc / (2.0 - auc);
    let q2 = 2.0 * auc * auc / (1.0 + auc);
    ((auc * (1.0 - auc) + (n_pos - 1.0) * (q1 - auc * auc) + (n_neg - 1.0) * (q2 - auc * auc)) / (n_pos * n_neg)).sqrt()
}

#[test]
fn bayes_auc_bounds_fitted_models() {
    let (schema, rules, plan) = setup();
    for seed in 0..5 {
        let cfg = SynthConfig::reference_scale(seed);
        let set = generate(&cfg, &schema, &rules, &plan).unwrap();
        let m = transform_batch(&set.records, &rules, &schema, &plan).unwrap();
        let data: Vec<_> = m.iter().zip(&set.records).map(|(m, r)| (featurize(m).unwrap(), r.label.unwrap())).collect();
        let (train_idx, test_idx) = split_indices(data.len(), None, seed, 490.0 / 601.0).unwrap();
        let train: Vec<_> = train_idx.iter().map(|&i| data[i]).collect();
        let test: Vec<_> = test_idx.iter().map(|&i| data[i].0).collect();
        let labels: Vec<Label> = test_idx.iter().map(|&i| data[i].1).collect();

        let truth: Vec<f64> = test.iter().map(|f| ground_truth_prob(&cfg, set.intercept, f)).collect();
        let bayes = evaluate(&truth, &labels).unwrap().auc;
        let n_pos = labels.iter().filter(|l| l.is_affected()).count() as f64;
        let n_neg = labels.len() as f64 - n_pos;
        for algo in [Algo::Knn { k: 5 }, Algo::Forest(ForestParams { n_trees: 31, seed, ..ForestParams::default() })] {
            let auc = evaluate(&fit_and_score(&algo, &train, &test).unwrap(), &labels).unwrap().auc;
            let slack = 3.0 * auc_se(bayes, n_pos, n_neg);
            assert!(auc <= bayes + slack, "seed {seed} {}: {auc} vs bayes {bayes}", algo.name());
        }
    }
}

#[test]
fn reference_scale_shape() {
    let (schema, rules, plan) = setup();
    let mut bayes = 0.0;
    for seed in 0..5 {
        let cfg = SynthConfig::reference_scale(seed);
        let set = generate(&cfg, &schema, &rules, &plan).unwrap();
        assert_eq!(set.records.len(), 601);
        let affected = set.records.iter().filter(|r| r.label == Some(Label::Affected)).count() as f64;
        // 355/601 within three binomial standard deviations
        let sd = (601.0 * cfg.prevalence * (1.0 - cfg.prevalence)).sqrt();
        assert!((affected - 355.0).abs() <= 3.0 * sd, "seed {seed}: {affected}");

        let m = transform_batch(&set.records, &rules, &schema, &plan).unwrap();
        let probs: Vec<f64> = m.iter().map(|m| ground_truth_prob(&cfg, set.intercept, &featurize(m).unwrap())).collect();
        let labels: Vec<Label> = set.records.iter().map(|r| r.label.unwrap()).collect();
        bayes += evaluate(&probs, &labels).unwrap().auc / 5.0;
    }
    assert!((0.98..=1.0).contains(&bayes), "mean Bayes AUC {bayes}");
}

#[test]
fn generated_records_survive_cleaning() {
    let (schema, rules, plan) = setup();
    let cfg = SynthConfig { n: 300, ..SynthConfig::reference_scale(8) };
    let cleaning = CleaningConfig::default_config();
    for r in generate(&cfg, &schema, &rules, &plan).unwrap().records {
        assert_eq!(clean_record(&r, &cleaning, &schema).unwrap(), r);
    }
}
