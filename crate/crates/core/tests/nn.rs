mod common;

use common::{fixture, random_reduced, setup};
use deeplcp_core::nn::{
    gradient_check, load_model, model_from_str, model_to_string, save_model, train, CnnModel, Example,
    OptimizerKind, Parameters, TrainConfig, FILTER_HEIGHTS, NUM_FILTERS,
};
use deeplcp_core::semantic::transform_batch;
use deeplcp_core::synth::{generate, SynthConfig};
use deeplcp_core::{Label, SemanticMatrix};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_model(seed: u64) -> CnnModel {
    let mut model = CnnModel::new(TrainConfig { seed, ..TrainConfig::default() });
    // nonzero biases so their gradients are exercised too
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb1a5);
    for f in &mut model.params.filters {
        f.bias = rng.random_range(-0.3..0.3);
    }
    for b in &mut model.params.dense.bias {
        *b = rng.random_range(-0.3..0.3);
    }
    model
}

#[test]
fn gradients_match_finite_differences() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(seed);
        let input = random_reduced(&mut rng);
        let label = if rng.random_bool(0.5) { Label::Affected } else { Label::Unaffected };
        let check = gradient_check(&model, &input, label, 1e-5).unwrap();
        assert_eq!(check.checked, model.params.num_parameters());
        assert!(check.max_relative_error < 1e-4, "seed {seed}: {check:?}");
    }
}

#[test]
fn architecture_shapes() {
    let model = CnnModel::new(TrainConfig::default());
    let heights: Vec<usize> = model.params.filters.iter().map(|f| f.height).collect();
    assert_eq!(heights, vec![5, 5, 6, 6, 7, 7]);
    assert_eq!(FILTER_HEIGHTS, [5, 6, 7]);
    assert!(model.params.filters.iter().all(|f| f.width == 13));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let (p, cache) = model.forward(&random_reduced(&mut rng)).unwrap();
        let lens: Vec<usize> = cache.maps.iter().map(Vec::len).collect();
        assert_eq!(lens, vec![14, 14, 13, 13, 12, 12]);
        assert_eq!(cache.pooled.len(), NUM_FILTERS);
        assert_eq!(cache.probs.len(), 2);
        assert!(p.p_affected > 0.0 && p.p_unaffected > 0.0);
        assert!((p.p_affected + p.p_unaffected - 1.0).abs() < 1e-9);
    }
}

/// Forward pass written out with plain loops over the public parameters.
fn straight_line(model: &CnnModel, m: &SemanticMatrix) -> (f64, f64) {
    let x = m.as_slice();
    let mut pooled = [0.0f64; 6];
    for (k, f) in model.params.filters.iter().enumerate() {
        let mut best = f64::NEG_INFINITY;
        for t in 0..(18 - f.height + 1) {
            let mut z = f.bias;
            for r in 0..f.height {
                for c in 0..13 {
                    z += f.weights[r * 13 + c] * x[(t + r) * 13 + c];
                }
            }
            best = best.max(z.max(0.0));
        }
        pooled[k] = best;
    }
    let d = &model.params.dense;
    let mut logits = [0.0f64; 2];
    for (o, l) in logits.iter_mut().enumerate() {
        *l = d.bias[o];
        for (i, p) in pooled.iter().enumerate() {
            *l += d.weights[o * 6 + i] * p;
        }
    }
    let m = logits[0].max(logits[1]);
    let (a, u) = ((logits[0] - m).exp(), (logits[1] - m).exp());
    (a / (a + u), u / (a + u))
}

#[test]
fn frozen_prediction_on_fixture() {
    let m = SemanticMatrix::parse_dump(&std::fs::read_to_string(fixture("fixture_reduced.txt")).unwrap()).unwrap();
    let model = CnnModel::new(TrainConfig { seed: 42, ..TrainConfig::default() });
    // produced once by `straight_line` and frozen
    let frozen = (0.36703709651544847, 0.6329629034845515);
    let oracle = straight_line(&model, &m);
    let p = model.predict(&m).unwrap();
    assert!((oracle.0 - frozen.0).abs() < 1e-12, "oracle {oracle:?}");
    assert!((p.p_affected - frozen.0).abs() < 1e-12);
    assert!((p.p_unaffected - frozen.1).abs() < 1e-12);
}

fn synth_examples(cfg: &SynthConfig) -> Vec<Example> {
    let (schema, rules, plan) = setup();
    let set = generate(cfg, &schema, &rules, &plan).unwrap();
    let matrices = transform_batch(&set.records, &rules, &schema, &plan).unwrap();
    matrices.into_iter().zip(set.records.iter().map(|r| r.label.unwrap())).collect()
}

fn separable_set() -> Vec<Example> {
    let mut cfg = SynthConfig::reference_scale(17);
    cfg.n = 200;
    cfg.noise = 0.0;
    for c in &mut cfg.coefficients {
        *c *= 1e3;
    }
    synth_examples(&cfg)
}

#[test]
fn loss_never_exceeds_first_epoch_on_separable_data() {
    let data = separable_set();
    let cfg = TrainConfig { learning_rate: 0.01, epochs: 50, seed: 2, ..TrainConfig::default() };
    let (_, history) = train(&cfg, &data, &[]).unwrap();
    let losses = history.train_loss();
    assert_eq!(losses.len(), 50);
    assert!(losses.iter().all(|&l| l <= losses[0]), "{losses:?}");
    assert!(losses[49] < losses[0]);
}

#[test]
fn memorizes_a_single_example() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let example = vec![(random_reduced(&mut rng), Label::Unaffected)];
    let cfg = TrainConfig {
        learning_rate: 0.1,
        epochs: 200,
        batch_size: 1,
        optimizer: OptimizerKind::Sgd,
        seed: 5,
    };
    let (_, history) = train(&cfg, &example, &[]).unwrap();
    assert!(history.last().unwrap().train_loss < 0.01, "{:?}", history.last());
}

#[test]
fn training_is_deterministic_and_order_free() {
    let data = separable_set();
    let cfg = TrainConfig { epochs: 5, seed: 11, ..TrainConfig::default() };
    let (m1, h1) = train(&cfg, &data, &data[..20]).unwrap();
    let (m2, h2) = train(&cfg, &data, &data[..20]).unwrap();
    assert_eq!(m1, m2);
    assert_eq!(h1, h2);
    assert_eq!(h1.epochs.len(), 5);
    assert!(h1.epochs.iter().all(|e| e.val_loss.is_some()));

    let mut shuffled = data.clone();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(99));
    let (m3, h3) = train(&cfg, &shuffled, &data[..20]).unwrap();
    assert_eq!(m1, m3);
    assert_eq!(h1, h3);

    let (m4, _) = train(&TrainConfig { seed: 12, ..cfg }, &data, &[]).unwrap();
    assert_ne!(m1, m4);
}

#[test]
fn save_and_load_round_trip() {
    let data = separable_set();
    let (model, _) = train(&TrainConfig { epochs: 3, seed: 4, ..TrainConfig::default() }, &data, &[]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.dlcp");
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded, model);
    assert_eq!(model_to_string(&loaded), std::fs::read_to_string(&path).unwrap());
    assert!(model_from_str(&model_to_string(&model).replacen("DEEPLCP-MODEL", "OTHER-MODEL", 1)).is_err());
}
