use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use deeplcp_core::nn::{backward, CnnModel, TrainConfig};
use deeplcp_core::rules::parse_ruleset;
use deeplcp_core::semantic::{build_raw_matrix, reduce, transform_batch};
use deeplcp_core::synth::{generate, SynthConfig};
use deeplcp_core::{GroupingPlan, Label, RuleSet, Schema};

fn setup() -> (Schema, RuleSet, GroupingPlan) {
    let schema = Schema::default_schema();
    let rules = RuleSet::default_rules(&schema);
    let plan = GroupingPlan::new(&schema, &rules).unwrap();
    (schema, rules, plan)
}

fn network(c: &mut Criterion) {
    let (schema, rules, plan) = setup();
    let set = generate(&SynthConfig { n: 1, ..SynthConfig::reference_scale(0) }, &schema, &rules, &plan).unwrap();
    let input = transform_batch(&set.records, &rules, &schema, &plan).unwrap().remove(0);
    let model = CnnModel::new(TrainConfig::default());
    c.bench_function("cnn_forward", |b| b.iter(|| model.forward(black_box(&input)).unwrap()));
    let (_, cache) = model.forward(&input).unwrap();
    c.bench_function("cnn_backward", |b| b.iter(|| backward(&model, black_box(&cache), Label::Affected)));
}

fn preprocessing(c: &mut Criterion) {
    let (schema, rules, plan) = setup();
    let set = generate(&SynthConfig { n: 64, ..SynthConfig::reference_scale(1) }, &schema, &rules, &plan).unwrap();
    let record = &set.records[0];
    c.bench_function("raw_matrix", |b| b.iter(|| build_raw_matrix(black_box(record), &rules, &schema).unwrap()));
    let raw = build_raw_matrix(record, &rules, &schema).unwrap();
    c.bench_function("reduce", |b| b.iter(|| reduce(black_box(&raw), &plan).unwrap()));
    c.bench_function("transform_batch_64", |b| {
        b.iter(|| transform_batch(black_box(&set.records), &rules, &schema, &plan).unwrap())
    });
}

fn rule_parsing(c: &mut Criterion) {
    let (schema, rules, _) = setup();
    let text = rules.to_string();
    c.bench_function("parse_default_rules", |b| b.iter(|| parse_ruleset(black_box(&text), &schema).unwrap()));
}

criterion_group!(benches, network, preprocessing, rule_parsing);
criterion_main!(benches);
