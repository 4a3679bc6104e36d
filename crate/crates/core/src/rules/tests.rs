use proptest::prelude::*;

use super::*;
use crate::ingest::Schema;

const GENDER: &str =
    r#"rule gender { attribute: gender; map: "male" -> 0.65; "female" -> 0.35; default -> 0.0 }"#;

fn schema() -> Schema {
    Schema::default_schema()
}

fn kinds(err: RuleErrors) -> Vec<DiagnosticKind> {
    err.0.into_iter().map(|d| d.kind).collect()
}

#[test]
fn gender_rule_parses() {
    let rules = parse_rules(GENDER).unwrap();
    assert_eq!(rules.len(), 1);
    let r = &rules[0];
    assert_eq!(r.attribute, "gender");
    let Mapping::Categorical(arms) = &r.mapping else { panic!() };
    assert_eq!(arms.len(), 2);
    assert_eq!(arms[0], CategoricalArm { value: "male".into(), weights: vec![0.65] });
    assert_eq!(r.default, vec![0.0]);
    let male = r.apply("male").unwrap();
    let female = r.apply("female").unwrap();
    assert_eq!(male.0[0], 0.65);
    assert!(male.0[1..].iter().all(|&w| w == 0.0));
    assert!(male.0[0] > female.0[0]);
}

#[test]
fn default_rules_keep_male_above_female() {
    let schema = schema();
    let rules = RuleSet::default_rules(&schema);
    let gender = &rules.rules()[schema.index_of("gender").unwrap()];
    assert!(gender.apply("male").unwrap().0[0] > gender.apply("female").unwrap().0[0]);
}

#[test]
fn unknown_is_zero() {
    let schema = schema();
    for rule in RuleSet::default_rules(&schema).rules() {
        assert_eq!(rule.apply("unknown").unwrap(), WeightVector::zeros());
    }
}

#[test]
fn age_intervals() {
    let text = "rule age { attribute: age; map: [0, 40) -> 0.1; [40, 60) -> 0.4; [60, inf) -> 0.7; default -> 0 }";
    let r = &parse_rules(text).unwrap()[0];
    assert_eq!(r.apply("55").unwrap().0[..2], [0.4, 0.0]);
    assert_eq!(r.apply("40").unwrap().0[0], 0.4);
    assert_eq!(r.apply("39.99").unwrap().0[0], 0.1);
    assert_eq!(r.apply("99").unwrap().0[0], 0.7);
    assert_eq!(r.apply("-1").unwrap().0[0], 0.0);
    assert!(r.apply("old").is_err());
}

#[test]
fn multi_slot_weights_pad_with_zeros() {
    let r = &parse_rules(r#"rule s { attribute: s; map: "a" -> 0.9, 0.8, 0.1; default -> 0.2 }"#).unwrap()[0];
    assert_eq!(r.width(), 3);
    assert_eq!(r.apply("a").unwrap().0[..4], [0.9, 0.8, 0.1, 0.0]);
    assert_eq!(r.apply("b").unwrap().0[..2], [0.2, 0.0]);
}

#[test]
fn thirty_rules_is_coverage_error() {
    let schema = schema();
    let text = DEFAULT_RULES.replace("attribute: fatigue;", "attribute: hoarseness;");
    let err = parse_ruleset(&text, &schema).unwrap_err();
    let k = kinds(err);
    assert!(k.contains(&DiagnosticKind::Coverage(vec!["fatigue".into()])), "{k:?}");
    assert!(k.contains(&DiagnosticKind::DuplicateRule("hoarseness".into())));
}

#[test]
fn overlapping_intervals_rejected() {
    let err = parse_rules("rule a { attribute: age; map: [0, 40) -> 0.1; [30, 60) -> 0.4; default -> 0 }").unwrap_err();
    assert!(matches!(err.0[0].kind, DiagnosticKind::OverlappingIntervals { .. }));
}

#[test]
fn numeric_arms_sorted() {
    let r = &parse_rules("rule a { attribute: age; map: [60, inf) -> 0.7; [0, 40) -> 0.1; [40, 60) -> 0.4; default -> 0 }").unwrap()[0];
    let Mapping::Numeric(arms) = &r.mapping else { panic!() };
    let lows: Vec<f64> = arms.iter().map(|a| a.lo).collect();
    assert_eq!(lows, vec![0.0, 40.0, 60.0]);
}

#[test]
fn weight_errors() {
    let err = parse_rules(r#"rule a { attribute: a; map: "x" -> 1.5; default -> 0 }"#).unwrap_err();
    assert_eq!(err.0[0].kind, DiagnosticKind::WeightRange(1.5));
    let many = vec!["0.1"; 14].join(", ");
    let err = parse_rules(&format!(r#"rule a {{ attribute: a; map: "x" -> {many}; default -> 0 }}"#)).unwrap_err();
    assert_eq!(err.0[0].kind, DiagnosticKind::WeightCount(14));
}

#[test]
fn syntax_error_is_line_anchored() {
    let text = "rule a {\n  attribute: gender;\n  map: \"male\" => 0.5;\n  default -> 0\n}";
    let err = parse_rules(text).unwrap_err();
    assert_eq!(err.0[0].line, 3);
    assert!(err.to_string().starts_with("line 3:"), "{err}");
}

#[test]
fn recovery_reports_later_rules() {
    let text = "rule a { attribute gender; }\nrule b { attribute: x; map: \"y\" -> 2; default -> 0 }";
    let err = parse_rules(text).unwrap_err();
    let lines: Vec<usize> = err.0.iter().map(|d| d.line).collect();
    assert_eq!(lines, vec![1, 2]);
}

#[test]
fn schema_binding_errors() {
    let schema = schema();
    let text = DEFAULT_RULES.replace("attribute: fatigue;", "attribute: tiredness;");
    let k = kinds(parse_ruleset(&text, &schema).unwrap_err());
    assert!(k.contains(&DiagnosticKind::UnknownAttribute("tiredness".into())));

    let text = DEFAULT_RULES.replace(r#""male" -> 0.65"#, r#""man" -> 0.65"#);
    let k = kinds(parse_ruleset(&text, &schema).unwrap_err());
    assert!(matches!(&k[..], [DiagnosticKind::UnknownValue { value, .. }] if value == "man"));

    let text = DEFAULT_RULES.replace("attribute: gender;", "attribute: gender; category: symptom;");
    let k = kinds(parse_ruleset(&text, &schema).unwrap_err());
    assert!(matches!(&k[..], [DiagnosticKind::SchemaMismatch(_)]));
}

#[test]
fn evaluate_all_unknown() {
    let schema = schema();
    let rules = RuleSet::default_rules(&schema);
    let out = rules.evaluate(&PersonRecord::unknown(None)).unwrap();
    assert_eq!(out.len(), 31);
    assert!(out.iter().all(|v| *v == WeightVector::zeros()));
}

#[test]
fn evaluate_is_local() {
    let schema = schema();
    let rules = RuleSet::default_rules(&schema);
    let mut a = PersonRecord::unknown(None);
    a.set(&schema, "smoking_status", "smoker");
    a.set(&schema, "age", "50");
    let mut b = a.clone();
    b.set(&schema, "dyspnea", "yes");
    let (va, vb) = (rules.evaluate(&a).unwrap(), rules.evaluate(&b).unwrap());
    let dyspnea = schema.index_of("dyspnea").unwrap();
    for i in 0..31 {
        assert_eq!(va[i] == vb[i], i != dyspnea, "row {i}");
    }
}

#[test]
fn pretty_print_reparses_default() {
    let schema = schema();
    let rules = RuleSet::default_rules(&schema);
    assert_eq!(parse_ruleset(&rules.to_string(), &schema).unwrap(), rules);
}

fn weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(
        prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0, (0u32..=100).prop_map(|k| k as f64 / 100.0)],
        1..=13,
    )
}

fn arb_rule() -> impl Strategy<Value = Rule> {
    let categorical = prop::collection::btree_map("[a-z_ \"\\\\]{1,8}", weights(), 1..5).prop_map(|m| {
        Mapping::Categorical(
            m.into_iter()
                .map(|(value, weights)| CategoricalArm { value, weights })
                .collect(),
        )
    });
    let numeric = (prop::collection::btree_set(-1000i32..1000, 2..6), prop::collection::vec(weights(), 5), any::<bool>())
        .prop_map(|(cuts, ws, open_end)| {
            let cuts: Vec<f64> = cuts.into_iter().map(|c| c as f64 / 8.0).collect();
            let mut arms: Vec<NumericArm> = cuts
                .windows(2)
                .zip(ws)
                .map(|(w, weights)| NumericArm { lo: w[0], hi: w[1], weights })
                .collect();
            if open_end {
                let last = arms.last_mut().unwrap();
                last.hi = f64::INFINITY;
            }
            Mapping::Numeric(arms)
        });
    ("[a-z][a-z0-9_]{0,6}", "[a-z][a-z_]{0,6}", prop_oneof![categorical, numeric], weights()).prop_map(
        |(name, attribute, mapping, default)| Rule {
            name,
            attribute,
            category: None,
            theme: None,
            mapping,
            default,
        },
    )
}

proptest! {
    #[test]
    fn print_parse_round_trip(rules in prop::collection::vec(arb_rule(), 1..4)) {
        let text: String = rules.iter().map(|r| r.to_string()).collect::<Vec<_>>().join("\n");
        let back = parse_rules(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, rules);
    }

    #[test]
    fn numeric_rules_are_total(rule in arb_rule(), x in -200.0f64..200.0) {
        if let Mapping::Numeric(arms) = &rule.mapping {
            let hits = arms.iter().filter(|a| a.contains(x)).count();
            prop_assert!(hits <= 1);
            prop_assert!(rule.apply(&x.to_string()).is_ok());
        }
    }

    #[test]
    fn parser_never_panics(text in "[ -~\\n]{0,200}") {
        if let Err(e) = parse_rules(&text) {
            let lines = text.lines().count().max(1);
            prop_assert!(e.0.iter().all(|d| d.line >= 1 && d.line <= lines + 1));
        }
    }
}
