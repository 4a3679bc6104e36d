use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use deeplcp_core::baselines::{featurize, fit_and_score, Algo, AnnConfig, FeatureVector18, ForestParams, TreeParams};
use deeplcp_core::ingest::{parse_records, records_to_string, CleaningConfig, Label, PersonRecord, Schema};
use deeplcp_core::metrics::{evaluate, split_indices, EvalReport};
use deeplcp_core::nn::{load_model, save_model, train, OptimizerKind, TrainConfig, TrainHistory};
use deeplcp_core::pipeline::{run_benchmark, BenchmarkConfig, TRAIN_RECORDS};
use deeplcp_core::rules::{parse_ruleset, RuleSet};
use deeplcp_core::semantic::{build_raw_matrix, transform_batch, GroupingPlan, SemanticMatrix};
use deeplcp_core::synth::{generate, SynthConfig};

use crate::args::{AlgoArg, Cli, Command, Common, OptimizerArg, RulesAction, TrainArgs};
use crate::config::RunConfig;
use crate::CliError;

fn data_err(e: impl std::fmt::Display) -> CliError {
    CliError::data(e.to_string())
}

fn at(path: &Path) -> impl Fn(&dyn std::fmt::Display) -> CliError + '_ {
    move |e| CliError::data(format!("{}: {e}", path.display()))
}

/// Loaded schema, rules, plan and cleaning config.
struct Context {
    schema: Schema,
    rules: RuleSet,
    plan: GroupingPlan,
    cleaning: CleaningConfig,
}

/// Setting paths after layering flags and environment over the run config.
struct Paths {
    schema: Option<PathBuf>,
    rules: Option<PathBuf>,
    plan: Option<PathBuf>,
    clean: Option<PathBuf>,
}

impl Paths {
    fn resolve(common: &Common, run: &RunConfig) -> Paths {
        Paths {
            schema: common.schema.clone().or_else(|| run.path("schema")),
            rules: common.rules.clone().or_else(|| run.path("rules")),
            plan: common.plan.clone().or_else(|| run.path("plan")),
            clean: common.clean.clone().or_else(|| run.path("clean")),
        }
    }

    fn inputs(&self) -> Vec<&Path> {
        [&self.schema, &self.rules, &self.plan, &self.clean]
            .into_iter()
            .flatten()
            .map(PathBuf::as_path)
            .collect()
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| at(path)(&e))
}

fn load_schema(paths: &Paths) -> Result<Schema, CliError> {
    match &paths.schema {
        Some(p) => Schema::parse(&read(p)?).map_err(|e| at(p)(&e)),
        None => Ok(Schema::default_schema()),
    }
}

fn load_rules(paths: &Paths, schema: &Schema) -> Result<RuleSet, CliError> {
    match &paths.rules {
        Some(p) => parse_ruleset(&read(p)?, schema).map_err(|errs| {
            let lines: Vec<String> = errs.0.iter().map(|d| format!("{}:{}:{}: {}", p.display(), d.line, d.col, d.kind)).collect();
            CliError::data(lines.join("\n"))
        }),
        None => Ok(RuleSet::default_rules(schema)),
    }
}

fn load_context(paths: &Paths) -> Result<Context, CliError> {
    let schema = load_schema(paths)?;
    let rules = load_rules(paths, &schema)?;
    let plan = match &paths.plan {
        Some(p) => GroupingPlan::parse(&read(p)?, &schema, &rules).map_err(|e| at(p)(&e))?,
        None => GroupingPlan::new(&schema, &rules).map_err(data_err)?,
    };
    let cleaning = match &paths.clean {
        Some(p) => CleaningConfig::parse(&read(p)?).map_err(|e| at(p)(&e))?,
        None => CleaningConfig::default_config(),
    };
    cleaning.validate(&schema).map_err(data_err)?;
    Ok(Context {
        schema,
        rules,
        plan,
        cleaning,
    })
}

/// Every input must exist and every output's directory must exist before
/// any work starts.
fn check_paths(inputs: &[&Path], outputs: &[&Path]) -> Result<(), CliError> {
    for p in inputs {
        if !p.is_file() {
            return Err(CliError::data(format!("{}: no such file", p.display())));
        }
    }
    for p in outputs {
        let parent = p.parent().filter(|d| !d.as_os_str().is_empty());
        if let Some(dir) = parent {
            if !dir.is_dir() {
                return Err(CliError::data(format!("{}: directory does not exist", dir.display())));
            }
        }
    }
    Ok(())
}

/// Parses and cleans a record file. Rejected rows and values are reported as
/// `file:line` diagnostics on standard error.
fn read_records(path: &Path, ctx: &Context) -> Result<(Vec<PersonRecord>, usize), CliError> {
    let (records, issues) = parse_records(path, &ctx.schema).map_err(|e| at(path)(&e))?;
    for issue in &issues {
        eprintln!("{}:{}: {}", path.display(), issue.line, issue.message);
    }
    let mut cleaned = Vec::with_capacity(records.len());
    let mut rejected = issues.len();
    for (i, r) in records.iter().enumerate() {
        match deeplcp_core::clean_record(r, &ctx.cleaning, &ctx.schema) {
            Ok(c) => cleaned.push(c),
            Err(e) => {
                eprintln!("{}: record {}: {e}", path.display(), i + 1);
                rejected += 1;
            }
        }
    }
    Ok((cleaned, rejected))
}

/// Records that must all parse, clean and carry labels.
fn read_labeled(path: &Path, ctx: &Context) -> Result<(Vec<SemanticMatrix>, Vec<Label>), CliError> {
    let (records, rejected) = read_records(path, ctx)?;
    if rejected > 0 {
        return Err(CliError::data(format!("{}: {rejected} row(s) rejected", path.display())));
    }
    if records.is_empty() {
        return Err(CliError::data(format!("{}: no records", path.display())));
    }
    let labels = records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.label
                .ok_or_else(|| CliError::data(format!("{}: record {} has no label", path.display(), i + 1)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let matrices = transform_batch(&records, &ctx.rules, &ctx.schema, &ctx.plan).map_err(|e| at(path)(&e))?;
    Ok((matrices, labels))
}

fn resolve_train(args: &TrainArgs, run: &RunConfig) -> Result<TrainConfig, CliError> {
    let d = TrainConfig::default();
    let optimizer = match args.optimizer {
        Some(OptimizerArg::Sgd) => OptimizerKind::Sgd,
        Some(OptimizerArg::Adam) => OptimizerKind::Adam,
        None => match run.raw("optimizer") {
            Some((line, v)) => OptimizerKind::parse(v).ok_or_else(|| {
                CliError::data(format!("{}:{line}: unknown optimizer `{v}`", run.file().display()))
            })?,
            None => d.optimizer,
        },
    };
    let cfg = TrainConfig {
        learning_rate: args.lr.map_or_else(|| run.get("lr"), |v| Ok(Some(v)))?.unwrap_or(d.learning_rate),
        epochs: args.epochs.map_or_else(|| run.get("epochs"), |v| Ok(Some(v)))?.unwrap_or(d.epochs),
        batch_size: args.batch.map_or_else(|| run.get("batch"), |v| Ok(Some(v)))?.unwrap_or(d.batch_size),
        optimizer,
        seed: resolve_seed(args.seed, run)?,
    };
    cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(cfg)
}

fn resolve_seed(flag: Option<u64>, run: &RunConfig) -> Result<u64, CliError> {
    Ok(flag.map_or_else(|| run.get("seed"), |v| Ok(Some(v)))?.unwrap_or(0))
}

fn history_table(history: &TrainHistory) {
    eprintln!("{:>6} {:>10} {:>10} {:>10} {:>10}", "epoch", "loss", "accuracy", "val_loss", "val_acc");
    let n = history.epochs.len();
    for (i, e) in history.epochs.iter().enumerate() {
        if (i + 1) % 20 != 0 && i + 1 != n && i != 0 {
            continue;
        }
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
        eprintln!(
            "{:>6} {:>10.4} {:>10.4} {:>10} {:>10}",
            i + 1,
            e.train_loss,
            e.train_accuracy,
            opt(e.val_loss),
            opt(e.val_accuracy)
        );
    }
}

pub fn run(cli: Cli) -> Result<String, CliError> {
    let run = match &cli.common.run_config {
        Some(p) => {
            check_paths(&[p], &[])?;
            RunConfig::load(p)?
        }
        None => RunConfig::default(),
    };
    let paths = Paths::resolve(&cli.common, &run);
    let mut out = String::new();
    match cli.command {
        Command::Ingest { input, out: dest, strict } => {
            let mut inputs = paths.inputs();
            inputs.push(&input);
            check_paths(&inputs, &dest.iter().map(PathBuf::as_path).collect::<Vec<_>>())?;
            let ctx = load_context(&paths)?;
            let (records, rejected) = read_records(&input, &ctx)?;
            if let Some(dest) = &dest {
                std::fs::write(dest, records_to_string(&records, &ctx.schema)).map_err(|e| at(dest)(&e))?;
            }
            writeln!(out, "records={}", records.len()).unwrap();
            writeln!(out, "rejected={rejected}").unwrap();
            if strict && rejected > 0 {
                return Err(CliError {
                    output: out,
                    ..CliError::data(format!("{}: {rejected} row(s) rejected", input.display()))
                });
            }
        }
        Command::Rules { action: RulesAction::Check } => {
            check_paths(&paths.inputs(), &[])?;
            let schema = load_schema(&paths)?;
            let Some(rules_path) = &paths.rules else {
                return Err(CliError::usage("rules check needs --rules"));
            };
            match parse_ruleset(&read(rules_path)?, &schema) {
                Ok(rules) => {
                    writeln!(out, "status=ok").unwrap();
                    writeln!(out, "rules={}", rules.len()).unwrap();
                }
                Err(errs) => {
                    writeln!(out, "status=error").unwrap();
                    writeln!(out, "diagnostics={}", errs.0.len()).unwrap();
                    for d in &errs.0 {
                        writeln!(out, "diagnostic={}:{}:{}: {}", rules_path.display(), d.line, d.col, d.kind).unwrap();
                    }
                    return Err(CliError {
                        output: out,
                        ..CliError::data(format!("{}: {} diagnostic(s)", rules_path.display(), errs.0.len()))
                    });
                }
            }
        }
        Command::Transform { input, out: dir, raw } => {
            let mut inputs = paths.inputs();
            inputs.push(&input);
            check_paths(&inputs, &[&dir])?;
            let ctx = load_context(&paths)?;
            let (records, rejected) = read_records(&input, &ctx)?;
            if rejected > 0 {
                return Err(CliError::data(format!("{}: {rejected} row(s) rejected", input.display())));
            }
            std::fs::create_dir_all(&dir).map_err(|e| at(&dir)(&e))?;
            let matrices = if raw {
                records
                    .iter()
                    .map(|r| build_raw_matrix(r, &ctx.rules, &ctx.schema))
                    .collect::<Result<Vec<_>, _>>()
            } else {
                transform_batch(&records, &ctx.rules, &ctx.schema, &ctx.plan)
            }
            .map_err(|e| at(&input)(&e))?;
            let mut index = String::new();
            for (i, (m, r)) in matrices.iter().zip(&records).enumerate() {
                let name = format!("record_{:04}.txt", i + 1);
                let path = dir.join(&name);
                std::fs::write(&path, m.dump()).map_err(|e| at(&path)(&e))?;
                let label = r.label.map_or("-", Label::as_str);
                writeln!(index, "{} {name} {label}", i + 1).unwrap();
            }
            let index_path = dir.join("index.txt");
            std::fs::write(&index_path, index).map_err(|e| at(&index_path)(&e))?;
            writeln!(out, "records={}", matrices.len()).unwrap();
            writeln!(out, "form={}", if raw { "raw" } else { "reduced" }).unwrap();
        }
        Command::Synth { config, seed, n, out: dest } => {
            let mut inputs = paths.inputs();
            inputs.extend(config.iter().map(PathBuf::as_path));
            check_paths(&inputs, &[&dest])?;
            let ctx = load_context(&paths)?;
            let mut cfg = match &config {
                Some(p) => SynthConfig::parse(&read(p)?).map_err(|e| at(p)(&e))?,
                None => SynthConfig::reference_scale(0),
            };
            if let Some(s) = seed.map_or_else(|| run.get("seed"), |v| Ok(Some(v)))? {
                cfg.seed = s;
            }
            if let Some(n) = n {
                cfg.n = n;
            }
            let set = generate(&cfg, &ctx.schema, &ctx.rules, &ctx.plan).map_err(data_err)?;
            std::fs::write(&dest, records_to_string(&set.records, &ctx.schema)).map_err(|e| at(&dest)(&e))?;
            let affected = set.records.iter().filter(|r| r.label == Some(Label::Affected)).count();
            writeln!(out, "records={}", set.records.len()).unwrap();
            writeln!(out, "affected={affected}").unwrap();
            writeln!(out, "unaffected={}", set.records.len() - affected).unwrap();
            writeln!(out, "seed={}", cfg.seed).unwrap();
            writeln!(out, "intercept={:.6}", set.intercept).unwrap();
        }
        Command::Train { data, out: dest, train: targs } => {
            let mut inputs = paths.inputs();
            inputs.push(&data);
            check_paths(&inputs, &[&dest])?;
            let cfg = resolve_train(&targs, &run)?;
            let ctx = load_context(&paths)?;
            let (matrices, labels) = read_labeled(&data, &ctx)?;
            let examples: Vec<(SemanticMatrix, Label)> = matrices.into_iter().zip(labels).collect();
            eprintln!("training on {} records for {} epochs", examples.len(), cfg.epochs);
            let start = Instant::now();
            let (model, history) = train(&cfg, &examples, &[]).map_err(data_err)?;
            history_table(&history);
            eprintln!("trained in {:.1}s", start.elapsed().as_secs_f64());
            save_model(&model, &dest).map_err(|e| at(&dest)(&e))?;
            let last = history.last().expect("at least one epoch");
            writeln!(out, "records={}", examples.len()).unwrap();
            writeln!(out, "epochs={}", cfg.epochs).unwrap();
            writeln!(out, "train_loss={:.6}", last.train_loss).unwrap();
            writeln!(out, "train_accuracy={:.6}", last.train_accuracy).unwrap();
        }
        Command::Predict { model, record } => {
            let mut inputs = paths.inputs();
            inputs.extend([model.as_path(), record.as_path()]);
            check_paths(&inputs, &[])?;
            let ctx = load_context(&paths)?;
            let model = load_model(&model).map_err(|e| at(&model)(&e))?;
            let (records, rejected) = read_records(&record, &ctx)?;
            if rejected > 0 {
                return Err(CliError::data(format!("{}: {rejected} row(s) rejected", record.display())));
            }
            let matrices = transform_batch(&records, &ctx.rules, &ctx.schema, &ctx.plan).map_err(|e| at(&record)(&e))?;
            for (i, m) in matrices.iter().enumerate() {
                let p = model.predict(m).map_err(data_err)?;
                writeln!(
                    out,
                    "record={} p_affected={:.6} p_unaffected={:.6} label={}",
                    i + 1,
                    p.p_affected,
                    p.p_unaffected,
                    p.label()
                )
                .unwrap();
            }
        }
        Command::Evaluate { model, data, roc } => {
            let mut inputs = paths.inputs();
            inputs.extend([model.as_path(), data.as_path()]);
            check_paths(&inputs, &roc.iter().map(PathBuf::as_path).collect::<Vec<_>>())?;
            let ctx = load_context(&paths)?;
            let model = load_model(&model).map_err(|e| at(&model)(&e))?;
            let (matrices, labels) = read_labeled(&data, &ctx)?;
            let scores = matrices
                .iter()
                .map(|m| model.predict(m).map(|p| p.p_affected))
                .collect::<Result<Vec<_>, _>>()
                .map_err(data_err)?;
            let report = evaluate(&scores, &labels).map_err(data_err)?;
            if let Some(path) = &roc {
                std::fs::write(path, report.roc_text()).map_err(|e| at(path)(&e))?;
            }
            out.push_str(&report.render(""));
        }
        Command::Baseline { algo, data, test, k, seed, train_frac } => {
            let mut inputs = paths.inputs();
            inputs.push(&data);
            inputs.extend(test.iter().map(PathBuf::as_path));
            check_paths(&inputs, &[])?;
            let seed = resolve_seed(seed, &run)?;
            let algo = match algo {
                Some(a) => a,
                None => match run.raw("algo") {
                    Some((line, v)) => parse_algo(v).ok_or_else(|| {
                        CliError::data(format!("{}:{line}: unknown algo `{v}`", run.file().display()))
                    })?,
                    None => return Err(CliError::usage("baseline needs --algo knn|tree|forest|ann")),
                },
            };
            let k = k.map_or_else(|| run.get("k"), |v| Ok(Some(v)))?.unwrap_or(5);
            let algo = match algo {
                AlgoArg::Knn => Algo::Knn { k },
                AlgoArg::Tree => Algo::Tree(TreeParams::default()),
                AlgoArg::Forest => Algo::Forest(ForestParams { seed, ..ForestParams::default() }),
                AlgoArg::Ann => Algo::Ann(AnnConfig { seed, ..AnnConfig::default() }),
            };
            let ctx = load_context(&paths)?;
            let features = |path: &Path| -> Result<Vec<(FeatureVector18, Label)>, CliError> {
                let (m, l) = read_labeled(path, &ctx)?;
                m.iter()
                    .map(|m| featurize(m).map_err(data_err))
                    .zip(l)
                    .map(|(f, l)| f.map(|f| (f, l)))
                    .collect()
            };
            let all = features(&data)?;
            let (train_set, test_set) = match &test {
                Some(t) => (all, features(t)?),
                None => {
                    let (tr, te) = split_indices(all.len(), None, seed, train_frac).map_err(data_err)?;
                    (tr.iter().map(|&i| all[i]).collect(), te.iter().map(|&i| all[i]).collect())
                }
            };
            let queries: Vec<FeatureVector18> = test_set.iter().map(|(f, _)| *f).collect();
            let labels: Vec<Label> = test_set.iter().map(|(_, l)| *l).collect();
            let scores = fit_and_score(&algo, &train_set, &queries).map_err(|e| CliError::usage(e.to_string()))?;
            let report: EvalReport = evaluate(&scores, &labels).map_err(data_err)?;
            writeln!(out, "algo={}", algo.name()).unwrap();
            writeln!(out, "n_train={}", train_set.len()).unwrap();
            out.push_str(&report.render(""));
        }
        Command::Pipeline { out: dest, synth_config, no_baselines, train: targs } => {
            let mut inputs = paths.inputs();
            inputs.extend(synth_config.iter().map(PathBuf::as_path));
            check_paths(&inputs, &dest.iter().map(PathBuf::as_path).collect::<Vec<_>>())?;
            let train_cfg = resolve_train(&targs, &run)?;
            let ctx = load_context(&paths)?;
            let mut synth = match &synth_config {
                Some(p) => SynthConfig::parse(&read(p)?).map_err(|e| at(p)(&e))?,
                None => SynthConfig::reference_scale(0),
            };
            synth.seed = train_cfg.seed;
            let cfg = BenchmarkConfig {
                synth,
                train: train_cfg,
                train_frac: TRAIN_RECORDS as f64 / 601.0,
                baselines: !no_baselines,
            };
            eprintln!("pipeline: seed {}, {} records, {} epochs", cfg.synth.seed, cfg.synth.n, cfg.train.epochs);
            let start = Instant::now();
            let report = run_benchmark(&cfg, &ctx.schema, &ctx.rules, &ctx.plan).map_err(data_err)?;
            history_table(&report.history);
            eprintln!("{:<8} {:>9} {:>9} {:>9}", "model", "accuracy", "error", "auc");
            let rows = std::iter::once(("cnn", &report.cnn)).chain(report.baselines.iter().map(|(n, r)| (*n, r)));
            for (name, r) in rows {
                eprintln!("{name:<8} {:>9.4} {:>9.4} {:>9.4}", r.accuracy, r.error_rate(), r.auc);
            }
            eprintln!("finished in {:.1}s", start.elapsed().as_secs_f64());
            let text = report.render();
            if let Some(dest) = &dest {
                std::fs::write(dest, &text).map_err(|e| at(dest)(&e))?;
            }
            out.push_str(&text);
        }
    }
    Ok(out)
}

fn parse_algo(s: &str) -> Option<AlgoArg> {
    match s {
        "knn" => Some(AlgoArg::Knn),
        "tree" => Some(AlgoArg::Tree),
        "forest" => Some(AlgoArg::Forest),
        "ann" => Some(AlgoArg::Ann),
        _ => None,
    }
}
