//! `gml`: learn graph metrics, classify with them, and run the evaluation
//! protocol from the command line.

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gml_core::harness::{self, load_csv, load_query, ClassifierKind, ExperimentConfig, MetricFile};
use gml_core::{verify, Error, Result};

use config::{DataArgs, FileConfig, Format, OptimizerArgs, OutputArgs};

#[derive(Debug, Parser)]
#[command(name = "gml", version, about = "Learn graph metrics under scaled Gershgorin disc constraints")]
struct Cli {
    /// Log verbosity (-v info, -vv debug); RUST_LOG overrides
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Learn a one-vs-rest metric on a whole dataset and write it as JSON
    Learn(LearnArgs),
    /// Predict classes for query rows with a stored metric
    Classify(ClassifyArgs),
    /// Run repeated stratified cross-validation and report error rates
    Experiment(ExperimentArgs),
    /// Check numerical properties on random instances
    Verify(VerifyArgs),
}

#[derive(Debug, clap::Args)]
struct LearnArgs {
    /// JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    /// Class labelled +1; required when there are more than two classes
    #[arg(long)]
    positive_class: Option<String>,
    /// Use raw features instead of z-scores
    #[arg(long)]
    no_standardize: bool,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    /// Write per-iteration records (JSON) to this file
    #[arg(long)]
    trace_out: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, clap::Args)]
struct ClassifyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Metric file written by `learn`
    #[arg(long)]
    metric: Option<PathBuf>,
    /// Labelled training rows
    #[command(flatten)]
    data: DataArgs,
    /// Rows to classify, with or without the label column [default: the dataset]
    #[arg(long)]
    query: Option<PathBuf>,
    /// knn or graph
    #[arg(long)]
    classifier: Option<ClassifierKind>,
    /// Neighbours for kNN
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, clap::Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    /// Evaluate only this classifier [default: both]
    #[arg(long)]
    classifier: Option<ClassifierKind>,
    /// Neighbours for kNN
    #[arg(long)]
    k: Option<usize>,
    /// Seed range `a..b` (inclusive), a single seed, or a comma list [default: 0..49]
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    folds: Option<usize>,
    /// Use raw features instead of per-fold z-scores
    #[arg(long)]
    no_standardize: bool,
    /// Add wall-clock time to the report
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, clap::Args)]
struct VerifyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for the random instances
    #[arg(long)]
    seed: Option<u64>,
    /// Random instances per property
    #[arg(long)]
    instances: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Learn(a) => learn(a),
        Command::Classify(a) => classify(a),
        Command::Experiment(a) => experiment(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn learn(args: LearnArgs) -> Result<ExitCode> {
    let file = FileConfig::load(args.config.as_deref())?;
    let data = args.data.merge(&file)?;
    let dataset = load_csv(&data.dataset, &data.label_col, data.delimiter)?;
    let positive = match args.positive_class.or(file.positive_class.clone()) {
        Some(c) => c,
        None if dataset.num_classes == 2 => dataset.class_names[0].clone(),
        None => {
            return Err(Error::Config(format!(
                "{} classes; choose one with --positive-class ({})",
                dataset.num_classes,
                dataset.class_names.join(", ")
            )))
        }
    };
    let standardize = !args.no_standardize && file.standardize.unwrap_or(true);
    let settings = args.optimizer.merge(&file);
    let (metric, records) = harness::learn_one_vs_rest(&dataset, &positive, &settings, standardize)?;
    for r in &records {
        log::info!(
            "iteration={} objective={:e} lambda_min={:e} trace={} fw_gap={:e}",
            r.iteration,
            r.objective,
            r.lambda_min,
            r.trace,
            r.fw_gap
        );
    }
    if let Some(path) = args.trace_out.or(file.trace_out.clone()) {
        std::fs::write(path, serde_json::to_string_pretty(&records)? + "\n")?;
    }

    let (out, format) = args.output.merge(&file, Format::Json);
    let text = match format {
        Format::Json => metric.to_json()? + "\n",
        Format::Table => metric_table(&metric, &dataset.feature_names)?,
    };
    emit(&text, out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn metric_table(file: &MetricFile, names: &[String]) -> Result<String> {
    let m = file.matrix()?;
    let mut s = String::new();
    let width = names.iter().map(String::len).max().unwrap_or(0).max(10);
    let _ = writeln!(
        s,
        "positive class: {}",
        file.positive_class.as_deref().unwrap_or("-")
    );
    let _ = writeln!(s, "lambda_min: {:.6e}  trace: {:.6}", file.lambda_min, m.trace());
    let _ = write!(s, "{:width$}", "");
    for n in names {
        let _ = write!(s, " {n:>width$}");
    }
    s.push('\n');
    for (i, n) in names.iter().enumerate() {
        let _ = write!(s, "{n:width$}");
        for j in 0..m.dim() {
            let _ = write!(s, " {:>width$.4e}", m.get(i, j));
        }
        s.push('\n');
    }
    Ok(s)
}

fn classify(args: ClassifyArgs) -> Result<ExitCode> {
    let file = FileConfig::load(args.config.as_deref())?;
    let metric_path = args
        .metric
        .or(file.metric.clone())
        .ok_or_else(|| Error::Config("no metric file given (use --metric)".into()))?;
    let metric = MetricFile::load(&metric_path)?;
    let data = args.data.merge(&file)?;
    let train = load_csv(&data.dataset, &data.label_col, data.delimiter)?;
    let query_path = args.query.or(file.query.clone()).unwrap_or(data.dataset.clone());
    let (rows, truth) = load_query(&query_path, &data.label_col, data.delimiter, train.num_features())?;
    let classifier = args.classifier.or(file.classifier).unwrap_or(ClassifierKind::Graph);
    let k = args.k.or(file.k).unwrap_or(gml_core::classify::DEFAULT_K);

    let predicted: Vec<&str> = harness::predict(&metric, &train, &rows, classifier, k)?
        .into_iter()
        .map(|c| train.class_names[c].as_str())
        .collect();
    let misclassified = truth
        .as_ref()
        .map(|t| t.iter().zip(&predicted).filter(|(a, b)| a.as_str() != **b).count());
    let error = misclassified.map(|m| m as f64 / predicted.len() as f64);

    let (out, format) = args.output.merge(&file, Format::Table);
    let text = match format {
        Format::Json => {
            let v = serde_json::json!({
                "classifier": classifier,
                "k": k,
                "predictions": predicted,
                "misclassified": misclassified,
                "error": error,
            });
            serde_json::to_string_pretty(&v)? + "\n"
        }
        Format::Table => {
            let mut s = String::new();
            for (i, p) in predicted.iter().enumerate() {
                match &truth {
                    Some(t) => {
                        let mark = if t[i] == *p { "" } else { "  *" };
                        let _ = writeln!(s, "{i:>6}  {p:<20} {}{mark}", t[i]);
                    }
                    None => {
                        let _ = writeln!(s, "{i:>6}  {p}");
                    }
                }
            }
            if let (Some(m), Some(e)) = (misclassified, error) {
                let _ = writeln!(s, "{m} of {} misclassified ({:.2}%)", predicted.len(), 100.0 * e);
            }
            s
        }
    };
    emit(&text, out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn experiment(args: ExperimentArgs) -> Result<ExitCode> {
    let file = FileConfig::load(args.config.as_deref())?;
    let data = args.data.merge(&file)?;
    let dataset = load_csv(&data.dataset, &data.label_col, data.delimiter)?;
    let defaults = ExperimentConfig::default();
    let seeds = match (&args.seeds, &file.seeds) {
        (Some(s), _) => harness::parse_seeds(s)?,
        (None, Some(spec)) => spec.resolve()?,
        (None, None) => defaults.seeds.clone(),
    };
    let cfg = ExperimentConfig {
        optimizer: args.optimizer.merge(&file),
        classifiers: args
            .classifier
            .or(file.classifier)
            .map_or(defaults.classifiers.clone(), |c| vec![c]),
        k: args.k.or(file.k).unwrap_or(defaults.k),
        seeds,
        folds: args.folds.or(file.folds).unwrap_or(defaults.folds),
        standardize: !args.no_standardize && file.standardize.unwrap_or(defaults.standardize),
        timing: args.timing || file.timing.unwrap_or(false),
    };
    let report = harness::run_experiment(&dataset, &cfg)?;
    let (out, format) = args.output.merge(&file, Format::Table);
    let text = match format {
        Format::Json => report.to_json()? + "\n",
        Format::Table => report.to_table(),
    };
    emit(&text, out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn verify(args: VerifyArgs) -> Result<ExitCode> {
    let file = FileConfig::load(args.config.as_deref())?;
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let instances = args.instances.or(file.instances).unwrap_or(100);
    if instances == 0 {
        return Err(Error::Config("--instances must be positive".into()));
    }
    let results = verify::run_all(seed, instances)?;
    let (out, format) = args.output.merge(&file, Format::Table);
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&results)? + "\n",
        Format::Table => results.iter().map(|r| format!("{r}\n")).collect(),
    };
    emit(&text, out.as_deref())?;
    Ok(if results.iter().all(|r| r.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
