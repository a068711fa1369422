//! Command-line front door: validation, feature extraction, training and
//! evaluation, the ablation and window-sweep protocols, synthetic corpus
//! generation, and run comparison.
//!
//! Exit codes: 0 success, 2 usage/config/validation error, 3 I/O error,
//! 4 runtime failure. Stdout carries machine-parsable `key=value` lines.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use iqbench::config::{ConfigError, RunConfig, RunManifest};
use iqbench::corpus::{first_exchange_label_check, parse_corpus, CorpusError};
use iqbench::experiments::{
    cross_validate, run_level_ablation, run_window_sweep, split_folds, EvalReport, ExperimentError,
};
use iqbench::features::{extract, feature_names};
use iqbench::learner::train;
use iqbench::metrics::wilcoxon_signed_rank;
use iqbench::report::{
    write_ablation_text, write_eval_text, write_per_fold_csv, write_plot_csv, write_report_csv,
    write_sweep_text,
};
use iqbench::synthgen::generate;

#[derive(Parser)]
#[command(name = "iqbench", version, about = "Interaction-quality estimation workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config file).
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for report files.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Worker cap (reserved; runs are currently sequential).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Check a corpus file against the schema and invariants.
    Validate { corpus: PathBuf },
    /// Extract the feature matrix for a corpus.
    Extract {
        corpus: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "features.csv")]
        out: PathBuf,
    },
    /// Cross-validate one configuration and persist a full-corpus model.
    TrainEval {
        corpus: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Evaluate every parameter-level combination for both feature variants.
    Ablation {
        corpus: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Evaluate a range of window sizes.
    Sweep {
        corpus: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        n_min: Option<usize>,
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Generate a seeded synthetic labeled corpus.
    Synth {
        #[arg(long, default_value = "synth.csv")]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        dialogues: Option<usize>,
    },
    /// Wilcoxon comparison of two runs' per-fold scores.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Row (config name) to pick from file A; defaults to the only one.
        #[arg(long)]
        row_a: Option<String>,
        /// Row to pick from file B.
        #[arg(long)]
        row_b: Option<String>,
    },
}

enum CliError {
    Usage(String),
    Io(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::TooFewDialogues { .. } | ExperimentError::EmptyRange => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn load_config(
    path: &Option<PathBuf>,
    seed: Option<u64>,
    jobs: usize,
) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = path {
        cfg.load_file(path)?;
    }
    if let Some(seed) = seed {
        cfg.experiment.seed = seed;
        cfg.generator.seed = seed;
    }
    if jobs == 0 {
        return Err(CliError::Usage("--jobs must be >= 1".into()));
    }
    cfg.jobs = jobs;
    Ok(cfg)
}

fn write_file(path: &Path, content: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, content)?;
    Ok(())
}

fn write_report_files(
    report: &EvalReport,
    out_dir: &Path,
    text: Vec<u8>,
    plot: Option<Vec<u8>>,
) -> Result<(), CliError> {
    let mut csv = Vec::new();
    write_report_csv(report, &mut csv)?;
    write_file(&out_dir.join("report.csv"), &csv)?;
    write_file(&out_dir.join("report.txt"), &text)?;
    let mut per_fold = Vec::new();
    write_per_fold_csv(report, &mut per_fold)?;
    write_file(&out_dir.join("per_fold.csv"), &per_fold)?;
    if let Some(plot) = plot {
        write_file(&out_dir.join("plot.csv"), &plot)?;
    }
    Ok(())
}

fn write_manifest(
    command: &str,
    cfg: &RunConfig,
    inputs: &[&Path],
    out_dir: &Path,
) -> Result<(), CliError> {
    let mut manifest = RunManifest::new(command, cfg);
    for input in inputs {
        manifest.add_input(input)?;
    }
    write_file(&out_dir.join("manifest.txt"), manifest.render().as_bytes())
}

fn cmd_validate(corpus_path: &Path) -> Result<(), CliError> {
    let corpus = parse_corpus(corpus_path)?;
    for d in &corpus.dialogues {
        for warning in first_exchange_label_check(d) {
            eprintln!("warning: {warning}");
        }
    }
    println!("dialogues={}", corpus.dialogues.len());
    println!("exchanges={}", corpus.exchange_count());
    println!("labeled={}", corpus.is_labeled() as u8);
    Ok(())
}

fn cmd_extract(
    corpus_path: &Path,
    config: &Option<PathBuf>,
    out: &Path,
) -> Result<(), CliError> {
    let cfg = load_config(config, None, 1)?;
    let corpus = parse_corpus(corpus_path)?;
    let names = feature_names(&cfg.experiment.feature, &corpus.schema_extras)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let matrix = extract(&corpus, &cfg.experiment.feature)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut buf = Vec::new();
    matrix
        .write_csv(&mut buf)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    write_file(out, &buf)?;
    println!("features={}", names.len());
    println!("rows={}", matrix.rows.len());
    Ok(())
}

fn cmd_train_eval(corpus_path: &Path, common: &CommonOpts) -> Result<(), CliError> {
    let cfg = load_config(&common.config, common.seed, common.jobs)?;
    let corpus = parse_corpus(corpus_path)?;
    let folds = split_folds(&corpus, cfg.experiment.folds, cfg.experiment.seed)?;
    let row = cross_validate(
        &corpus,
        &cfg.experiment.feature,
        &cfg.experiment.hyper,
        &folds,
        "train-eval",
    )?;

    let matrix = extract(&corpus, &cfg.experiment.feature)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let labels = matrix
        .labels
        .clone()
        .ok_or_else(|| CliError::Usage("corpus is not labeled".into()))?;
    let model = train(
        &matrix.rows,
        &labels,
        &matrix.names,
        &cfg.experiment.hyper,
        cfg.experiment.seed,
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut model_buf = Vec::new();
    model
        .save(&mut model_buf)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    write_file(&common.out_dir.join("model.txt"), &model_buf)?;

    let report = EvalReport {
        rows: vec![row.clone()],
        comparisons: vec![],
    };
    let mut text = Vec::new();
    write_eval_text(&row, &mut text)?;
    write_report_files(&report, &common.out_dir, text, None)?;
    write_manifest("train-eval", &cfg, &[corpus_path], &common.out_dir)?;
    println!("uar={}", row.uar);
    Ok(())
}

fn cmd_ablation(corpus_path: &Path, common: &CommonOpts) -> Result<(), CliError> {
    let cfg = load_config(&common.config, common.seed, common.jobs)?;
    let corpus = parse_corpus(corpus_path)?;
    let report = run_level_ablation(&corpus, &cfg.experiment)?;
    let mut text = Vec::new();
    write_ablation_text(&report, &mut text)?;
    write_report_files(&report, &common.out_dir, text, None)?;
    write_manifest("ablation", &cfg, &[corpus_path], &common.out_dir)?;
    let headline = report
        .rows
        .iter()
        .find(|r| r.name == "all/ext")
        .expect("grid contains all/ext");
    println!("uar={}", headline.uar);
    Ok(())
}

fn cmd_sweep(
    corpus_path: &Path,
    common: &CommonOpts,
    n_min: Option<usize>,
    n_max: Option<usize>,
) -> Result<(), CliError> {
    let mut cfg = load_config(&common.config, common.seed, common.jobs)?;
    if let Some(n) = n_min {
        cfg.n_min = n;
    }
    if let Some(n) = n_max {
        cfg.n_max = n;
    }
    if cfg.n_min < 1 || cfg.n_max < cfg.n_min {
        return Err(CliError::Usage("need 1 <= n_min <= n_max".into()));
    }
    let corpus = parse_corpus(corpus_path)?;
    let range: Vec<usize> = (cfg.n_min..=cfg.n_max).collect();
    let report = run_window_sweep(&corpus, &cfg.experiment, &range)?;
    let mut text = Vec::new();
    write_sweep_text(&report, &mut text)?;
    let mut plot = Vec::new();
    write_plot_csv(&report, &mut plot)?;
    write_report_files(&report, &common.out_dir, text, Some(plot))?;
    write_manifest("sweep", &cfg, &[corpus_path], &common.out_dir)?;
    let best = report
        .rows
        .iter()
        .max_by(|a, b| a.uar.partial_cmp(&b.uar).unwrap())
        .expect("non-empty sweep");
    println!("best_n={}", best.n);
    println!("uar={}", best.uar);
    Ok(())
}

fn cmd_synth(
    out: &Path,
    config: &Option<PathBuf>,
    seed: Option<u64>,
    dialogues: Option<usize>,
) -> Result<(), CliError> {
    let mut cfg = load_config(config, seed, 1)?;
    if let Some(n) = dialogues {
        cfg.generator.dialogues = n;
    }
    let corpus = generate(&cfg.generator).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut buf = Vec::new();
    iqbench::corpus::serialize_corpus(&corpus, &mut buf)?;
    write_file(out, &buf)?;
    let manifest = RunManifest::new("synth", &cfg);
    write_file(
        &out.with_extension("manifest.txt"),
        manifest.render().as_bytes(),
    )?;
    println!("dialogues={}", corpus.dialogues.len());
    println!("exchanges={}", corpus.exchange_count());
    Ok(())
}

/// Per-fold scores grouped by config name, plus the fold fingerprint.
fn read_per_fold(path: &Path, row: &Option<String>) -> Result<(Vec<f64>, u64), CliError> {
    let text = fs::read_to_string(path)?;
    let mut groups: BTreeMap<String, (Vec<f64>, u64)> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(CliError::Usage(format!(
                "{}: line {} is not a per-fold row",
                path.display(),
                i + 1
            )));
        }
        let uar: f64 = parts[2]
            .parse()
            .map_err(|_| CliError::Usage(format!("{}: bad uar on line {}", path.display(), i + 1)))?;
        let fp: u64 = parts[3].parse().map_err(|_| {
            CliError::Usage(format!("{}: bad fingerprint on line {}", path.display(), i + 1))
        })?;
        let entry = groups.entry(parts[0].to_string()).or_insert((Vec::new(), fp));
        entry.0.push(uar);
    }
    let key = match row {
        Some(name) => name.clone(),
        None => {
            if groups.len() != 1 {
                return Err(CliError::Usage(format!(
                    "{} holds {} configs; pick one with --row-a/--row-b",
                    path.display(),
                    groups.len()
                )));
            }
            groups.keys().next().unwrap().clone()
        }
    };
    groups
        .remove(&key)
        .ok_or_else(|| CliError::Usage(format!("{}: no config `{key}`", path.display())))
}

fn cmd_compare(
    a: &Path,
    b: &Path,
    row_a: &Option<String>,
    row_b: &Option<String>,
) -> Result<(), CliError> {
    let (scores_a, fp_a) = read_per_fold(a, row_a)?;
    let (scores_b, fp_b) = read_per_fold(b, row_b)?;
    if fp_a != fp_b {
        return Err(CliError::Usage(
            "runs used different fold assignments".into(),
        ));
    }
    if scores_a.len() != scores_b.len() {
        return Err(CliError::Usage("fold counts differ".into()));
    }
    let result = wilcoxon_signed_rank(&scores_a, &scores_b)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    println!("w={}", result.statistic);
    println!("p={}", result.p_value);
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Validate { corpus } => cmd_validate(corpus),
        Command::Extract {
            corpus,
            config,
            out,
        } => cmd_extract(corpus, config, out),
        Command::TrainEval { corpus, common } => cmd_train_eval(corpus, common),
        Command::Ablation { corpus, common } => cmd_ablation(corpus, common),
        Command::Sweep {
            corpus,
            common,
            n_min,
            n_max,
        } => cmd_sweep(corpus, common, *n_min, *n_max),
        Command::Synth {
            out,
            config,
            seed,
            dialogues,
        } => cmd_synth(out, config, *seed, *dialogues),
        Command::Compare { a, b, row_a, row_b } => cmd_compare(a, b, row_a, row_b),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
