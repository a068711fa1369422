//! Experiment protocols: seeded dialogue-level k-fold cross-validation,
//! the parameter-level ablation grid, and the window-size sweep, with
//! Wilcoxon significance over paired per-fold scores.
//!
//! Folds are split on whole dialogues so the running aggregates of a
//! held-out dialogue can never leak into training. The headline UAR /
//! kappa / rho come from the confusion matrix pooled over folds; the
//! per-fold UAR list is kept for significance testing.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::features::{
    extract, FeatureError, FeatureSetConfig, Level, Variant,
};
use crate::learner::{train, Hyperparameters, LearnerError};
use crate::metrics::{
    spearman_rho, uar, weighted_kappa, wilcoxon_signed_rank, ConfusionMatrix, MetricsError,
    SignificanceResult,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("need at least {need} dialogues for {need}-fold cross-validation, have {have}")]
    TooFewDialogues { have: usize, need: usize },
    #[error("rows were produced under different fold assignments")]
    FoldMismatch,
    #[error("corpus is not (fully) labeled")]
    UnlabeledCorpus,
    #[error("window range is empty")]
    EmptyRange,
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub feature: FeatureSetConfig,
    pub hyper: Hyperparameters,
    pub folds: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            feature: FeatureSetConfig::default(),
            hyper: Hyperparameters::default(),
            folds: 10,
            seed: 42,
        }
    }
}

/// Dialogue-to-fold map, deterministic given the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldAssignment {
    pub k: usize,
    pub seed: u64,
    /// Fold index per dialogue, aligned with `corpus.dialogues`.
    pub assignment: Vec<usize>,
    /// Digest over (seed, k, dialogue ids); rows are only comparable when
    /// their fingerprints match.
    pub fingerprint: u64,
}

pub fn split_folds(
    corpus: &Corpus,
    k: usize,
    seed: u64,
) -> Result<FoldAssignment, ExperimentError> {
    let n = corpus.dialogues.len();
    if k < 2 || k > n {
        return Err(ExperimentError::TooFewDialogues { have: n, need: k });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut assignment = vec![0usize; n];
    for (pos, &dialogue) in order.iter().enumerate() {
        assignment[dialogue] = pos % k; // sizes differ by at most one
    }

    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((k as u64).to_le_bytes());
    for d in &corpus.dialogues {
        hasher.update(d.id.as_bytes());
        hasher.update([0u8]);
    }
    let digest = hasher.finalize();
    let fingerprint = u64::from_le_bytes(digest[..8].try_into().unwrap());

    Ok(FoldAssignment {
        k,
        seed,
        assignment,
        fingerprint,
    })
}

/// One evaluated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub name: String,
    pub variant: Variant,
    pub levels: String,
    pub n: usize,
    pub uar: f64,
    pub kappa: f64,
    /// NaN when the pooled predictions are constant.
    pub rho: f64,
    pub per_fold_uar: Vec<f64>,
    pub confusion: ConfusionMatrix,
    /// Relative UAR improvement vs. the report's baseline row.
    pub rel_uar: Option<f64>,
    /// Wilcoxon p-value vs. the baseline row.
    pub p_value: Option<f64>,
    /// Percentage (0..=100) of dialogues longer than the window size.
    pub affected_pct: Option<f64>,
    pub fold_fingerprint: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub label: String,
    pub result: SignificanceResult,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub comparisons: Vec<Comparison>,
}

fn fold_train_seed(seed: u64, fold: usize) -> u64 {
    let mut z = seed.wrapping_add(0x9e3779b97f4a7c15u64.wrapping_mul(fold as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Train on all folds but one, score the held-out fold, pool over folds.
pub fn cross_validate(
    corpus: &Corpus,
    feature: &FeatureSetConfig,
    hyper: &Hyperparameters,
    folds: &FoldAssignment,
    name: &str,
) -> Result<EvalRow, ExperimentError> {
    if !corpus.is_labeled() || corpus.exchange_count() == 0 {
        return Err(ExperimentError::UnlabeledCorpus);
    }
    let matrix = extract(corpus, feature)?;
    let labels = matrix.labels.as_ref().expect("labeled corpus");

    // fold index per row
    let mut row_fold = Vec::with_capacity(matrix.rows.len());
    {
        let mut dialogue_idx = 0usize;
        let mut last_id: Option<&str> = None;
        for (id, _) in &matrix.dialogue_boundaries {
            match last_id {
                Some(prev) if prev == id => {}
                Some(_) => {
                    dialogue_idx += 1;
                    last_id = Some(id);
                }
                None => last_id = Some(id),
            }
            row_fold.push(folds.assignment[dialogue_idx]);
        }
    }

    let mut pooled = ConfusionMatrix::new();
    let mut per_fold_uar = Vec::with_capacity(folds.k);
    let mut truth: Vec<f64> = Vec::with_capacity(matrix.rows.len());
    let mut hypo: Vec<f64> = Vec::with_capacity(matrix.rows.len());

    for fold in 0..folds.k {
        let mut train_rows = Vec::new();
        let mut train_labels = Vec::new();
        let mut test_rows = Vec::new();
        let mut test_labels = Vec::new();
        for (i, row) in matrix.rows.iter().enumerate() {
            if row_fold[i] == fold {
                test_rows.push(row.clone());
                test_labels.push(labels[i]);
            } else {
                train_rows.push(row.clone());
                train_labels.push(labels[i]);
            }
        }
        let model = train(
            &train_rows,
            &train_labels,
            &matrix.names,
            hyper,
            fold_train_seed(folds.seed, fold),
        )?;
        let mut fold_cm = ConfusionMatrix::new();
        for (row, &label) in test_rows.iter().zip(&test_labels) {
            let pred = model.predict_label(row)?;
            fold_cm.add(label, pred)?;
            truth.push(label as f64);
            hypo.push(pred as f64);
        }
        per_fold_uar.push(uar(&fold_cm)?);
        pooled.merge(&fold_cm);
    }

    let rho = spearman_rho(&truth, &hypo).unwrap_or(f64::NAN);
    Ok(EvalRow {
        name: name.to_string(),
        variant: feature.variant,
        levels: feature.levels_label(),
        n: feature.window_size,
        uar: uar(&pooled)?,
        kappa: weighted_kappa(&pooled)?,
        rho,
        per_fold_uar,
        confusion: pooled,
        rel_uar: None,
        p_value: None,
        affected_pct: None,
        fold_fingerprint: folds.fingerprint,
    })
}

/// The seven level combinations of the ablation grid, in presentation order.
pub const LEVEL_COMBOS: [(&str, &[Level]); 7] = [
    ("only exchange", &[Level::Exchange]),
    ("only window", &[Level::Window]),
    ("no dialogue", &[Level::Exchange, Level::Window]),
    ("only dialogue", &[Level::Dialogue]),
    ("no window", &[Level::Exchange, Level::Dialogue]),
    ("no exchange", &[Level::Window, Level::Dialogue]),
    ("all", &[Level::Exchange, Level::Window, Level::Dialogue]),
];

/// Evaluate every level combination for both feature-set variants, under a
/// single fold assignment, and attach the standard pairwise comparisons.
pub fn run_level_ablation(
    corpus: &Corpus,
    base: &ExperimentConfig,
) -> Result<EvalReport, ExperimentError> {
    let folds = split_folds(corpus, base.folds, base.seed)?;
    let mut report = EvalReport::default();

    for (combo_name, levels) in LEVEL_COMBOS {
        for variant in [Variant::Orig, Variant::Ext] {
            let feature = base
                .feature
                .clone()
                .with_levels(levels)
                .with_variant(variant);
            let name = format!("{combo_name}/{}", variant.as_str());
            report
                .rows
                .push(cross_validate(corpus, &feature, &base.hyper, &folds, &name)?);
        }
    }

    let row = |name: &str| report.rows.iter().find(|r| r.name == name).unwrap().clone();
    for variant in ["orig", "ext"] {
        let all = row(&format!("all/{variant}"));
        for other in ["no exchange", "no window"] {
            let b = row(&format!("{other}/{variant}"));
            let result = compare_runs(&all, &b)?;
            report.comparisons.push(Comparison {
                label: format!("all vs {other} ({variant})"),
                result,
            });
        }
    }
    for (combo_name, _) in LEVEL_COMBOS {
        let ext = row(&format!("{combo_name}/ext"));
        let orig = row(&format!("{combo_name}/orig"));
        let result = compare_runs(&ext, &orig)?;
        report.comparisons.push(Comparison {
            label: format!("ext vs orig ({combo_name})"),
            result,
        });
    }

    Ok(report)
}

/// Percentage of dialogues strictly longer than the window size.
pub fn affected_percentage(corpus: &Corpus, n: usize) -> f64 {
    if corpus.dialogues.is_empty() {
        return 0.0;
    }
    let affected = corpus.dialogues.iter().filter(|d| d.len() > n).count();
    100.0 * affected as f64 / corpus.dialogues.len() as f64
}

/// Window size used as the sweep's baseline row when present in the range.
pub const SWEEP_BASELINE_N: usize = 3;

/// One cross-validation per window size; relative improvement and
/// significance are reported against the baseline window size.
pub fn run_window_sweep(
    corpus: &Corpus,
    base: &ExperimentConfig,
    n_range: &[usize],
) -> Result<EvalReport, ExperimentError> {
    if n_range.is_empty() {
        return Err(ExperimentError::EmptyRange);
    }
    let folds = split_folds(corpus, base.folds, base.seed)?;
    let mut report = EvalReport::default();

    for &n in n_range {
        let feature = base.feature.clone().with_window(n);
        let name = format!("n={n}");
        let mut row = cross_validate(corpus, &feature, &base.hyper, &folds, &name)?;
        row.affected_pct = Some(affected_percentage(corpus, n));
        report.rows.push(row);
    }

    let baseline_idx = n_range
        .iter()
        .position(|&n| n == SWEEP_BASELINE_N)
        .unwrap_or(0);
    let baseline = report.rows[baseline_idx].clone();
    for (i, row) in report.rows.iter_mut().enumerate() {
        if i == baseline_idx {
            continue;
        }
        row.rel_uar = Some((row.uar - baseline.uar) / baseline.uar);
        row.p_value = Some(compare_rows_result(row, &baseline)?.p_value);
    }

    Ok(report)
}

fn compare_rows_result(
    a: &EvalRow,
    b: &EvalRow,
) -> Result<SignificanceResult, ExperimentError> {
    if a.fold_fingerprint != b.fold_fingerprint {
        return Err(ExperimentError::FoldMismatch);
    }
    Ok(wilcoxon_signed_rank(&a.per_fold_uar, &b.per_fold_uar)?)
}

/// Wilcoxon signed-rank over the paired per-fold UAR lists of two rows
/// produced under the same fold assignment.
pub fn compare_runs(a: &EvalRow, b: &EvalRow) -> Result<SignificanceResult, ExperimentError> {
    compare_rows_result(a, b)
}
