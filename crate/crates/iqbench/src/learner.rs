//! Deterministic one-vs-rest linear SVM trained by epoch-based subgradient
//! descent with the 1/(lambda*t) step schedule, plus z-score feature
//! standardization and a flat text persistence format.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("row has {found} features, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("no training rows")]
    EmptyTrainingSet,
    #[error("labels and rows differ in length: {0} vs {1}")]
    LabelMismatch(usize, usize),
    #[error("model file is malformed: {0}")]
    Persistence(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters {
    pub lambda: f64,
    pub epochs: usize,
    pub standardize: bool,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            lambda: 1e-4,
            epochs: 50,
            standardize: true,
        }
    }
}

/// Per-feature mean and standard deviation from the training rows.
/// Features with zero deviation map to 0 after centering.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardizationStats {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for row in rows {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; dim];
        for row in rows {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
        StandardizationStats { mean, std }
    }

    pub fn identity(dim: usize) -> Self {
        StandardizationStats {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| if *s == 0.0 { 0.0 } else { (v - m) / s })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// Class labels seen in training, ascending.
    pub classes: Vec<u8>,
    /// One weight vector per class, aligned with `classes`.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub hyper: Hyperparameters,
    pub seed: u64,
    pub stats: StandardizationStats,
    pub feature_names: Vec<String>,
    /// Set when training saw a single class only; prediction is constant.
    pub degenerate: bool,
}

const MODEL_MAGIC: &str = "iqbench-model";
const MODEL_VERSION: u32 = 1;

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.stats.mean.len()
    }

    /// Predicted label plus the per-class decision values. Ties break
    /// toward the lower class label.
    pub fn predict(&self, row: &[f64]) -> Result<(u8, Vec<f64>), LearnerError> {
        if row.len() != self.dim() {
            return Err(LearnerError::DimensionMismatch {
                expected: self.dim(),
                found: row.len(),
            });
        }
        let x = if self.hyper.standardize {
            self.stats.apply(row)
        } else {
            row.to_vec()
        };
        let scores: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| dot(w, &x) + b)
            .collect();
        let mut best = 0usize;
        for (i, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = i;
            }
        }
        Ok((self.classes[best], scores))
    }

    pub fn predict_label(&self, row: &[f64]) -> Result<u8, LearnerError> {
        Ok(self.predict(row)?.0)
    }

    pub fn save<W: Write>(&self, mut w: W) -> Result<(), LearnerError> {
        writeln!(w, "{MODEL_MAGIC} v{MODEL_VERSION}")?;
        writeln!(w, "seed {}", self.seed)?;
        writeln!(w, "lambda {:.16e}", self.hyper.lambda)?;
        writeln!(w, "epochs {}", self.hyper.epochs)?;
        writeln!(w, "standardize {}", self.hyper.standardize as u8)?;
        writeln!(w, "degenerate {}", self.degenerate as u8)?;
        writeln!(w, "features {}", self.feature_names.join("\t"))?;
        writeln!(
            w,
            "classes {}",
            self.classes
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        )?;
        writeln!(w, "mean {}", join_floats(&self.stats.mean))?;
        writeln!(w, "std {}", join_floats(&self.stats.std))?;
        for (i, c) in self.classes.iter().enumerate() {
            writeln!(
                w,
                "class {} {:.16e} {}",
                c,
                self.biases[i],
                join_floats(&self.weights[i])
            )?;
        }
        Ok(())
    }

    pub fn save_to_path<P: AsRef<Path>>(&self, path: P) -> Result<(), LearnerError> {
        let file = std::fs::File::create(path)?;
        self.save(std::io::BufWriter::new(file))
    }

    pub fn load<R: Read>(r: R) -> Result<Self, LearnerError> {
        let reader = BufReader::new(r);
        let mut lines = reader.lines();
        let bad = |msg: &str| LearnerError::Persistence(msg.to_string());
        let header = lines.next().ok_or_else(|| bad("empty file"))??;
        if header != format!("{MODEL_MAGIC} v{MODEL_VERSION}") {
            return Err(bad(&format!("unexpected header `{header}`")));
        }
        let mut seed = 0u64;
        let mut hyper = Hyperparameters::default();
        let mut degenerate = false;
        let mut feature_names = Vec::new();
        let mut classes: Vec<u8> = Vec::new();
        let mut mean = Vec::new();
        let mut std = Vec::new();
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for line in lines {
            let line = line?;
            let (key, rest) = line.split_once(' ').unwrap_or((line.as_str(), ""));
            match key {
                "seed" => seed = rest.parse().map_err(|_| bad("seed"))?,
                "lambda" => hyper.lambda = rest.parse().map_err(|_| bad("lambda"))?,
                "epochs" => hyper.epochs = rest.parse().map_err(|_| bad("epochs"))?,
                "standardize" => hyper.standardize = rest == "1",
                "degenerate" => degenerate = rest == "1",
                "features" => {
                    feature_names = if rest.is_empty() {
                        Vec::new()
                    } else {
                        rest.split('\t').map(|s| s.to_string()).collect()
                    }
                }
                "classes" => {
                    classes = rest
                        .split_whitespace()
                        .map(|s| s.parse().map_err(|_| bad("classes")))
                        .collect::<Result<_, _>>()?
                }
                "mean" => mean = parse_floats(rest).ok_or_else(|| bad("mean"))?,
                "std" => std = parse_floats(rest).ok_or_else(|| bad("std"))?,
                "class" => {
                    let mut parts = rest.split_whitespace();
                    let _label: u8 = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| bad("class label"))?;
                    let bias: f64 = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| bad("class bias"))?;
                    let w: Vec<f64> = parts
                        .map(|s| s.parse().map_err(|_| bad("class weights")))
                        .collect::<Result<_, _>>()?;
                    biases.push(bias);
                    weights.push(w);
                }
                _ => return Err(bad(&format!("unknown key `{key}`"))),
            }
        }
        if classes.len() != weights.len() {
            return Err(bad("class count does not match weight rows"));
        }
        Ok(LinearModel {
            classes,
            weights,
            biases,
            hyper,
            seed,
            stats: StandardizationStats { mean, std },
            feature_names,
            degenerate,
        })
    }

    pub fn load_from_path<P: AsRef<Path>>(path: P) -> Result<Self, LearnerError> {
        let file = std::fs::File::open(path)?;
        Self::load(BufReader::new(file))
    }
}

fn join_floats(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.16e}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_floats(s: &str) -> Option<Vec<f64>> {
    s.split_whitespace().map(|x| x.parse().ok()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Regularized hinge objective of one binary problem:
/// lambda/2 * |w|^2 + mean hinge loss.
pub fn hinge_objective(
    rows: &[Vec<f64>],
    targets: &[f64],
    w: &[f64],
    b: f64,
    lambda: f64,
) -> f64 {
    let reg = lambda / 2.0 * dot(w, w);
    let loss: f64 = rows
        .iter()
        .zip(targets)
        .map(|(x, y)| (1.0 - y * (dot(w, x) + b)).max(0.0))
        .sum::<f64>()
        / rows.len() as f64;
    reg + loss
}

/// One pass over the data in the given order, continuing the global step
/// counter `t`. Step size is 1/(lambda*t); the weight vector is projected
/// onto the 1/sqrt(lambda) ball after each update, the unregularized bias
/// moves on a plain 1/t schedule.
fn sgd_epoch(
    rows: &[Vec<f64>],
    targets: &[f64],
    hyper: &Hyperparameters,
    order: &[usize],
    w: &mut [f64],
    b: &mut f64,
    t: &mut u64,
) {
    let radius = 1.0 / hyper.lambda.sqrt();
    for &i in order {
        *t += 1;
        let eta = 1.0 / (hyper.lambda * *t as f64);
        let x = &rows[i];
        let y = targets[i];
        let margin = y * (dot(w, x) + *b);
        let shrink = 1.0 - eta * hyper.lambda;
        if margin < 1.0 {
            for (wj, xj) in w.iter_mut().zip(x) {
                *wj = *wj * shrink + eta * y * xj;
            }
            *b += y / *t as f64;
        } else {
            for wj in w.iter_mut() {
                *wj *= shrink;
            }
        }
        let norm = dot(w, w).sqrt();
        if norm > radius {
            let scale = radius / norm;
            for wj in w.iter_mut() {
                *wj *= scale;
            }
        }
    }
}

/// Train one binary soft-margin problem by subgradient descent with a
/// seeded per-epoch shuffle.
fn train_binary(
    rows: &[Vec<f64>],
    targets: &[f64],
    hyper: &Hyperparameters,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, f64) {
    let dim = rows[0].len();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut t = 0u64;
    for _ in 0..hyper.epochs {
        order.shuffle(rng);
        sgd_epoch(rows, targets, hyper, &order, &mut w, &mut b, &mut t);
    }
    (w, b)
}

/// Train a one-vs-rest model. Training is bit-reproducible given the data
/// order, hyperparameters, and seed. A single-class training set yields a
/// constant-prediction model flagged as degenerate.
pub fn train(
    rows: &[Vec<f64>],
    labels: &[u8],
    feature_names: &[String],
    hyper: &Hyperparameters,
    seed: u64,
) -> Result<LinearModel, LearnerError> {
    if rows.is_empty() {
        return Err(LearnerError::EmptyTrainingSet);
    }
    if rows.len() != labels.len() {
        return Err(LearnerError::LabelMismatch(rows.len(), labels.len()));
    }
    let dim = rows[0].len();
    for r in rows {
        if r.len() != dim {
            return Err(LearnerError::DimensionMismatch {
                expected: dim,
                found: r.len(),
            });
        }
    }

    let stats = if hyper.standardize {
        StandardizationStats::fit(rows)
    } else {
        StandardizationStats::identity(dim)
    };
    let data: Vec<Vec<f64>> = if hyper.standardize {
        rows.iter().map(|r| stats.apply(r)).collect()
    } else {
        rows.to_vec()
    };

    let mut classes: Vec<u8> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();

    if classes.len() == 1 {
        return Ok(LinearModel {
            classes,
            weights: vec![vec![0.0; dim]],
            biases: vec![0.0],
            hyper: hyper.clone(),
            seed,
            stats,
            feature_names: feature_names.to_vec(),
            degenerate: true,
        });
    }

    let mut weights = Vec::with_capacity(classes.len());
    let mut biases = Vec::with_capacity(classes.len());
    for &c in &classes {
        let targets: Vec<f64> = labels
            .iter()
            .map(|&l| if l == c { 1.0 } else { -1.0 })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e3779b97f4a7c15u64.wrapping_mul(c as u64)));
        let (w, b) = train_binary(&data, &targets, hyper, &mut rng);
        weights.push(w);
        biases.push(b);
    }

    Ok(LinearModel {
        classes,
        weights,
        biases,
        hyper: hyper.clone(),
        seed,
        stats,
        feature_names: feature_names.to_vec(),
        degenerate: false,
    })
}
