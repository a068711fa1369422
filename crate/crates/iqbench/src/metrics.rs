//! Evaluation and significance measures: unweighted average recall,
//! linearly weighted and unweighted Cohen's kappa, Spearman's rho, and the
//! Wilcoxon signed-rank test.

use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

/// Number of quality classes (labels 1..=5).
pub const NUM_CLASSES: usize = 5;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("input lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("label {0} outside 1..=5")]
    LabelOutOfRange(u8),
}

/// K x K counts; rows are the reference label, columns the hypothesis.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(reference: &[u8], hypothesis: &[u8]) -> Result<Self, MetricsError> {
        if reference.len() != hypothesis.len() {
            return Err(MetricsError::LengthMismatch(
                reference.len(),
                hypothesis.len(),
            ));
        }
        let mut cm = Self::new();
        for (&r, &h) in reference.iter().zip(hypothesis) {
            cm.add(r, h)?;
        }
        Ok(cm)
    }

    pub fn add(&mut self, reference: u8, hypothesis: u8) -> Result<(), MetricsError> {
        for l in [reference, hypothesis] {
            if !(1..=NUM_CLASSES as u8).contains(&l) {
                return Err(MetricsError::LabelOutOfRange(l));
            }
        }
        self.counts[reference as usize - 1][hypothesis as usize - 1] += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for i in 0..NUM_CLASSES {
            for j in 0..NUM_CLASSES {
                self.counts[i][j] += other.counts[i][j];
            }
        }
    }

    pub fn get(&self, reference: u8, hypothesis: u8) -> u64 {
        self.counts[reference as usize - 1][hypothesis as usize - 1]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    fn col_sum(&self, j: usize) -> u64 {
        (0..NUM_CLASSES).map(|i| self.counts[i][j]).sum()
    }
}

/// Mean of class-wise recalls over the classes present in the reference.
pub fn uar(cm: &ConfusionMatrix) -> Result<f64, MetricsError> {
    let mut sum = 0.0;
    let mut classes = 0usize;
    for i in 0..NUM_CLASSES {
        let row = cm.row_sum(i);
        if row > 0 {
            sum += cm.counts[i][i] as f64 / row as f64;
            classes += 1;
        }
    }
    if classes == 0 {
        return Err(MetricsError::EmptyMatrix);
    }
    Ok(sum / classes as f64)
}

/// Cohen's kappa with linear weights w_ij = |i-j| / (K-1).
pub fn weighted_kappa(cm: &ConfusionMatrix) -> Result<f64, MetricsError> {
    let n = cm.total();
    if n == 0 {
        return Err(MetricsError::EmptyMatrix);
    }
    let n = n as f64;
    let mut observed = 0.0;
    let mut expected = 0.0;
    for i in 0..NUM_CLASSES {
        for j in 0..NUM_CLASSES {
            let w = (i as f64 - j as f64).abs() / (NUM_CLASSES as f64 - 1.0);
            observed += w * cm.counts[i][j] as f64 / n;
            expected += w * (cm.row_sum(i) as f64 / n) * (cm.col_sum(j) as f64 / n);
        }
    }
    if expected == 0.0 {
        // single-class marginals: agreement is perfect or undefined
        return if observed == 0.0 {
            Ok(1.0)
        } else {
            Err(MetricsError::DegenerateInput(
                "expected disagreement is zero but observed is not".into(),
            ))
        };
    }
    Ok(1.0 - observed / expected)
}

/// Standard (unweighted) Cohen's kappa on two rating vectors.
pub fn unweighted_kappa(ratings_a: &[u8], ratings_b: &[u8]) -> Result<f64, MetricsError> {
    if ratings_a.len() != ratings_b.len() {
        return Err(MetricsError::LengthMismatch(
            ratings_a.len(),
            ratings_b.len(),
        ));
    }
    if ratings_a.is_empty() {
        return Err(MetricsError::EmptyMatrix);
    }
    let cm = ConfusionMatrix::from_pairs(ratings_a, ratings_b)?;
    let n = cm.total() as f64;
    let po = (0..NUM_CLASSES).map(|i| cm.counts[i][i]).sum::<u64>() as f64 / n;
    let pe = (0..NUM_CLASSES)
        .map(|i| (cm.row_sum(i) as f64 / n) * (cm.col_sum(i) as f64 / n))
        .sum::<f64>();
    if (1.0 - pe).abs() < f64::EPSILON {
        return if (1.0 - po).abs() < f64::EPSILON {
            Ok(1.0)
        } else {
            Err(MetricsError::DegenerateInput(
                "chance agreement is 1 but observed is not".into(),
            ))
        };
    }
    Ok((po - pe) / (1.0 - pe))
}

/// Average ranks (1-based); ties receive the mean of their rank span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mean_rank = (i + j + 2) as f64 / 2.0; // ranks are 1-based
        for &idx in &order[i..=j] {
            ranks[idx] = mean_rank;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation of average-ranked values.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(MetricsError::DegenerateInput("need at least 2 pairs".into()));
    }
    for (name, v) in [("x", x), ("y", y)] {
        if v.iter().all(|&a| a == v[0]) {
            return Err(MetricsError::DegenerateInput(format!("{name} is constant")));
        }
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        num += (a - mx) * (b - my);
        dx += (a - mx) * (a - mx);
        dy += (b - my) * (b - my);
    }
    Ok(num / (dx * dy).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PValueMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceResult {
    /// W = min(W+, W-), on the ordinary rank scale.
    pub statistic: f64,
    /// Pairs remaining after zero differences are dropped.
    pub sample_size: usize,
    /// Two-sided p-value.
    pub p_value: f64,
    pub method: PValueMethod,
}

/// Above this many non-zero differences the normal approximation is used.
pub const WILCOXON_EXACT_LIMIT: usize = 25;

/// Wilcoxon signed-rank test on paired scores.
///
/// Zero differences are dropped; tied absolute differences receive mean
/// ranks. For `m <= 25` pairs the exact two-sided p-value over all 2^m sign
/// assignments is computed (via the rank-sum distribution); beyond that a
/// normal approximation with tie correction is used.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<SignificanceResult, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch(a.len(), b.len()));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    let m = diffs.len();
    if m == 0 {
        return Ok(SignificanceResult {
            statistic: 0.0,
            sample_size: 0,
            p_value: 1.0,
            method: PValueMethod::Exact,
        });
    }

    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();
    let total: f64 = ranks.iter().sum(); // m(m+1)/2
    let w_minus = total - w_plus;
    let w = w_plus.min(w_minus);

    if m <= WILCOXON_EXACT_LIMIT {
        let p = exact_two_sided_p(&ranks, w);
        Ok(SignificanceResult {
            statistic: w,
            sample_size: m,
            p_value: p,
            method: PValueMethod::Exact,
        })
    } else {
        let mf = m as f64;
        let mean = mf * (mf + 1.0) / 4.0;
        let mut var = mf * (mf + 1.0) * (2.0 * mf + 1.0) / 24.0;
        // tie correction: subtract sum(t^3 - t)/48 over tie groups
        let mut sorted = abs.clone();
        sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i;
            while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            var -= (t * t * t - t) / 48.0;
            i = j + 1;
        }
        let z = (w - mean) / var.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        let p = (2.0 * normal.cdf(z)).clamp(0.0, 1.0);
        Ok(SignificanceResult {
            statistic: w,
            sample_size: m,
            p_value: p,
            method: PValueMethod::NormalApprox,
        })
    }
}

/// Exact distribution of the positive rank sum over all sign assignments,
/// computed on doubled ranks so mean ranks become integers. Returns
/// P(min(W+, W-) <= w_observed).
fn exact_two_sided_p(ranks: &[f64], w_observed: f64) -> f64 {
    let scaled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = scaled.iter().sum();
    let mut dist = vec![0u64; total + 1];
    dist[0] = 1;
    for &s in &scaled {
        for w in (s..=total).rev() {
            dist[w] += dist[w - s];
        }
    }
    let threshold = (w_observed * 2.0).round() as usize;
    let mut hits = 0u64;
    for (w, &count) in dist.iter().enumerate() {
        if w.min(total - w) <= threshold {
            hits += count;
        }
    }
    hits as f64 / (1u64 << ranks.len()) as f64
}
