//! Evaluation metrics for the referral-type classifier and the LOS regressor,
//! per evaluation fold and aggregated as mean±sd over folds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::MeanSd;

/// One-vs-rest area under the ROC curve, computed as the Mann-Whitney
/// probability that a positive outscores a negative (ties count one half).
pub fn auroc_ovr(true_binary: &[bool], scores: &[f64]) -> Result<f64> {
    if true_binary.len() != scores.len() {
        return Err(Error::param("labels and scores differ in length"));
    }
    let n_pos = true_binary.iter().filter(|&&b| b).count();
    let n_neg = true_binary.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(
            "AUROC needs both positive and negative cases".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum of mid-ranks of the positives.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid_rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if true_binary[k] {
                rank_sum += mid_rank;
            }
        }
        i = j + 1;
    }
    let p = n_pos as f64;
    let u = rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * n_neg as f64))
}

/// Metrics from one evaluation (one fold). Per-category values that are
/// undefined on this fold are NaN and excluded from the macro averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub confusion: Vec<Vec<usize>>,
    pub accuracy: f64,
    pub sensitivity: Vec<f64>,
    pub specificity: Vec<f64>,
    pub auroc: Vec<f64>,
    pub macro_sensitivity: f64,
    pub macro_specificity: f64,
    pub macro_auroc: f64,
}

fn finite_mean(values: &[f64]) -> f64 {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        f64::NAN
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    }
}

/// `scores[i]` is the probability vector for row i; its length sets the
/// category count.
pub fn classification_report(
    truth: &[usize],
    predicted: &[usize],
    scores: &[Vec<f64>],
) -> Result<ClassificationMetrics> {
    let n = truth.len();
    if n == 0 || predicted.len() != n || scores.len() != n {
        return Err(Error::param(
            "truth, predictions and scores must have equal nonzero length",
        ));
    }
    let k = scores[0].len();
    if k == 0 || scores.iter().any(|s| s.len() != k) {
        return Err(Error::param("score rows must share one nonzero length"));
    }
    if let Some(&c) = truth.iter().chain(predicted).find(|&&c| c >= k) {
        return Err(Error::param(format!("category code {c} out of range")));
    }
    if let Some(s) = scores
        .iter()
        .find(|s| (s.iter().sum::<f64>() - 1.0).abs() > 1e-6)
    {
        return Err(Error::param(format!("score row {s:?} does not sum to 1")));
    }

    let mut confusion = vec![vec![0usize; k]; k];
    for (&t, &p) in truth.iter().zip(predicted) {
        confusion[t][p] += 1;
    }
    let correct: usize = (0..k).map(|c| confusion[c][c]).sum();
    let mut sensitivity = Vec::with_capacity(k);
    let mut specificity = Vec::with_capacity(k);
    let mut auroc = Vec::with_capacity(k);
    for c in 0..k {
        let tp = confusion[c][c] as f64;
        let fn_: f64 = (0..k)
            .filter(|&j| j != c)
            .map(|j| confusion[c][j] as f64)
            .sum();
        let fp: f64 = (0..k)
            .filter(|&i| i != c)
            .map(|i| confusion[i][c] as f64)
            .sum();
        let tn = n as f64 - tp - fn_ - fp;
        sensitivity.push(if tp + fn_ > 0.0 {
            tp / (tp + fn_)
        } else {
            f64::NAN
        });
        specificity.push(if tn + fp > 0.0 {
            tn / (tn + fp)
        } else {
            f64::NAN
        });
        let positives: Vec<bool> = truth.iter().map(|&t| t == c).collect();
        let column: Vec<f64> = scores.iter().map(|s| s[c]).collect();
        auroc.push(auroc_ovr(&positives, &column).unwrap_or(f64::NAN));
    }
    Ok(ClassificationMetrics {
        accuracy: correct as f64 / n as f64,
        macro_sensitivity: finite_mean(&sensitivity),
        macro_specificity: finite_mean(&specificity),
        macro_auroc: finite_mean(&auroc),
        confusion,
        sensitivity,
        specificity,
        auroc,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub mae: f64,
    pub mse: f64,
    /// NaN when the evaluation truth has zero variance.
    pub r2: f64,
}

/// R² is measured against the mean of this evaluation sample.
pub fn regression_report(truth: &[f64], predicted: &[f64]) -> Result<RegressionMetrics> {
    let n = truth.len();
    if n == 0 || predicted.len() != n {
        return Err(Error::param(
            "truth and predictions must have equal nonzero length",
        ));
    }
    let nf = n as f64;
    let mae = truth
        .iter()
        .zip(predicted)
        .map(|(t, p)| (t - p).abs())
        .sum::<f64>()
        / nf;
    let ss_res: f64 = truth
        .iter()
        .zip(predicted)
        .map(|(t, p)| (t - p) * (t - p))
        .sum();
    let mean = truth.iter().sum::<f64>() / nf;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean) * (t - mean)).sum();
    Ok(RegressionMetrics {
        mae,
        mse: ss_res / nf,
        r2: if ss_tot > 0.0 {
            1.0 - ss_res / ss_tot
        } else {
            f64::NAN
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub folds: Vec<ClassificationMetrics>,
    pub accuracy: MeanSd,
    pub sensitivity: Vec<MeanSd>,
    pub specificity: Vec<MeanSd>,
    pub auroc: Vec<MeanSd>,
    pub macro_sensitivity: MeanSd,
    pub macro_specificity: MeanSd,
    pub macro_auroc: MeanSd,
}

impl ClassificationReport {
    pub fn from_folds(folds: Vec<ClassificationMetrics>) -> Result<Self> {
        let k = folds
            .first()
            .ok_or_else(|| Error::param("no folds to aggregate"))?
            .sensitivity
            .len();
        let over = |f: &dyn Fn(&ClassificationMetrics) -> f64| {
            MeanSd::of(&folds.iter().map(f).collect::<Vec<_>>())
        };
        let per_cat = |f: &dyn Fn(&ClassificationMetrics, usize) -> f64| {
            (0..k)
                .map(|c| MeanSd::of(&folds.iter().map(|m| f(m, c)).collect::<Vec<_>>()))
                .collect::<Vec<_>>()
        };
        Ok(ClassificationReport {
            accuracy: over(&|m| m.accuracy),
            macro_sensitivity: over(&|m| m.macro_sensitivity),
            macro_specificity: over(&|m| m.macro_specificity),
            macro_auroc: over(&|m| m.macro_auroc),
            sensitivity: per_cat(&|m, c| m.sensitivity[c]),
            specificity: per_cat(&|m, c| m.specificity[c]),
            auroc: per_cat(&|m, c| m.auroc[c]),
            folds,
        })
    }

    /// One row in the style `Accuracy AUROC Sensitivity Specificity`, as
    /// percentages.
    pub fn table_row(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}",
            self.accuracy.scaled(100.0),
            self.macro_auroc.scaled(100.0),
            self.macro_sensitivity.scaled(100.0),
            self.macro_specificity.scaled(100.0)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub folds: Vec<RegressionMetrics>,
    pub mae: MeanSd,
    pub mse: MeanSd,
    pub r2: MeanSd,
}

impl RegressionReport {
    pub fn from_folds(folds: Vec<RegressionMetrics>) -> Result<Self> {
        if folds.is_empty() {
            return Err(Error::param("no folds to aggregate"));
        }
        let over =
            |f: fn(&RegressionMetrics) -> f64| MeanSd::of(&folds.iter().map(f).collect::<Vec<_>>());
        Ok(RegressionReport {
            mae: over(|m| m.mae),
            mse: over(|m| m.mse),
            r2: over(|m| m.r2),
            folds,
        })
    }

    /// One row in the style `MAE MSE R^2`.
    pub fn table_row(&self) -> String {
        format!("{}\t{}\t{}", self.mae, self.mse, self.r2)
    }
}
