//! k-fold cross-validation with fold-internal preprocessing.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::learn::dataset::{Dataset, Target};
use crate::learn::forest::{train_forest, ForestModel, ForestParams};
use crate::learn::metrics::{
    classification_report, regression_report, ClassificationMetrics, ClassificationReport,
    RegressionMetrics, RegressionReport,
};
use crate::learn::outliers::{trim_outliers, DEFAULT_TRIM_THRESHOLD};
use crate::learn::smote::{smote_balance, DEFAULT_SMOTE_K};
use crate::stats::RngStream;

pub const DEFAULT_FOLDS: usize = 10;

/// Preprocessing applied to each training portion (never to the held-out fold).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvOptions {
    pub folds: usize,
    /// SMOTE neighbour count for classification; `None` disables resampling.
    pub smote_k: Option<usize>,
    /// Robust trim threshold on the regression target; `None` disables it.
    pub trim_threshold: Option<f64>,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            folds: DEFAULT_FOLDS,
            smote_k: Some(DEFAULT_SMOTE_K),
            trim_threshold: Some(DEFAULT_TRIM_THRESHOLD),
        }
    }
}

impl CvOptions {
    pub fn with_folds(folds: usize) -> Self {
        CvOptions {
            folds,
            ..Self::default()
        }
    }

    pub fn plain(folds: usize) -> Self {
        CvOptions {
            folds,
            smote_k: None,
            trim_threshold: None,
        }
    }
}

/// Held-out index sets. Indices are shuffled once, then dealt round-robin;
/// classification datasets are dealt category by category so every fold
/// carries each category's share to within one member.
pub fn fold_indices(dataset: &Dataset, k: usize, rng: &mut RngStream) -> Result<Vec<Vec<usize>>> {
    let n = dataset.n_rows();
    if k < 2 {
        return Err(Error::param(format!("need at least 2 folds, got {k}")));
    }
    if k > n {
        return Err(Error::param(format!("{k} folds requested for {n} rows")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    if let Some(codes) = dataset.codes() {
        order.sort_by_key(|&i| codes[i]);
    }
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, &i) in order.iter().enumerate() {
        folds[pos % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

pub type Trainer<'a> = dyn Fn(&Dataset, &mut RngStream) -> Result<ForestModel> + Sync + 'a;

#[derive(Debug, Clone, PartialEq)]
pub enum CvReport {
    Classification(ClassificationReport),
    Regression(RegressionReport),
}

impl CvReport {
    pub fn classification(&self) -> Option<&ClassificationReport> {
        match self {
            CvReport::Classification(r) => Some(r),
            CvReport::Regression(_) => None,
        }
    }

    pub fn regression(&self) -> Option<&RegressionReport> {
        match self {
            CvReport::Regression(r) => Some(r),
            CvReport::Classification(_) => None,
        }
    }
}

pub(crate) fn training_portion(
    dataset: &Dataset,
    train_idx: &[usize],
    options: &CvOptions,
    rng: &mut RngStream,
) -> Result<Dataset> {
    let train = dataset.subset(train_idx);
    match train.target() {
        Target::Classification { .. } => match options.smote_k {
            Some(k) => smote_balance(&train, k, rng),
            None => Ok(train),
        },
        Target::Regression(values) => match options.trim_threshold {
            Some(t) if values.len() >= 4 => {
                let mask = trim_outliers(values, t)?;
                let keep: Vec<usize> = (0..values.len()).filter(|&i| mask.keep[i]).collect();
                Ok(train.subset(&keep))
            }
            _ => Ok(train),
        },
    }
}

/// Train on the whole dataset with the same preprocessing a CV training
/// portion receives.
pub fn train_preprocessed(
    dataset: &Dataset,
    params: &ForestParams,
    options: &CvOptions,
    rng: &mut RngStream,
) -> Result<ForestModel> {
    let all: Vec<usize> = (0..dataset.n_rows()).collect();
    let train = training_portion(dataset, &all, options, rng)?;
    train_forest(&train, params, rng)
}

pub fn k_fold_cv(
    dataset: &Dataset,
    options: &CvOptions,
    trainer: &Trainer<'_>,
    rng: &mut RngStream,
) -> Result<CvReport> {
    let folds = fold_indices(dataset, options.folds, rng)?;
    let master = RngStream::new(rng.next_seed());
    let n = dataset.n_rows();

    let mut class_folds: Vec<ClassificationMetrics> = Vec::new();
    let mut reg_folds: Vec<RegressionMetrics> = Vec::new();
    let mut held_out = vec![false; n];
    for (f, test_idx) in folds.iter().enumerate() {
        held_out.iter_mut().for_each(|h| *h = false);
        test_idx.iter().for_each(|&i| held_out[i] = true);
        let train_idx: Vec<usize> = (0..n).filter(|&i| !held_out[i]).collect();

        let mut fold_rng = master.child("fold", f as u64);
        let train = training_portion(dataset, &train_idx, options, &mut fold_rng)?;
        let model = trainer(&train, &mut fold_rng)?;

        let rows = dataset.rows();
        match dataset.target() {
            Target::Classification { codes, .. } => {
                let mut pred = Vec::with_capacity(test_idx.len());
                let mut scores = Vec::with_capacity(test_idx.len());
                for &i in test_idx {
                    let (c, p) = model.predict_class(&rows[i])?;
                    pred.push(c);
                    scores.push(p);
                }
                let truth: Vec<usize> = test_idx.iter().map(|&i| codes[i]).collect();
                class_folds.push(classification_report(&truth, &pred, &scores)?);
            }
            Target::Regression(values) => {
                let pred = test_idx
                    .iter()
                    .map(|&i| model.predict_value(&rows[i]))
                    .collect::<Result<Vec<_>>>()?;
                let truth: Vec<f64> = test_idx.iter().map(|&i| values[i]).collect();
                reg_folds.push(regression_report(&truth, &pred)?);
            }
        }
    }
    Ok(match dataset.target() {
        Target::Classification { .. } => {
            CvReport::Classification(ClassificationReport::from_folds(class_folds)?)
        }
        Target::Regression(_) => CvReport::Regression(RegressionReport::from_folds(reg_folds)?),
    })
}
