use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::cv::{k_fold_cv, CvOptions, CvReport};
use crate::learn::dataset::Dataset;
use crate::learn::forest::{train_forest, ForestParams};
use crate::stats::RngStream;

pub const DEFAULT_TUNING_BUDGET: usize = 30;

/// Candidate values per hyperparameter; configurations are drawn by picking
/// each coordinate uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    pub tree_count: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub min_samples_leaf: Vec<usize>,
    pub features_per_split: Vec<Option<usize>>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            tree_count: vec![100, 200, 300],
            max_depth: vec![6, 8, 10, 12, 16],
            min_samples_leaf: vec![1, 2, 5, 10],
            features_per_split: vec![None, Some(2), Some(4), Some(6)],
        }
    }
}

impl SearchSpace {
    pub fn single(params: ForestParams) -> Self {
        SearchSpace {
            tree_count: vec![params.tree_count],
            max_depth: vec![params.max_depth],
            min_samples_leaf: vec![params.min_samples_leaf],
            features_per_split: vec![params.features_per_split],
        }
    }

    fn sample(&self, rng: &mut RngStream) -> ForestParams {
        ForestParams {
            tree_count: self.tree_count[rng.index(self.tree_count.len())],
            max_depth: self.max_depth[rng.index(self.max_depth.len())],
            min_samples_leaf: self.min_samples_leaf[rng.index(self.min_samples_leaf.len())],
            features_per_split: self.features_per_split[rng.index(self.features_per_split.len())],
        }
    }

    fn is_empty(&self) -> bool {
        self.tree_count.is_empty()
            || self.max_depth.is_empty()
            || self.min_samples_leaf.is_empty()
            || self.features_per_split.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub params: ForestParams,
    /// Macro AUROC (classification, higher is better) or MAE (regression,
    /// lower is better).
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub best: ForestParams,
    pub best_score: f64,
    pub trials: Vec<Trial>,
}

pub fn random_search_tune(
    dataset: &Dataset,
    space: &SearchSpace,
    budget: usize,
    options: &CvOptions,
    rng: &mut RngStream,
) -> Result<TuneResult> {
    if budget == 0 {
        return Err(Error::param("tuning budget must be at least 1"));
    }
    if space.is_empty() {
        return Err(Error::param("search space has an empty dimension"));
    }
    let mut sampler = RngStream::new(rng.next_seed());
    let cv_seed = rng.next_seed();
    let higher_is_better = dataset.n_categories().is_some();
    let mut trials: Vec<Trial> = Vec::with_capacity(budget);
    let mut best = 0;
    for _ in 0..budget {
        let params = space.sample(&mut sampler);
        // Same folds for every candidate.
        let mut cv_rng = RngStream::new(cv_seed);
        let trainer = |d: &Dataset, r: &mut RngStream| train_forest(d, &params, r);
        let score = match k_fold_cv(dataset, options, &trainer, &mut cv_rng)? {
            CvReport::Classification(r) => r.macro_auroc.mean,
            CvReport::Regression(r) => r.mae.mean,
        };
        if let Some(prev) = trials.get(best) {
            let improves = if higher_is_better {
                score > prev.score
            } else {
                score < prev.score
            };
            if improves {
                best = trials.len();
            }
        }
        trials.push(Trial { params, score });
    }
    Ok(TuneResult {
        best: trials[best].params,
        best_score: trials[best].score,
        trials,
    })
}
