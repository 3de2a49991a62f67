//! Random forests of CART trees for classification and regression, plus
//! the on-disk model container.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Codebook;
use crate::learn::dataset::{Dataset, Target, Task};
use crate::learn::scale::MinMaxScaler;
use crate::learn::tree::{grow, GrowParams, Labels, Tree};
use crate::stats::RngStream;
use crate::util::write_atomic;

/// Magic first line of a model file.
pub const MODEL_MAGIC: &str = "RFSIM/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestParams {
    pub tree_count: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// `None` picks ceil(sqrt(d)) for classification, ceil(d/3) for regression.
    pub features_per_split: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            tree_count: 200,
            max_depth: 12,
            min_samples_leaf: 5,
            features_per_split: None,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.tree_count == 0 {
            return Err(Error::param("tree_count must be at least 1"));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::param("min_samples_leaf must be at least 1"));
        }
        if self.features_per_split == Some(0) {
            return Err(Error::param("features_per_split must be at least 1"));
        }
        Ok(())
    }

    pub fn resolved_features_per_split(&self, task: Task, d: usize) -> usize {
        let default = match task {
            Task::Classification => (d as f64).sqrt().ceil() as usize,
            Task::Regression => d.div_ceil(3),
        };
        self.features_per_split
            .unwrap_or(default)
            .clamp(1, d.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    task: Task,
    n_categories: usize,
    feature_names: Vec<String>,
    params: ForestParams,
    scaler: MinMaxScaler,
    trees: Vec<Tree>,
    codebook: Option<Codebook>,
    category_labels: Vec<String>,
}

pub fn train_forest(
    dataset: &Dataset,
    params: &ForestParams,
    rng: &mut RngStream,
) -> Result<ForestModel> {
    params.validate()?;
    let n = dataset.n_rows();
    if n < 2 {
        return Err(Error::param(format!(
            "need at least 2 rows to train a forest, got {n}"
        )));
    }
    let scaler = MinMaxScaler::fit(dataset.rows())?;
    let cols: Vec<Vec<f64>> = dataset
        .columns()
        .into_iter()
        .enumerate()
        .map(|(j, c)| {
            c.into_iter()
                .map(|x| scaler.transform_value(j, x))
                .collect()
        })
        .collect();
    let task = dataset.task();
    let grow_params = GrowParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        features_per_split: params.resolved_features_per_split(task, dataset.n_features()),
    };
    let (labels, n_categories) = match dataset.target() {
        Target::Classification {
            codes,
            n_categories,
        } => (
            Labels::Classes {
                codes,
                k: *n_categories,
            },
            *n_categories,
        ),
        Target::Regression(v) => (Labels::Values(v), 0),
    };

    // Each tree owns a stream derived from (forest seed, tree index), so the
    // result does not depend on how trees are scheduled.
    let master = RngStream::new(rng.next_seed());
    let trees: Vec<Tree> = (0..params.tree_count)
        .into_par_iter()
        .map(|t| {
            let mut tree_rng = master.child("tree", t as u64);
            let sample: Vec<usize> = (0..n).map(|_| tree_rng.index(n)).collect();
            grow(&cols, labels, sample, grow_params, &mut tree_rng)
        })
        .collect();

    Ok(ForestModel {
        task,
        n_categories,
        feature_names: dataset.feature_names().to_vec(),
        params: *params,
        scaler,
        trees,
        codebook: None,
        category_labels: (0..n_categories).map(|c| c.to_string()).collect(),
    })
}

impl ForestModel {
    /// Assemble a model from prebuilt trees whose splits are on scaled inputs.
    pub fn from_parts(
        task: Task,
        n_categories: usize,
        feature_names: Vec<String>,
        scaler: MinMaxScaler,
        trees: Vec<Tree>,
    ) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::param("a forest needs at least one tree"));
        }
        if scaler.n_features() != feature_names.len() {
            return Err(Error::param("scaler and feature names disagree"));
        }
        Ok(ForestModel {
            task,
            n_categories,
            params: ForestParams {
                tree_count: trees.len(),
                ..ForestParams::default()
            },
            feature_names,
            scaler,
            trees,
            codebook: None,
            category_labels: (0..n_categories).map(|c| c.to_string()).collect(),
        })
    }

    pub fn with_codebook(mut self, codebook: Codebook) -> Self {
        self.codebook = Some(codebook);
        self
    }

    pub fn with_category_labels(mut self, labels: Vec<String>) -> Self {
        self.category_labels = labels;
        self
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn n_categories(&self) -> usize {
        self.n_categories
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn codebook(&self) -> Option<&Codebook> {
        self.codebook.as_ref()
    }

    pub fn category_labels(&self) -> &[String] {
        &self.category_labels
    }

    fn check_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.feature_names.len() {
            return Err(Error::param(format!(
                "row has {} features, model expects {}",
                row.len(),
                self.feature_names.len()
            )));
        }
        Ok(self.scaler.transform_row(row))
    }

    /// Mean of per-tree leaf class frequencies and its argmax (lowest code
    /// wins ties).
    pub fn predict_class(&self, row: &[f64]) -> Result<(usize, Vec<f64>)> {
        if self.task != Task::Classification {
            return Err(Error::param("predict_class on a regression model"));
        }
        let x = self.check_row(row)?;
        let mut probs = vec![0.0; self.n_categories];
        for tree in &self.trees {
            for (p, v) in probs.iter_mut().zip(tree.leaf_for(&x)) {
                *p += v;
            }
        }
        let t = self.trees.len() as f64;
        probs.iter_mut().for_each(|p| *p /= t);
        Ok((argmax(&probs), probs))
    }

    pub fn predict_value(&self, row: &[f64]) -> Result<f64> {
        if self.task != Task::Regression {
            return Err(Error::param("predict_value on a classification model"));
        }
        let x = self.check_row(row)?;
        let sum: f64 = self.trees.iter().map(|t| t.leaf_for(&x)[0]).sum();
        Ok(sum / self.trees.len() as f64)
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::new();
        writeln!(bytes, "{MODEL_MAGIC}").expect("write to Vec");
        serde_json::to_writer(&mut bytes, self).map_err(|e| Error::ModelFormat(e.to_string()))?;
        bytes.push(b'\n');
        write_atomic(path, &bytes)
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = BufReader::new(file);
        let mut magic = String::new();
        reader
            .read_line(&mut magic)
            .map_err(|e| Error::io(path, e))?;
        if magic.trim_end() != MODEL_MAGIC {
            return Err(Error::ModelFormat(format!(
                "{}: missing `{MODEL_MAGIC}` header",
                path.display()
            )));
        }
        let model: ForestModel = serde_json::from_reader(reader)
            .map_err(|e| Error::ModelFormat(format!("{}: {e}", path.display())))?;
        if model.trees.is_empty() {
            return Err(Error::ModelFormat("model has no trees".into()));
        }
        Ok(model)
    }
}

pub fn forest_predict_class(model: &ForestModel, row: &[f64]) -> Result<(usize, Vec<f64>)> {
    model.predict_class(row)
}

pub fn forest_predict_value(model: &ForestModel, row: &[f64]) -> Result<f64> {
    model.predict_value(row)
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
