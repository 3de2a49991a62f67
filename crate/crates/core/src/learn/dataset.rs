use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Regression,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Regression(Vec<f64>),
    Classification {
        codes: Vec<usize>,
        n_categories: usize,
    },
}

impl Target {
    pub fn len(&self) -> usize {
        match self {
            Target::Regression(v) => v.len(),
            Target::Classification { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn task(&self) -> Task {
        match self {
            Target::Regression(_) => Task::Regression,
            Target::Classification { .. } => Task::Classification,
        }
    }
}

/// Row-major feature matrix with one target per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<Vec<f64>>,
    feature_names: Vec<String>,
    target: Target,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>, feature_names: Vec<String>, target: Target) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::param("dataset has no rows"));
        }
        if rows.len() != target.len() {
            return Err(Error::param(format!(
                "{} rows but {} targets",
                rows.len(),
                target.len()
            )));
        }
        let d = feature_names.len();
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::param(format!(
                "row {i} has {} entries, expected {d}",
                rows[i].len()
            )));
        }
        if let Target::Classification {
            codes,
            n_categories,
        } = &target
        {
            if let Some(c) = codes.iter().find(|&&c| c >= *n_categories) {
                return Err(Error::param(format!(
                    "category code {c} out of range for {n_categories} categories"
                )));
            }
        }
        Ok(Dataset {
            rows,
            feature_names,
            target,
        })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    pub fn task(&self) -> Task {
        self.target.task()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_categories(&self) -> Option<usize> {
        match &self.target {
            Target::Classification { n_categories, .. } => Some(*n_categories),
            Target::Regression(_) => None,
        }
    }

    pub fn codes(&self) -> Option<&[usize]> {
        match &self.target {
            Target::Classification { codes, .. } => Some(codes),
            Target::Regression(_) => None,
        }
    }

    pub fn values(&self) -> Option<&[f64]> {
        match &self.target {
            Target::Regression(v) => Some(v),
            Target::Classification { .. } => None,
        }
    }

    /// Per-category row counts (classification only).
    pub fn category_counts(&self) -> Vec<usize> {
        match &self.target {
            Target::Classification {
                codes,
                n_categories,
            } => {
                let mut counts = vec![0; *n_categories];
                for &c in codes {
                    counts[c] += 1;
                }
                counts
            }
            Target::Regression(_) => Vec::new(),
        }
    }

    /// Rows at `indices`, in that order. Panics on out-of-range indices.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let rows = indices.iter().map(|&i| self.rows[i].clone()).collect();
        let target = match &self.target {
            Target::Regression(v) => Target::Regression(indices.iter().map(|&i| v[i]).collect()),
            Target::Classification {
                codes,
                n_categories,
            } => Target::Classification {
                codes: indices.iter().map(|&i| codes[i]).collect(),
                n_categories: *n_categories,
            },
        };
        Dataset {
            rows,
            feature_names: self.feature_names.clone(),
            target,
        }
    }

    /// Column-major copy of the features.
    pub(crate) fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.n_features())
            .map(|j| self.rows.iter().map(|r| r[j]).collect())
            .collect()
    }
}
