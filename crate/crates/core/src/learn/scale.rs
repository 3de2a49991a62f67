use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-feature min-max normalization learned from training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    mins: Vec<f64>,
    maxs: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::param("cannot fit a scaler on an empty matrix"))?;
        let mut mins = first.clone();
        let mut maxs = first.clone();
        for row in &rows[1..] {
            if row.len() != mins.len() {
                return Err(Error::param("ragged feature matrix"));
            }
            for (j, &v) in row.iter().enumerate() {
                mins[j] = mins[j].min(v);
                maxs[j] = maxs[j].max(v);
            }
        }
        Ok(MinMaxScaler { mins, maxs })
    }

    pub fn n_features(&self) -> usize {
        self.mins.len()
    }

    pub fn bounds(&self, feature: usize) -> (f64, f64) {
        (self.mins[feature], self.maxs[feature])
    }

    /// Not clipped: values outside the training range land outside [0, 1].
    pub fn transform_value(&self, feature: usize, x: f64) -> f64 {
        let range = self.maxs[feature] - self.mins[feature];
        if range > 0.0 {
            (x - self.mins[feature]) / range
        } else {
            0.0
        }
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &x)| self.transform_value(j, x))
            .collect()
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }
}
