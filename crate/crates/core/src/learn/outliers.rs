use crate::error::{Error, Result};
use crate::stats::median;

pub const DEFAULT_TRIM_THRESHOLD: f64 = 3.5;

/// Consistency constant turning a MAD into a normal-sd estimate.
const MAD_SCALE: f64 = 1.4826;

#[derive(Debug, Clone, PartialEq)]
pub struct TrimMask {
    pub keep: Vec<bool>,
    /// Set when the MAD is zero and nothing could be judged an outlier.
    pub degenerate: bool,
}

impl TrimMask {
    pub fn kept(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }
}

/// Robust z-score trim: keep `v` where |v - median| / (1.4826 MAD) <= threshold.
pub fn trim_outliers(values: &[f64], threshold: f64) -> Result<TrimMask> {
    if values.len() < 4 {
        return Err(Error::param(format!(
            "outlier trim needs at least 4 values, got {}",
            values.len()
        )));
    }
    if !(threshold > 0.0) {
        return Err(Error::param(format!(
            "trim threshold must be positive, got {threshold}"
        )));
    }
    let med = median(values);
    let deviations: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    let mad = median(&deviations);
    if mad == 0.0 {
        log::warn!("median absolute deviation is zero; keeping all values");
        return Ok(TrimMask {
            keep: vec![true; values.len()],
            degenerate: true,
        });
    }
    let scale = mad * MAD_SCALE;
    Ok(TrimMask {
        keep: deviations.iter().map(|d| d / scale <= threshold).collect(),
        degenerate: false,
    })
}
