use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{welch_t_test, TestResult};
use crate::util::{csv_bytes, write_atomic};

pub const DEFAULT_DENSITY_BINS: usize = 20;

/// One bin of the empirical densities; PDFs integrate to 1 over the bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityBin {
    pub lower: f64,
    pub upper: f64,
    pub sim_pdf: f64,
    pub hist_pdf: f64,
    pub sim_cdf: f64,
    pub hist_cdf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub test: TestResult,
    pub sim_mean: f64,
    pub hist_mean: f64,
    pub bins: Vec<DensityBin>,
}

impl ValidationReport {
    /// Plot-ready columns `lower,upper,sim_pdf,hist_pdf,sim_cdf,hist_cdf`.
    pub fn write_density_csv(&self, path: &Path) -> Result<()> {
        let bytes = csv_bytes(
            &[
                "lower", "upper", "sim_pdf", "hist_pdf", "sim_cdf", "hist_cdf",
            ],
            |w| {
                for b in &self.bins {
                    w.write_record(
                        [
                            b.lower, b.upper, b.sim_pdf, b.hist_pdf, b.sim_cdf, b.hist_cdf,
                        ]
                        .map(|x| x.to_string()),
                    )?;
                }
                Ok(())
            },
        )?;
        write_atomic(path, &bytes)
    }
}

/// Welch test of simulated against historical ATRT, plus binned densities
/// over the pooled range.
pub fn validate_against_history(sim_atrt: &[f64], hist_atrt: &[f64]) -> Result<ValidationReport> {
    validate_with_bins(sim_atrt, hist_atrt, DEFAULT_DENSITY_BINS)
}

pub fn validate_with_bins(sim: &[f64], hist: &[f64], n_bins: usize) -> Result<ValidationReport> {
    if n_bins == 0 {
        return Err(Error::param("at least one density bin is required"));
    }
    let test = welch_t_test(sim, hist)?;
    let lo = sim
        .iter()
        .chain(hist)
        .copied()
        .fold(f64::INFINITY, f64::min);
    let hi = sim
        .iter()
        .chain(hist)
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let (n_bins, width) = if hi > lo {
        (n_bins, (hi - lo) / n_bins as f64)
    } else {
        (1, 1.0)
    };
    let counts = |xs: &[f64]| {
        let mut c = vec![0usize; n_bins];
        for &x in xs {
            let b = (((x - lo) / width) as usize).min(n_bins - 1);
            c[b] += 1;
        }
        c
    };
    let (cs, ch) = (counts(sim), counts(hist));
    let (ns, nh) = (sim.len() as f64, hist.len() as f64);
    let (mut acc_s, mut acc_h) = (0usize, 0usize);
    let bins = (0..n_bins)
        .map(|b| {
            acc_s += cs[b];
            acc_h += ch[b];
            DensityBin {
                lower: lo + b as f64 * width,
                upper: lo + (b + 1) as f64 * width,
                sim_pdf: cs[b] as f64 / (ns * width),
                hist_pdf: ch[b] as f64 / (nh * width),
                sim_cdf: acc_s as f64 / ns,
                hist_cdf: acc_h as f64 / nh,
            }
        })
        .collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(ValidationReport {
        test,
        sim_mean: mean(sim),
        hist_mean: mean(hist),
        bins,
    })
}

/// One real per line; blank lines are skipped.
pub fn read_history(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| {
            Error::Data(format!(
                "{}:{}: `{line}` is not a number",
                path.display(),
                i + 1
            ))
        })?;
        if !v.is_finite() {
            return Err(Error::Data(format!(
                "{}:{}: non-finite value",
                path.display(),
                i + 1
            )));
        }
        out.push(v);
    }
    Ok(out)
}
