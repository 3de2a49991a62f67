//! Seeded random streams, the delay distributions used by the simulator,
//! moment fitting, and the unpaired two-sample t-test used for validation.

use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Significance level for every hypothesis decision in the crate.
pub const ALPHA: f64 = 0.05;

const MINUTES_PER_DAY: f64 = 1440.0;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Derive a child seed from a master seed and a label. Pure function of its
/// inputs, so substreams do not depend on the order they are created in.
pub fn derive_seed(master: u64, label: &str, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ fnv1a(label)) ^ splitmix64(index.wrapping_add(1)))
}

/// A seeded pseudo-random stream. Not shared between concurrent activities;
/// derive a substream per replication / training run instead.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Named substream of `master`.
    pub fn substream(master: u64, label: &str) -> Self {
        Self::new(derive_seed(master, label, 0))
    }

    /// Indexed substream of `master` (replication i, tree i, ...).
    pub fn indexed(master: u64, label: &str, index: u64) -> Self {
        Self::new(derive_seed(master, label, index))
    }

    /// Child stream derived from this stream's seed (not its current state).
    pub fn child(&self, label: &str, index: u64) -> Self {
        Self::indexed(self.seed, label, index)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Fresh seed for a child stream, advancing this stream.
    pub fn next_seed(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Uniform index in [0, n).
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriangularParams {
    pub min: f64,
    pub mode: f64,
    pub max: f64,
}

impl TriangularParams {
    pub fn new(min: f64, mode: f64, max: f64) -> Result<Self> {
        let p = TriangularParams { min, mode, max };
        p.validate()?;
        Ok(p)
    }

    pub fn point(value: f64) -> Self {
        TriangularParams {
            min: value,
            mode: value,
            max: value,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.mode.is_finite() && self.max.is_finite()) {
            return Err(Error::param("triangular parameters must be finite"));
        }
        if self.min > self.mode || self.mode > self.max {
            return Err(Error::param(format!(
                "triangular requires min <= mode <= max, got [{}, {}, {}]",
                self.min, self.mode, self.max
            )));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        (self.min + self.mode + self.max) / 3.0
    }

    /// Same shape with every point divided by 1440 (minutes to days).
    pub fn minutes_to_days(&self) -> Self {
        TriangularParams {
            min: self.min / MINUTES_PER_DAY,
            mode: self.mode / MINUTES_PER_DAY,
            max: self.max / MINUTES_PER_DAY,
        }
    }

    /// Inverse-CDF transform of a uniform `u` in [0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        let range = self.max - self.min;
        if range <= 0.0 {
            return self.min;
        }
        let split = (self.mode - self.min) / range;
        let x = if u < split {
            self.min + (u * range * (self.mode - self.min)).sqrt()
        } else {
            self.max - ((1.0 - u) * range * (self.max - self.mode)).sqrt()
        };
        x.clamp(self.min, self.max)
    }
}

pub fn sample_triangular(params: &TriangularParams, rng: &mut RngStream) -> Result<f64> {
    params.validate()?;
    Ok(params.quantile(rng.uniform()))
}

/// `shift + L` with `L` lognormal of the given variate mean and sd; the
/// result is clamped at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftedLognormalParams {
    pub shift: f64,
    pub mean: f64,
    pub sd: f64,
}

impl ShiftedLognormalParams {
    pub fn new(shift: f64, mean: f64, sd: f64) -> Result<Self> {
        let p = ShiftedLognormalParams { shift, mean, sd };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mean > 0.0) || !self.mean.is_finite() {
            return Err(Error::param(format!(
                "lognormal mean must be positive, got {}",
                self.mean
            )));
        }
        if !(self.sd >= 0.0) || !self.sd.is_finite() || !self.shift.is_finite() {
            return Err(Error::param(format!(
                "lognormal sd must be finite and non-negative, got {}",
                self.sd
            )));
        }
        Ok(())
    }

    /// (mu, sigma) of the underlying normal.
    pub fn underlying_normal(&self) -> (f64, f64) {
        let m2 = self.mean * self.mean;
        let s2 = self.sd * self.sd;
        let mu = (m2 / (m2 + s2).sqrt()).ln();
        let sigma = (1.0 + s2 / m2).ln().sqrt();
        (mu, sigma)
    }

    pub(crate) fn transform(&self, z: f64) -> f64 {
        if self.sd == 0.0 {
            return (self.shift + self.mean).max(0.0);
        }
        let (mu, sigma) = self.underlying_normal();
        (self.shift + (mu + sigma * z).exp()).max(0.0)
    }
}

pub fn sample_shifted_lognormal(
    params: &ShiftedLognormalParams,
    rng: &mut RngStream,
) -> Result<f64> {
    params.validate()?;
    if params.sd == 0.0 {
        return Ok(params.transform(0.0));
    }
    Ok(params.transform(rng.standard_normal()))
}

pub fn sample_poisson_count(rate: f64, rng: &mut RngStream) -> Result<u64> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::param(format!(
            "arrival rate must be finite and non-negative, got {rate}"
        )));
    }
    if rate == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(rate).map_err(|e| Error::param(e.to_string()))?;
    Ok(dist.sample(rng) as u64)
}

/// Method-of-moments fit: mean is the sample mean minus `shift`, sd is the
/// sample standard deviation.
pub fn fit_shifted_lognormal_moments(
    samples: &[f64],
    shift: f64,
) -> Result<ShiftedLognormalParams> {
    if samples.len() < 2 {
        return Err(Error::Fit(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    let (mean, var) = mean_var(samples);
    if var <= 0.0 {
        return Err(Error::Fit("samples have zero variance".into()));
    }
    let mean = mean - shift;
    if mean <= 0.0 {
        return Err(Error::Fit(format!(
            "sample mean does not exceed the shift {shift}"
        )));
    }
    Ok(ShiftedLognormalParams {
        shift,
        mean,
        sd: var.sqrt(),
    })
}

/// Mean and unbiased (n - 1) variance. Variance is 0 for a single sample.
pub(crate) fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub t_statistic: f64,
    pub degrees_of_freedom: f64,
    pub p_value: f64,
    pub reject_at_005: bool,
}

/// Welch's unequal-variance t-test, two-sided.
pub fn welch_t_test(x: &[f64], y: &[f64]) -> Result<TestResult> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::param(format!(
            "t-test needs at least 2 observations per sample, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::param("t-test samples must be finite"));
    }
    let (mx, vx) = mean_var(x);
    let (my, vy) = mean_var(y);
    let a = vx / x.len() as f64;
    let b = vy / y.len() as f64;
    let se2 = a + b;
    if se2 == 0.0 {
        if mx == my {
            return Ok(TestResult {
                t_statistic: 0.0,
                degrees_of_freedom: (x.len() + y.len() - 2) as f64,
                p_value: 1.0,
                reject_at_005: false,
            });
        }
        return Err(Error::param(
            "both samples are constant with different means",
        ));
    }
    let t = (mx - my) / se2.sqrt();
    let df = se2 * se2 / (a * a / (x.len() - 1) as f64 + b * b / (y.len() - 1) as f64);
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::param(e.to_string()))?;
    let p = (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0);
    Ok(TestResult {
        t_statistic: t,
        degrees_of_freedom: df,
        p_value: p,
        reject_at_005: p < ALPHA,
    })
}

/// Two-sided 97.5% Student-t quantile for `df` degrees of freedom.
pub(crate) fn t_crit_975(df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df)
        .map(|d| d.inverse_cdf(0.975))
        .unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    /// Half-width of the 95% t confidence interval for the mean.
    pub ci_half_width: f64,
}

impl Summary {
    pub fn mean_sd(&self) -> MeanSd {
        MeanSd {
            mean: self.mean,
            sd: self.sd,
        }
    }
}

pub fn summarize(samples: &[f64]) -> Result<Summary> {
    if samples.is_empty() {
        return Err(Error::param("cannot summarize an empty sample"));
    }
    let n = samples.len();
    let (mean, var) = mean_var(samples);
    if n == 1 {
        return Ok(Summary {
            n,
            mean,
            sd: 0.0,
            ci_half_width: 0.0,
        });
    }
    let sd = var.sqrt();
    Ok(Summary {
        n,
        mean,
        sd,
        ci_half_width: t_crit_975((n - 1) as f64) * sd / (n as f64).sqrt(),
    })
}

/// A mean with its spread, rendered as `mean±sd`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    /// Mean and sd of the finite values; NaN when none are finite.
    pub fn of(values: &[f64]) -> MeanSd {
        let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        match summarize(&finite) {
            Ok(s) => MeanSd {
                mean: s.mean,
                sd: s.sd,
            },
            Err(_) => MeanSd {
                mean: f64::NAN,
                sd: f64::NAN,
            },
        }
    }

    pub fn scaled(self, factor: f64) -> MeanSd {
        MeanSd {
            mean: self.mean * factor,
            sd: self.sd * factor,
        }
    }
}

impl fmt::Display for MeanSd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prec = f.precision().unwrap_or(2);
        write!(f, "{:.prec$}±{:.prec$}", self.mean, self.sd, prec = prec)
    }
}

/// Linear-interpolated quantile of an already sorted slice.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}
