//! Synthetic discharge cohorts with planted, enumerable ground truth.
//!
//! Length of stay:
//!
//! ```text
//! los = clamp(1, 30, round_half_up(1 + 2*severity + 1.5*[emergency] + noise))
//! noise = round(Normal(0, los_noise_sd))
//! ```
//!
//! where `severity` is the 0-based level index of the severity feature and
//! `[emergency]` is 1 for the `Emergency` admission type.
//!
//! Referral type: a favoured category is chosen by
//!
//! * SNF when the age group is the oldest and (severity >= 2 or los >= 7),
//!   or the age group is the second oldest and severity is the top level;
//! * otherwise HHS when the age group is one of the two oldest or los >= 5;
//! * otherwise Other.
//!
//! The favoured category has probability `referral_purity`; the other two
//! share the remainder equally. Every quantity is a function of a finite
//! categorical space plus integer noise, so expectations and the Bayes
//! accuracy can be enumerated exactly ([`CohortOracle`]).

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::ingest::records::{PatientRecord, ReferralType, FEATURE_COLUMNS};
use crate::stats::RngStream;

const AGE: usize = 0;
const ADMISSION_TYPE: usize = 4;
const SEVERITY: usize = 9;
const EMERGENCY_LABEL: &str = "Emergency";
const LOS_MIN: f64 = 1.0;
const LOS_MAX: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureMarginal {
    pub labels: Vec<String>,
    pub probs: Vec<f64>,
}

impl FeatureMarginal {
    fn new(labels: &[&str], probs: &[f64]) -> Self {
        FeatureMarginal {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            probs: probs.to_vec(),
        }
    }

    fn uniform(labels: &[&str]) -> Self {
        let p = 1.0 / labels.len() as f64;
        Self::new(labels, &vec![p; labels.len()])
    }

    fn sample(&self, rng: &mut RngStream) -> usize {
        let u = rng.uniform();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticCohortSpec {
    pub hospitals: Vec<String>,
    pub patients_per_day: u32,
    pub days: u32,
    /// One marginal per feature column, in column order.
    pub marginals: Vec<FeatureMarginal>,
    pub los_noise_sd: f64,
    pub referral_purity: f64,
    pub seed: u64,
}

impl Default for SyntheticCohortSpec {
    fn default() -> Self {
        let marginals = vec![
            FeatureMarginal::new(
                &["0 to 17", "18 to 29", "30 to 49", "50 to 69", "70 or Older"],
                &[0.05, 0.08, 0.17, 0.32, 0.38],
            ),
            FeatureMarginal::new(&["F", "M"], &[0.53, 0.47]),
            FeatureMarginal::new(
                &[
                    "Black/African American",
                    "Multi-racial",
                    "Other Race",
                    "White",
                ],
                &[0.18, 0.04, 0.16, 0.62],
            ),
            FeatureMarginal::new(
                &[
                    "Multi-ethnic",
                    "Not Span/Hispanic",
                    "Spanish/Hispanic",
                    "Unknown",
                ],
                &[0.01, 0.82, 0.12, 0.05],
            ),
            FeatureMarginal::new(&["Elective", "Emergency", "Urgent"], &[0.25, 0.6, 0.15]),
            FeatureMarginal::uniform(&[
                "2", "100", "101", "106", "108", "122", "157", "159", "203", "237",
            ]),
            FeatureMarginal::uniform(&["0", "47", "54", "216", "222", "231"]),
            FeatureMarginal::uniform(&["139", "194", "201", "247", "540", "720", "775", "812"]),
            FeatureMarginal::uniform(&["4", "5", "6", "11", "14", "18"]),
            FeatureMarginal::new(&["1", "2", "3", "4"], &[0.2, 0.35, 0.3, 0.15]),
            FeatureMarginal::new(
                &["Extreme", "Major", "Minor", "Moderate"],
                &[0.07, 0.18, 0.5, 0.25],
            ),
            FeatureMarginal::new(
                &[
                    "Medicaid",
                    "Medicare",
                    "Private Health Insurance",
                    "Self-Pay",
                ],
                &[0.25, 0.45, 0.25, 0.05],
            ),
        ];
        SyntheticCohortSpec {
            hospitals: vec!["H1".into(), "H2".into(), "H3".into()],
            patients_per_day: 100,
            days: 100,
            marginals,
            los_noise_sd: 1.5,
            referral_purity: 0.92,
            seed: 2021,
        }
    }
}

impl SyntheticCohortSpec {
    pub fn validate(&self) -> Result<()> {
        if self.marginals.len() != FEATURE_COLUMNS.len() {
            return Err(Error::Config(format!(
                "cohort spec needs {} marginals, got {}",
                FEATURE_COLUMNS.len(),
                self.marginals.len()
            )));
        }
        for (name, m) in FEATURE_COLUMNS.iter().zip(&self.marginals) {
            if m.labels.is_empty() || m.labels.len() != m.probs.len() {
                return Err(Error::Config(format!("marginal for `{name}` is malformed")));
            }
            if m.probs.iter().any(|&p| !(p >= 0.0))
                || (m.probs.iter().sum::<f64>() - 1.0).abs() > 1e-9
            {
                return Err(Error::Config(format!(
                    "probabilities for `{name}` must be non-negative and sum to 1"
                )));
            }
        }
        if self.marginals[AGE].labels.len() < 2 {
            return Err(Error::Config(
                "age marginal needs at least two groups".into(),
            ));
        }
        if !(self.los_noise_sd >= 0.0) || !self.los_noise_sd.is_finite() {
            return Err(Error::Config(
                "los_noise_sd must be finite and non-negative".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.referral_purity) {
            return Err(Error::Config("referral_purity must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn patients_per_hospital(&self) -> usize {
        self.patients_per_day as usize * self.days as usize
    }

    fn emergency_index(&self) -> Option<usize> {
        self.marginals[ADMISSION_TYPE]
            .labels
            .iter()
            .position(|l| l == EMERGENCY_LABEL)
    }

    /// Planted LOS for a severity index, emergency flag and integer noise.
    pub fn planted_los(severity: usize, emergency: bool, noise: i64) -> f64 {
        let raw = 1.0 + 2.0 * severity as f64 + if emergency { 1.5 } else { 0.0 } + noise as f64;
        (raw + 0.5).floor().clamp(LOS_MIN, LOS_MAX)
    }

    /// Favoured referral category for (age index, severity index, los).
    pub fn favoured_referral(&self, age: usize, severity: usize, los: f64) -> ReferralType {
        let oldest = self.marginals[AGE].labels.len() - 1;
        let top_severity = self.marginals[SEVERITY].labels.len() - 1;
        if (age == oldest && (severity >= 2 || los >= 7.0))
            || (age + 1 == oldest && severity == top_severity)
        {
            ReferralType::Snf
        } else if age + 1 >= oldest || los >= 5.0 {
            ReferralType::Hhs
        } else {
            ReferralType::Other
        }
    }

    pub fn referral_probs(&self, age: usize, severity: usize, los: f64) -> [f64; 3] {
        let favoured = self.favoured_referral(age, severity, los);
        let rest = (1.0 - self.referral_purity) / 2.0;
        let mut p = [rest; 3];
        p[favoured.code()] = self.referral_purity;
        p
    }

    /// One patient's features, planted LOS and referral type.
    pub(crate) fn sample_patient(&self, rng: &mut RngStream) -> (Vec<String>, f64, ReferralType) {
        let codes: Vec<usize> = self.marginals.iter().map(|m| m.sample(rng)).collect();
        let noise = (self.los_noise_sd * rng.standard_normal()).round() as i64;
        let emergency = Some(codes[ADMISSION_TYPE]) == self.emergency_index();
        let los = Self::planted_los(codes[SEVERITY], emergency, noise);
        let probs = self.referral_probs(codes[AGE], codes[SEVERITY], los);
        let u = rng.uniform();
        let referral = if u < probs[0] {
            ReferralType::Snf
        } else if u < probs[0] + probs[1] {
            ReferralType::Hhs
        } else {
            ReferralType::Other
        };
        let features = codes
            .iter()
            .zip(&self.marginals)
            .map(|(&c, m)| m.labels[c].clone())
            .collect();
        (features, los, referral)
    }
}

/// Records for every hospital, hospital by hospital, in admission order.
/// Hospital `h` draws from its own substream of the spec seed.
pub fn generate_synthetic_cohort(spec: &SyntheticCohortSpec) -> Result<Vec<PatientRecord>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.hospitals.len() * spec.patients_per_hospital());
    for (h, hospital) in spec.hospitals.iter().enumerate() {
        let mut rng = RngStream::indexed(spec.seed, "cohort", h as u64);
        for day in 0..spec.days {
            for _ in 0..spec.patients_per_day {
                let admission_day = f64::from(day) + rng.uniform();
                let (features, los, referral) = spec.sample_patient(&mut rng);
                out.push(PatientRecord {
                    hospital_id: hospital.clone(),
                    admission_day,
                    features,
                    los_days: Some(los),
                    referral: Some(referral),
                });
            }
        }
    }
    Ok(out)
}

/// Exact expectations under a cohort spec, by enumeration.
#[derive(Debug, Clone)]
pub struct CohortOracle<'a> {
    spec: &'a SyntheticCohortSpec,
    noise: Vec<(i64, f64)>,
}

impl<'a> CohortOracle<'a> {
    pub fn new(spec: &'a SyntheticCohortSpec) -> Result<Self> {
        spec.validate()?;
        let sd = spec.los_noise_sd;
        let noise = if sd == 0.0 {
            vec![(0, 1.0)]
        } else {
            let normal = Normal::new(0.0, sd).map_err(|e| Error::param(e.to_string()))?;
            let reach = (10.0 * sd).ceil() as i64 + 1;
            (-reach..=reach)
                .map(|k| {
                    let k_f = k as f64;
                    (k, normal.cdf(k_f + 0.5) - normal.cdf(k_f - 0.5))
                })
                .collect()
        };
        Ok(CohortOracle { spec, noise })
    }

    /// (severity, emergency, probability) cells.
    fn los_cells(&self) -> Vec<(usize, bool, f64)> {
        let sev = &self.spec.marginals[SEVERITY].probs;
        let adm = &self.spec.marginals[ADMISSION_TYPE].probs;
        let emergency = self.spec.emergency_index();
        let mut cells = Vec::new();
        for (s, &ps) in sev.iter().enumerate() {
            let pe = emergency.map(|e| adm[e]).unwrap_or(0.0);
            cells.push((s, true, ps * pe));
            cells.push((s, false, ps * (1.0 - pe)));
        }
        cells
    }

    /// Distribution of LOS given severity index and emergency flag.
    pub fn los_distribution(&self, severity: usize, emergency: bool) -> Vec<(f64, f64)> {
        let mut dist: Vec<(f64, f64)> = Vec::new();
        for &(k, p) in &self.noise {
            let los = SyntheticCohortSpec::planted_los(severity, emergency, k);
            match dist.iter_mut().find(|(l, _)| *l == los) {
                Some(slot) => slot.1 += p,
                None => dist.push((los, p)),
            }
        }
        dist
    }

    pub fn expected_los(&self) -> f64 {
        self.los_cells()
            .into_iter()
            .map(|(s, e, p)| {
                p * self
                    .los_distribution(s, e)
                    .iter()
                    .map(|(l, q)| l * q)
                    .sum::<f64>()
            })
            .sum()
    }

    /// MAE of the Bayes conditional-mean LOS predictor, the noise floor for
    /// a mean-predicting regressor.
    pub fn los_noise_floor(&self) -> f64 {
        self.los_cells()
            .into_iter()
            .map(|(s, e, p)| {
                let dist = self.los_distribution(s, e);
                let m: f64 = dist.iter().map(|(l, q)| l * q).sum();
                p * dist.iter().map(|(l, q)| q * (l - m).abs()).sum::<f64>()
            })
            .sum()
    }

    /// Variance of LOS, for the R² ceiling.
    pub fn los_variance(&self) -> f64 {
        let mean = self.expected_los();
        self.los_cells()
            .into_iter()
            .map(|(s, e, p)| {
                p * self
                    .los_distribution(s, e)
                    .iter()
                    .map(|(l, q)| q * (l - mean) * (l - mean))
                    .sum::<f64>()
            })
            .sum()
    }

    /// Accuracy of the Bayes-optimal referral classifier given age group,
    /// severity and recorded LOS.
    pub fn bayes_accuracy(&self) -> f64 {
        let ages = &self.spec.marginals[AGE].probs;
        let mut acc = 0.0;
        for (a, &pa) in ages.iter().enumerate() {
            for (s, e, p) in self.los_cells() {
                for (los, q) in self.los_distribution(s, e) {
                    let probs = self.spec.referral_probs(a, s, los);
                    let best = probs.iter().cloned().fold(f64::MIN, f64::max);
                    acc += pa * p * q * best;
                }
            }
        }
        acc
    }

    /// Marginal referral-type distribution.
    pub fn referral_distribution(&self) -> [f64; 3] {
        let ages = &self.spec.marginals[AGE].probs;
        let mut out = [0.0; 3];
        for (a, &pa) in ages.iter().enumerate() {
            for (s, e, p) in self.los_cells() {
                for (los, q) in self.los_distribution(s, e) {
                    let probs = self.spec.referral_probs(a, s, los);
                    for c in 0..3 {
                        out[c] += pa * p * q * probs[c];
                    }
                }
            }
        }
        out
    }
}
