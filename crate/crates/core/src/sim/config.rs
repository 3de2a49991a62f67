use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{HospitalModels, ReferralType, SyntheticCohortSpec};
use crate::stats::{RngStream, ShiftedLognormalParams, TriangularParams};

/// Queue discipline at the referral unit's processors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Discipline {
    Fifo,
    /// Earliest predicted discharge first; FIFO among equal keys.
    PriorityByPredictedDischarge,
}

/// A delay in days.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DelaySpec {
    ShiftedLognormal { shift: f64, mean: f64, sd: f64 },
    Triangular { min: f64, mode: f64, max: f64 },
    Fixed { days: f64 },
}

impl DelaySpec {
    pub fn shifted_lognormal(shift: f64, mean: f64, sd: f64) -> Self {
        DelaySpec::ShiftedLognormal { shift, mean, sd }
    }

    pub fn triangular(min: f64, mode: f64, max: f64) -> Self {
        DelaySpec::Triangular { min, mode, max }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DelaySpec::ShiftedLognormal { shift, mean, sd } => {
                ShiftedLognormalParams::new(shift, mean, sd).map(|_| ())
            }
            DelaySpec::Triangular { min, mode, max } => {
                TriangularParams::new(min, mode, max).map(|_| ())
            }
            DelaySpec::Fixed { days } if days >= 0.0 && days.is_finite() => Ok(()),
            DelaySpec::Fixed { days } => Err(Error::param(format!("fixed delay {days} < 0"))),
        }
    }

    /// Smallest value the delay can take.
    pub fn lower_bound(&self) -> f64 {
        match *self {
            DelaySpec::ShiftedLognormal {
                shift,
                sd: 0.0,
                mean,
            } => (shift + mean).max(0.0),
            DelaySpec::ShiftedLognormal { shift, .. } => shift.max(0.0),
            DelaySpec::Triangular { min, .. } => min,
            DelaySpec::Fixed { days } => days,
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match *self {
            DelaySpec::ShiftedLognormal { shift, mean, sd } => {
                ShiftedLognormalParams { shift, mean, sd }.transform(if sd == 0.0 {
                    0.0
                } else {
                    rng.standard_normal()
                })
            }
            DelaySpec::Triangular { min, mode, max } => {
                TriangularParams { min, mode, max }.quantile(rng.uniform())
            }
            DelaySpec::Fixed { days } => days,
        }
    }
}

/// Values keyed by referral type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerType<T> {
    pub snf: T,
    pub hhs: T,
    pub other: T,
}

impl<T: Copy> PerType<T> {
    pub fn new(snf: T, hhs: T, other: T) -> Self {
        PerType { snf, hhs, other }
    }

    pub fn get(&self, t: ReferralType) -> T {
        match t {
            ReferralType::Snf => self.snf,
            ReferralType::Hhs => self.hhs,
            ReferralType::Other => self.other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HospitalConfig {
    pub id: String,
    /// Expected referrals per day.
    pub arrival_rates: PerType<f64>,
    pub request_delay: DelaySpec,
    /// Target mean absolute LOS prediction error in oracle mode (days).
    pub prediction_mae: f64,
}

/// The referral unit's workflow steps, in the order cases traverse them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    InitialProcessing,
    InfoWait,
    SendToVendor,
    VendorDecision,
    SendAuthorization,
    AuthorizationProcessing,
    InsuranceDecision,
    Transportation,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::InitialProcessing,
        Stage::InfoWait,
        Stage::SendToVendor,
        Stage::VendorDecision,
        Stage::SendAuthorization,
        Stage::AuthorizationProcessing,
        Stage::InsuranceDecision,
        Stage::Transportation,
    ];

    /// Processing stages hold a processor; the rest are waits on other parties.
    pub fn uses_processor(self) -> bool {
        !matches!(
            self,
            Stage::InfoWait | Stage::VendorDecision | Stage::InsuranceDecision
        )
    }

    /// Durations of these stages are given in days, the rest in minutes.
    pub fn in_days(self) -> bool {
        matches!(self, Stage::VendorDecision | Stage::InsuranceDecision)
    }

    pub fn is_vendor_path(self) -> bool {
        !matches!(self, Stage::InitialProcessing | Stage::InfoWait)
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::InitialProcessing => "initial_processing",
            Stage::InfoWait => "info_wait",
            Stage::SendToVendor => "send_to_vendor",
            Stage::VendorDecision => "vendor_decision",
            Stage::SendAuthorization => "send_authorization",
            Stage::AuthorizationProcessing => "authorization_processing",
            Stage::InsuranceDecision => "insurance_decision",
            Stage::Transportation => "transportation",
        }
    }
}

/// Triangular stage durations, minutes except the two decision waits (days).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageTable {
    pub initial_processing: TriangularParams,
    pub info_wait: TriangularParams,
    pub send_to_vendor: TriangularParams,
    pub vendor_decision: TriangularParams,
    pub send_authorization: TriangularParams,
    pub authorization_processing: TriangularParams,
    pub insurance_decision: TriangularParams,
    pub transportation: TriangularParams,
}

impl Default for StageTable {
    fn default() -> Self {
        let t = |a, m, b| TriangularParams {
            min: a,
            mode: m,
            max: b,
        };
        StageTable {
            initial_processing: t(3.0, 8.0, 12.0),
            info_wait: t(5.0, 40.0, 120.0),
            send_to_vendor: t(10.0, 13.0, 15.0),
            vendor_decision: t(0.125, 0.5, 6.0),
            send_authorization: t(3.0, 4.0, 5.0),
            authorization_processing: t(15.0, 18.0, 20.0),
            insurance_decision: t(0.125, 0.85, 2.0),
            transportation: t(20.0, 25.0, 30.0),
        }
    }
}

impl StageTable {
    /// As configured, in the stage's own unit.
    pub fn raw(&self, stage: Stage) -> TriangularParams {
        match stage {
            Stage::InitialProcessing => self.initial_processing,
            Stage::InfoWait => self.info_wait,
            Stage::SendToVendor => self.send_to_vendor,
            Stage::VendorDecision => self.vendor_decision,
            Stage::SendAuthorization => self.send_authorization,
            Stage::AuthorizationProcessing => self.authorization_processing,
            Stage::InsuranceDecision => self.insurance_decision,
            Stage::Transportation => self.transportation,
        }
    }

    /// In days.
    pub fn days(&self, stage: Stage) -> TriangularParams {
        let raw = self.raw(stage);
        if stage.in_days() {
            raw
        } else {
            raw.minutes_to_days()
        }
    }

    /// Every triangular collapsed onto its mode.
    pub fn at_modes(&self) -> StageTable {
        let m = |p: TriangularParams| TriangularParams::point(p.mode);
        StageTable {
            initial_processing: m(self.initial_processing),
            info_wait: m(self.info_wait),
            send_to_vendor: m(self.send_to_vendor),
            vendor_decision: m(self.vendor_decision),
            send_authorization: m(self.send_authorization),
            authorization_processing: m(self.authorization_processing),
            insurance_decision: m(self.insurance_decision),
            transportation: m(self.transportation),
        }
    }
}

/// Distribution of true length of stay: lognormal with the given variate
/// mean and sd, floored at `min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LosTruth {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
}

impl Default for LosTruth {
    fn default() -> Self {
        LosTruth {
            mean: 5.0,
            sd: 3.0,
            min: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrivalMode {
    /// Poisson daily counts with the configured mean.
    #[default]
    Poisson,
    /// Exactly the rate (rounded) every day.
    Deterministic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PredictionMode {
    /// Predicted LOS = true LOS + Normal(0, mae * sqrt(pi/2)).
    Oracle {},
    /// Cases carry synthetic patients; LOS is predicted by trained forests.
    Model { model_dir: PathBuf },
}

/// Trained per-hospital models plus the cohort spec that generates the
/// patients they are applied to.
#[derive(Debug, Clone)]
pub struct PatientModelSource {
    pub cohort: SyntheticCohortSpec,
    pub models: std::collections::BTreeMap<String, HospitalModels>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub horizon_days: u32,
    /// Cases admitted before this day run but are left out of the metrics.
    pub burn_in_days: u32,
    pub hospitals: Vec<HospitalConfig>,
    pub stages: StageTable,
    pub info_wait_probability: f64,
    pub mco_capacity: usize,
    pub discipline: Discipline,
    pub arrivals: ArrivalMode,
    pub los_truth: LosTruth,
    pub prediction: PredictionMode,
    /// Whether each referral type goes through the vendor, authorization,
    /// insurance and transportation steps.
    pub vendor_route: PerType<bool>,
    pub seed: u64,
    #[serde(skip)]
    pub patient_models: Option<Arc<PatientModelSource>>,
}

pub const DEFAULT_HORIZON_DAYS: u32 = 30;
pub const DEFAULT_MCO_CAPACITY: usize = 10;
pub const DEFAULT_INFO_WAIT_PROBABILITY: f64 = 0.2;
pub const DEFAULT_REPLICATIONS: usize = 100;

impl PartialEq for ScenarioConfig {
    fn eq(&self, other: &Self) -> bool {
        self.horizon_days == other.horizon_days
            && self.burn_in_days == other.burn_in_days
            && self.hospitals == other.hospitals
            && self.stages == other.stages
            && self.info_wait_probability == other.info_wait_probability
            && self.mco_capacity == other.mco_capacity
            && self.discipline == other.discipline
            && self.arrivals == other.arrivals
            && self.los_truth == other.los_truth
            && self.prediction == other.prediction
            && self.vendor_route == other.vendor_route
            && self.seed == other.seed
    }
}

impl ScenarioConfig {
    /// Current process: historical hospital request delays, FIFO queue.
    pub fn baseline() -> Self {
        let hospital =
            |id: &str, rates: (f64, f64, f64), delay: DelaySpec, mae: f64| HospitalConfig {
                id: id.to_string(),
                arrival_rates: PerType::new(rates.0, rates.1, rates.2),
                request_delay: delay,
                prediction_mae: mae,
            };
        ScenarioConfig {
            horizon_days: DEFAULT_HORIZON_DAYS,
            burn_in_days: 0,
            hospitals: vec![
                hospital(
                    "H1",
                    (20.0, 40.0, 10.0),
                    DelaySpec::shifted_lognormal(-0.5, 6.21, 4.72),
                    1.90,
                ),
                hospital(
                    "H2",
                    (30.0, 40.0, 10.0),
                    DelaySpec::shifted_lognormal(-0.5, 6.59, 5.55),
                    2.35,
                ),
                hospital(
                    "H3",
                    (30.0, 20.0, 10.0),
                    DelaySpec::shifted_lognormal(-0.5, 5.25, 5.29),
                    2.52,
                ),
            ],
            stages: StageTable::default(),
            info_wait_probability: DEFAULT_INFO_WAIT_PROBABILITY,
            mco_capacity: DEFAULT_MCO_CAPACITY,
            discipline: Discipline::Fifo,
            arrivals: ArrivalMode::Poisson,
            los_truth: LosTruth::default(),
            prediction: PredictionMode::Oracle {},
            vendor_route: PerType::new(true, true, true),
            seed: 42,
            patient_models: None,
        }
    }

    /// Predicted discharge known at admission: early requests and a
    /// priority queue keyed on predicted discharge.
    pub fn guided() -> Self {
        let mut c = Self::baseline();
        for h in &mut c.hospitals {
            h.request_delay = DelaySpec::triangular(0.5, 1.0, 2.0);
        }
        c.discipline = Discipline::PriorityByPredictedDischarge;
        c
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_params()?;
        if matches!(self.prediction, PredictionMode::Model { .. }) {
            let Some(src) = &self.patient_models else {
                return Err(Error::Config(
                    "model prediction mode needs loaded models".into(),
                ));
            };
            for h in &self.hospitals {
                if !src.models.contains_key(&h.id) {
                    return Err(Error::Config(format!(
                        "no models loaded for hospital {}",
                        h.id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Everything [`validate`](Self::validate) checks except that models
    /// are loaded.
    pub fn validate_params(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.hospitals.is_empty() {
            return bad("at least one hospital is required".into());
        }
        for h in &self.hospitals {
            for t in ReferralType::ALL {
                let r = h.arrival_rates.get(t);
                if !(r >= 0.0) || !r.is_finite() {
                    return bad(format!("{}: arrival rate {r} for {t}", h.id));
                }
            }
            h.request_delay
                .validate()
                .map_err(|e| Error::Config(format!("{}: request delay: {e}", h.id)))?;
            if !(h.prediction_mae >= 0.0) || !h.prediction_mae.is_finite() {
                return bad(format!("{}: prediction_mae must be >= 0", h.id));
            }
        }
        for s in Stage::ALL {
            self.stages
                .raw(s)
                .validate()
                .map_err(|e| Error::Config(format!("stage {}: {e}", s.name())))?;
            if self.stages.raw(s).min < 0.0 {
                return bad(format!("stage {} has negative durations", s.name()));
            }
        }
        if !(0.0..=1.0).contains(&self.info_wait_probability) {
            return bad("info_wait_probability must lie in [0, 1]".into());
        }
        if self.mco_capacity == 0 {
            return bad("mco_capacity must be at least 1".into());
        }
        let l = self.los_truth;
        if !(l.mean > 0.0 && l.sd >= 0.0 && l.min > 0.0) {
            return bad("los_truth needs mean > 0, sd >= 0, min > 0".into());
        }
        Ok(())
    }

    pub fn total_daily_rate(&self) -> f64 {
        self.hospitals
            .iter()
            .map(|h| {
                ReferralType::ALL
                    .iter()
                    .map(|&t| h.arrival_rates.get(t))
                    .sum::<f64>()
            })
            .sum()
    }

    /// Expected processor-days of work arriving per day over the capacity.
    pub fn offered_utilization(&self) -> f64 {
        let per_case: f64 = Stage::ALL
            .iter()
            .filter(|s| s.uses_processor())
            .map(|&s| self.stages.days(s).mean())
            .sum();
        self.total_daily_rate() * per_case / self.mco_capacity as f64
    }
}
