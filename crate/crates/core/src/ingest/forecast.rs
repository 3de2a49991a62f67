use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::records::{encode_features, PatientRecord, ReferralType};
use crate::learn::{ForestModel, Task};
use crate::util::{csv_bytes, write_atomic};

/// One month of demand.
pub const DEFAULT_FORECAST_HORIZON: u32 = 30;

/// A hospital's LOS regressor and referral-type classifier.
#[derive(Debug, Clone)]
pub struct HospitalModels {
    pub regressor: ForestModel,
    pub classifier: ForestModel,
}

impl HospitalModels {
    pub fn new(regressor: ForestModel, classifier: ForestModel) -> Result<Self> {
        if regressor.task() != Task::Regression || classifier.task() != Task::Classification {
            return Err(Error::Forecast(
                "expected one regression and one classification model".into(),
            ));
        }
        if regressor.codebook().is_none() {
            return Err(Error::Forecast("regressor carries no codebook".into()));
        }
        Ok(HospitalModels {
            regressor,
            classifier,
        })
    }

    /// Predicted LOS in days (unrounded) for one record.
    pub fn predict_los(&self, record: &PatientRecord) -> Result<f64> {
        let cb = self
            .regressor
            .codebook()
            .ok_or_else(|| Error::Forecast("regressor carries no codebook".into()))?;
        self.regressor.predict_value(&encode_features(record, cb)?)
    }

    /// Referral type with `los_days` supplied as the LOS feature.
    pub fn predict_referral(&self, record: &PatientRecord, los_days: f64) -> Result<ReferralType> {
        let cb = self
            .classifier
            .codebook()
            .or(self.regressor.codebook())
            .ok_or_else(|| Error::Forecast("classifier carries no codebook".into()))?;
        let mut row = encode_features(record, cb)?;
        row.push(los_days);
        let (code, _) = self.classifier.predict_class(&row)?;
        ReferralType::from_code(code)
            .ok_or_else(|| Error::Forecast(format!("classifier emitted code {code}")))
    }
}

/// Whole days, half rounding up, at least one.
pub fn round_los_days(los: f64) -> f64 {
    (los + 0.5).floor().max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatientForecast {
    pub hospital_id: String,
    pub admission_day: f64,
    pub predicted_los: f64,
    pub predicted_discharge_day: f64,
    pub predicted_referral: ReferralType,
    /// Earlier predicted discharge means higher priority.
    pub priority_key: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct DemandCell {
    pub hospital_id: String,
    pub day_index: u32,
    pub referral: ReferralType,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemandForecast {
    pub horizon_days: u32,
    /// Every (hospital, day, type) cell in the horizon, zeros included.
    pub cells: Vec<DemandCell>,
    pub patients: Vec<PatientForecast>,
}

impl DemandForecast {
    pub fn total(&self) -> usize {
        self.cells.iter().map(|c| c.count).sum()
    }

    /// Cell counts recomputed from the per-patient list.
    pub fn recount(&self) -> BTreeMap<(String, u32, ReferralType), usize> {
        let mut counts = BTreeMap::new();
        for p in &self.patients {
            let day = p.predicted_discharge_day.floor();
            if day >= 0.0 && day < f64::from(self.horizon_days) {
                *counts
                    .entry((p.hospital_id.clone(), day as u32, p.predicted_referral))
                    .or_insert(0) += 1;
            }
        }
        counts
    }

    /// Columns `hospital,day_index,referral_type,count`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let bytes = csv_bytes(&["hospital", "day_index", "referral_type", "count"], |w| {
            for c in &self.cells {
                w.write_record([
                    c.hospital_id.clone(),
                    c.day_index.to_string(),
                    c.referral.label().to_string(),
                    c.count.to_string(),
                ])?;
            }
            Ok(())
        })?;
        write_atomic(path, &bytes)
    }
}

pub fn forecast_demand(
    records: &[PatientRecord],
    models: &BTreeMap<String, HospitalModels>,
    horizon_days: u32,
) -> Result<DemandForecast> {
    if horizon_days == 0 {
        return Err(Error::param("forecast horizon must be at least one day"));
    }
    let mut patients = Vec::with_capacity(records.len());
    for r in records {
        let m = models.get(&r.hospital_id).ok_or_else(|| {
            Error::Forecast(format!("no models for hospital `{}`", r.hospital_id))
        })?;
        let los = m.predict_los(r)?;
        let los_days = round_los_days(los);
        let referral = m.predict_referral(r, los_days)?;
        let discharge = r.admission_day + los_days;
        patients.push(PatientForecast {
            hospital_id: r.hospital_id.clone(),
            admission_day: r.admission_day,
            predicted_los: los,
            predicted_discharge_day: discharge,
            predicted_referral: referral,
            priority_key: discharge,
        });
    }
    let mut forecast = DemandForecast {
        horizon_days,
        cells: Vec::new(),
        patients,
    };
    let counts = forecast.recount();
    for hospital in models.keys() {
        for day in 0..horizon_days {
            for t in ReferralType::ALL {
                forecast.cells.push(DemandCell {
                    hospital_id: hospital.clone(),
                    day_index: day,
                    referral: t,
                    count: counts
                        .get(&(hospital.clone(), day, t))
                        .copied()
                        .unwrap_or(0),
                });
            }
        }
    }
    Ok(forecast)
}
