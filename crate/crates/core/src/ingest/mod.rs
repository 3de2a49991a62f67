//! Discharge tables: the column schema, categorical codebooks, encoding into
//! learner datasets, synthetic cohorts with planted ground truth, and the
//! demand forecast built from per-patient predictions.

mod forecast;
mod records;
mod synth;

pub use forecast::{
    forecast_demand, round_los_days, DemandCell, DemandForecast, HospitalModels, PatientForecast,
    DEFAULT_FORECAST_HORIZON,
};
pub use records::{
    decode_features, encode, encode_features, load_discharge_table, write_discharge_table,
    Codebook, CodebookMode, DispositionMap, FeatureEncoding, LoadedTable, PatientRecord,
    ReferralType, ADMISSION_COLUMN, DISPOSITION_COLUMN, FEATURE_COLUMNS, HOSPITAL_COLUMN,
    LOS_COLUMN,
};
pub use synth::{generate_synthetic_cohort, CohortOracle, FeatureMarginal, SyntheticCohortSpec};
