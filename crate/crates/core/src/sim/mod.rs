//! Discrete-event simulation of the hospital-to-MCO referral pipeline.

pub mod calendar;
pub mod config;
pub mod engine;
pub mod metrics;
pub mod validate;

pub use calendar::EventCalendar;
pub use config::{
    ArrivalMode, DelaySpec, Discipline, HospitalConfig, LosTruth, PatientModelSource, PerType,
    PredictionMode, ScenarioConfig, Stage, StageTable, DEFAULT_HORIZON_DAYS,
    DEFAULT_INFO_WAIT_PROBABILITY, DEFAULT_MCO_CAPACITY, DEFAULT_REPLICATIONS,
};
pub use engine::{
    compute_case_metrics, replication_seed, run_experiment, run_experiment_with_cases,
    run_replication, run_replication_observed, AuditTrace, CaseMetrics, NoObserver, ReferralCase,
    Replication, SimObserver,
};
pub use metrics::{write_case_log, write_metrics_csv, GroupMetrics, ReplicationMetrics, OVERALL};
pub use validate::{
    read_history, validate_against_history, validate_with_bins, DensityBin, ValidationReport,
    DEFAULT_DENSITY_BINS,
};
