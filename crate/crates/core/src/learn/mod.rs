//! Preprocessing, random forests, cross-validation and evaluation metrics.

pub mod cv;
pub mod dataset;
pub mod forest;
pub mod metrics;
pub mod outliers;
pub mod scale;
pub mod smote;
pub mod tree;
pub mod tune;

pub use cv::{
    fold_indices, k_fold_cv, train_preprocessed, CvOptions, CvReport, Trainer, DEFAULT_FOLDS,
};
pub use dataset::{Dataset, Target, Task};
pub use forest::{
    forest_predict_class, forest_predict_value, train_forest, ForestModel, ForestParams,
    MODEL_MAGIC,
};
pub use metrics::{
    auroc_ovr, classification_report, regression_report, ClassificationMetrics,
    ClassificationReport, RegressionMetrics, RegressionReport,
};
pub use outliers::{trim_outliers, TrimMask, DEFAULT_TRIM_THRESHOLD};
pub use scale::MinMaxScaler;
pub use smote::{smote_balance, DEFAULT_SMOTE_K};
pub use tune::{random_search_tune, SearchSpace, Trial, TuneResult, DEFAULT_TUNING_BUDGET};
