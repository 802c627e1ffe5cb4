//! Predictive evaluation: posterior prediction, predictive checks, OLS baselines and
//! cross-validation.

pub mod cv;
pub mod ols;
pub mod ppc;
pub mod predict;

pub use cv::{
    fold_assignment, kfold_cv, kfold_cv_with_folds, many_large_knots, remap_failure_cells, subgroup_mspe,
    BayesianModel, CvReport, Metric, ModelCv, Prediction, Predictor, Regression1, Regression2,
};
pub use ols::{ols_fit, ols_predict_interval, OlsFit};
pub use ppc::{posterior_predictive_check, PpcReport, QuantityCheck, TestQuantity};
pub use predict::{predict_strength, PredictiveSummary};
