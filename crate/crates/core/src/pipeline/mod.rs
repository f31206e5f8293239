//! Regression stage: feature selection, PCA, linear models,
//! cross-validation, metrics, and the synthetic benchmark driver.

pub mod benchmark;
pub mod cv;
pub mod linear;
pub mod metrics;
pub mod pca;
pub mod select;

pub use benchmark::{run_synthetic_benchmark, BenchmarkConfig, RegressionReport, ReportRow};
pub use cv::{cross_validate, CvResult, CvScheme, ModelSpec, Regressor};
pub use linear::{lasso_fit, ols_fit, LassoFit, LinearModel};
pub use metrics::{metrics, Metrics};
pub use pca::{pca_fit, Pca};
pub use select::select_k_best;
