//! Attribution through tree surrogates and kernel SHAP.
//!
//! A forecaster's one-step predictions over the 24-lag matrix are imitated
//! by a random forest (or boosted trees for the LSTM) and the surrogate is
//! explained with model-agnostic kernel SHAP.

mod ensemble;
mod report;
mod shap;
mod tree;

pub use ensemble::{fit_forest, fit_gbt, BoostedSurrogate, ForestParams, ForestSurrogate, GbtParams};
pub use report::{
    shap_report, shap_report_with, FeatureImportance, LagFunction, LstmForecaster, OneStepForecaster, ShapConfig,
    ShapReport, SurrogateKind,
};
pub use shap::{kernel_shap, kernel_weight, KernelShapSettings, ShapValues, EXACT_MAX_FEATURES};
pub use tree::{best_split, fit_cart, fit_cart_rows, CartParams, Node, RegressionTree, SplitChoice};
