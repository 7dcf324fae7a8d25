//! End-to-end runs: configuration, evaluation, balancing and reporting.

mod config;
mod evaluate;
mod report;
mod svg;

pub use config::{
    ArimaSection, ExplainSection, InputConfig, LstmSection, PipelineConfig, SeasonalSection, DEFAULT_SEED, SEED_ENV,
};
pub use evaluate::{evaluate, load_dataset, write_comparison_csv, Evaluation, FittedModels, ModelEvaluation};
pub use report::{
    emit_report, load_evaluation, run_evaluate, run_report, shap_summary, BalanceSummary, EvaluationFile,
    ForecastVsActual, Manifest, ManifestEntry, ModelMetrics, RunReport, ShapSummary, StageTiming, Strategy,
    EVALUATION_FILE, MODELS_DIR, UNREPORTED_METRICS,
};
pub use svg::{line_chart, Line};
