//! Ingestion, cleaning, scaling, windowing and scoring of hourly series.

mod corr;
mod lags;
mod metrics;
mod scale;
mod series;
pub mod synth;

pub use corr::{pearson_corr, CorrMatrix};
pub use lags::{lag_feature_names, make_lag_matrix, LagMatrix, DEFAULT_WINDOW};
pub use metrics::{score, Metrics};
pub use scale::{minmax_scale, ScalerParams};
pub use series::{
    format_timestamp, load_series, parse_timestamp, preprocess, IngestWarning, LoadedSeries,
    PreprocessOptions, TimeSeries,
};
