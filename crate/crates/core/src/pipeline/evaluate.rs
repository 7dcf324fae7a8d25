//! Shared train/test evaluation of the three forecasters.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use crate::arima::{fit_arima, ArimaModel};
use crate::data::{make_lag_matrix, minmax_scale, score, synth, Metrics, PreprocessOptions, ScalerParams, TimeSeries};
use crate::error::{Error, Result};
use crate::forecast::ModelKind;
use crate::lstm::{init_network, predict_multi, save_json, train, LstmNetwork};
use crate::seasonal::{fit_st, StModel};

/// Load the configured CSV, or generate the synthetic frame, and clean it.
pub fn load_dataset(cfg: &PipelineConfig) -> Result<TimeSeries> {
    let raw = match &cfg.input.path {
        Some(path) => crate::data::load_series(path, &cfg.input.timestamp_column, &cfg.input.value_column)?.series,
        None => synth::generate(&cfg.synthetic)?.total()?,
    };
    let opts = PreprocessOptions {
        forward_fill: cfg.input.forward_fill,
        outlier_3sigma: cfg.input.outlier_3sigma,
    };
    let clean = crate::data::preprocess(&raw, opts)?;
    clean.require_complete()?;
    Ok(clean)
}

/// Test-span scores and predictions of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEvaluation {
    pub model: ModelKind,
    pub metrics: Metrics,
    pub predictions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub train_len: usize,
    pub test_len: usize,
    pub horizon: usize,
    pub actual: Vec<f64>,
    pub test_start: chrono::NaiveDateTime,
    pub models: Vec<ModelEvaluation>,
    /// Per-epoch LSTM training MSE on the scaled training set.
    pub lstm_losses: Vec<f64>,
}

impl Evaluation {
    pub fn get(&self, model: ModelKind) -> Option<&ModelEvaluation> {
        self.models.iter().find(|m| m.model == model)
    }

    /// `model,mae,rmse`, one row per model.
    pub fn write_comparison_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_comparison_csv(self.models.iter().map(|m| (m.model, m.metrics)), path)
    }
}

pub fn write_comparison_csv(rows: impl IntoIterator<Item = (ModelKind, Metrics)>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["model", "mae", "rmse"])?;
    for (model, m) in rows {
        w.write_record([model.as_str().to_string(), m.mae.to_string(), m.rmse.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Fitted models from one evaluation.
#[derive(Debug, Clone)]
pub struct FittedModels {
    pub arima: ArimaModel,
    pub seasonal: StModel,
    pub lstm: LstmNetwork,
    pub scaler: ScalerParams,
}

impl FittedModels {
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_json(&self.arima, dir.join("arima.json"))?;
        write_json(&self.seasonal, dir.join("seasonal.json"))?;
        write_json(&self.scaler, dir.join("lstm_scaler.json"))?;
        save_json(&self.lstm, dir.join("lstm.json"))
    }
}

pub(crate) fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// Origins every `horizon` hours across the test span; each origin forecasts
/// up to `horizon` hours from the observed history before it.
fn rolling<F>(test_len: usize, horizon: usize, mut block: F) -> Result<Vec<f64>>
where
    F: FnMut(usize, usize) -> Result<Vec<f64>>,
{
    let mut out = Vec::with_capacity(test_len);
    let mut origin = 0;
    while origin < test_len {
        let h = horizon.min(test_len - origin);
        let values = block(origin, h)?;
        if values.len() != h {
            return Err(Error::LengthMismatch { left: values.len(), right: h });
        }
        out.extend(values);
        origin += h;
    }
    Ok(out)
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage { stage: name.to_string(), source: Box::new(e) })
}

/// Fit every model on the leading `split` share and score rolling
/// `eval_horizon`-hour forecasts over the rest.
pub fn evaluate(series: &TimeSeries, cfg: &PipelineConfig) -> Result<(Evaluation, FittedModels)> {
    let (train_s, test_s) = series.split(cfg.split)?;
    let n_train = train_s.len();
    let horizon = cfg.eval_horizon;
    let actual = test_s.values().to_vec();
    let history = |origin: usize| series.split_at(n_train + origin).map(|(h, _)| h);

    let arima = stage("arima", fit_arima(&train_s, cfg.arima.order, cfg.arima.budget))?;
    let arima_pred = stage(
        "arima",
        rolling(test_s.len(), horizon, |o, h| {
            let m = if o == 0 { arima.clone() } else { arima.condition_on(&history(o)?)? };
            Ok(m.forecast(h)?.values)
        }),
    )?;

    let seasonal = stage("seasonal", fit_st(&train_s, &cfg.seasonal.model))?;
    let st_pred = seasonal.predict_many(test_s.timestamps());

    let (scaled, scaler) = stage("lstm", minmax_scale(&train_s))?;
    let (lstm, lstm_losses) = stage("lstm", {
        let data = make_lag_matrix(&scaled, crate::data::DEFAULT_WINDOW)?;
        let net = init_network(&cfg.lstm.hyperparams, cfg.lstm.train.seed)?;
        train(&net, &data, &cfg.lstm.train).map(|o| (o.network, o.losses))
    })?;
    let lstm_pred = stage(
        "lstm",
        rolling(test_s.len(), horizon, |o, h| Ok(predict_multi(&lstm, &history(o)?, h, &scaler)?.values)),
    )?;

    let mut models = Vec::new();
    for (model, predictions) in [
        (ModelKind::Arima, arima_pred),
        (ModelKind::SeasonalTrend, st_pred),
        (ModelKind::Lstm, lstm_pred),
    ] {
        let metrics = score(&actual, &predictions)?;
        models.push(ModelEvaluation { model, metrics, predictions });
    }
    let eval = Evaluation {
        train_len: n_train,
        test_len: test_s.len(),
        horizon,
        actual,
        test_start: test_s.start(),
        models,
        lstm_losses,
    };
    Ok((eval, FittedModels { arima, seasonal, lstm, scaler }))
}
