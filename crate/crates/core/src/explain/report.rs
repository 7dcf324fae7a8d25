//! Surrogate-based attribution reports for fitted forecasters.

use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ensemble::{fit_forest, fit_gbt, ForestParams, GbtParams};
use super::shap::{kernel_shap, KernelShapSettings};
use crate::arima::ArimaModel;
use crate::data::{lag_feature_names, make_lag_matrix, LagMatrix, ScalerParams, TimeSeries, DEFAULT_WINDOW};
use crate::error::{Error, Result};
use crate::forecast::ModelKind;
use crate::lstm::LstmNetwork;
use crate::seasonal::StModel;

/// A model whose one-step predictions can be imitated by a surrogate.
pub trait OneStepForecaster {
    fn kind(&self) -> ModelKind;

    /// Prediction for the target of every lag-matrix row built from `series`.
    fn one_step(&self, series: &TimeSeries, lags: &LagMatrix) -> Result<Vec<f64>>;

    /// Extra named features appended after the lags, one row per lag row.
    fn extra_features(&self, _series: &TimeSeries, _lags: &LagMatrix) -> Result<Option<(Vec<String>, Vec<Vec<f64>>)>> {
        Ok(None)
    }
}

impl OneStepForecaster for ArimaModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Arima
    }

    fn one_step(&self, series: &TimeSeries, lags: &LagMatrix) -> Result<Vec<f64>> {
        let preds = self.one_step_predictions(series.values())?;
        (0..lags.len())
            .map(|r| preds[r + lags.window].ok_or_else(|| Error::TooShort { needed: r + lags.window + 1, got: series.len() }))
            .collect()
    }
}

fn target_times(series: &TimeSeries, lags: &LagMatrix) -> Vec<chrono::NaiveDateTime> {
    series.timestamps()[lags.window..lags.window + lags.len()].to_vec()
}

impl OneStepForecaster for StModel {
    fn kind(&self) -> ModelKind {
        ModelKind::SeasonalTrend
    }

    fn one_step(&self, series: &TimeSeries, lags: &LagMatrix) -> Result<Vec<f64>> {
        Ok(self.predict_many(&target_times(series, lags)))
    }

    fn extra_features(&self, series: &TimeSeries, lags: &LagMatrix) -> Result<Option<(Vec<String>, Vec<Vec<f64>>)>> {
        let rows = target_times(series, lags)
            .into_iter()
            .map(|t| {
                let c = self.components(t);
                vec![c.trend, c.daily, c.weekly]
            })
            .collect();
        Ok(Some((vec!["trend".into(), "daily".into(), "weekly".into()], rows)))
    }
}

/// A trained network with the scaler of its training data.
pub struct LstmForecaster<'a> {
    pub network: &'a LstmNetwork,
    pub scaler: ScalerParams,
}

impl OneStepForecaster for LstmForecaster<'_> {
    fn kind(&self) -> ModelKind {
        ModelKind::Lstm
    }

    fn one_step(&self, _series: &TimeSeries, lags: &LagMatrix) -> Result<Vec<f64>> {
        let scaled: Vec<Vec<f64>> = lags.rows.iter().map(|r| self.scaler.transform_all(r)).collect();
        Ok(self.scaler.inverse_all(&self.network.predict_rows(&scaled)?))
    }
}

/// Any function of the lag row, e.g. a persistence baseline.
pub struct LagFunction<F>(pub F);

impl<F: Fn(&[f64]) -> f64> OneStepForecaster for LagFunction<F> {
    fn kind(&self) -> ModelKind {
        ModelKind::External
    }

    fn one_step(&self, _series: &TimeSeries, lags: &LagMatrix) -> Result<Vec<f64>> {
        Ok(lags.rows.iter().map(|r| (self.0)(r)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurrogateKind {
    Forest,
    Boosted,
}

impl SurrogateKind {
    /// Boosted trees for the LSTM, forests for everything else.
    pub fn for_model(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Lstm => Self::Boosted,
            _ => Self::Forest,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapConfig {
    pub n_instances: usize,
    pub n_background: usize,
    /// Share of rows held out to score the surrogate.
    pub holdout_fraction: f64,
    /// Holdout R^2 below this attaches a warning.
    pub min_r2: f64,
    pub kernel: KernelShapSettings,
    pub forest: ForestParams,
    pub boosted: GbtParams,
    pub seed: u64,
}

impl Default for ShapConfig {
    fn default() -> Self {
        Self {
            n_instances: 100,
            n_background: 100,
            holdout_fraction: 0.2,
            min_r2: 0.7,
            kernel: KernelShapSettings::default(),
            forest: ForestParams::default(),
            boosted: GbtParams::default(),
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub name: String,
    pub mean_abs_shap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapReport {
    pub model: ModelKind,
    pub surrogate: SurrogateKind,
    /// Column order of the attribution matrix.
    pub feature_names: Vec<String>,
    pub base_value: f64,
    /// Lag-matrix rows that were explained.
    pub instance_rows: Vec<usize>,
    /// Attributions in the forecaster's units, one row per instance.
    pub per_instance_values: Vec<Vec<f64>>,
    /// Features ranked by mean |attribution|, largest first.
    pub mean_abs: Vec<FeatureImportance>,
    pub holdout_r2: f64,
    /// Largest |base + sum(phi) - surrogate(x)| over the instances.
    pub max_efficiency_gap: f64,
    pub warning: Option<String>,
}

#[derive(Serialize)]
struct ShapSummary<'a> {
    model: ModelKind,
    surrogate: SurrogateKind,
    base_value: f64,
    holdout_r2: f64,
    warning: &'a Option<String>,
    features: &'a [FeatureImportance],
}

impl ShapReport {
    /// Share of the total mean |attribution| held by `name`.
    pub fn share(&self, name: &str) -> f64 {
        let total: f64 = self.mean_abs.iter().map(|f| f.mean_abs_shap).sum();
        let mine = self.mean_abs.iter().find(|f| f.name == name).map_or(0.0, |f| f.mean_abs_shap);
        if total > 0.0 {
            mine / total
        } else {
            0.0
        }
    }

    pub fn top(&self, n: usize) -> &[FeatureImportance] {
        &self.mean_abs[..n.min(self.mean_abs.len())]
    }

    /// JSON `{base_value, features: [{name, mean_abs_shap}], ...}`.
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let summary = ShapSummary {
            model: self.model,
            surrogate: self.surrogate,
            base_value: self.base_value,
            holdout_r2: self.holdout_r2,
            warning: &self.warning,
            features: &self.mean_abs,
        };
        let text = serde_json::to_string_pretty(&summary)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// CSV with one row per explained instance and one column per feature.
    pub fn write_instances_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["row".to_string()];
        header.extend(self.feature_names.iter().cloned());
        w.write_record(&header)?;
        for (row, vals) in self.instance_rows.iter().zip(&self.per_instance_values) {
            let mut rec = vec![row.to_string()];
            rec.extend(vals.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn r_squared(pred: &[f64], actual: &[f64]) -> f64 {
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean).powi(2)).sum();
    let ss_res: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a).powi(2)).sum();
    if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        1.0 - ss_res / ss_tot
    }
}

/// Fit a surrogate to the forecaster's one-step predictions on the 24-lag
/// matrix of `series` and rank features by mean |kernel SHAP|.
pub fn shap_report(forecaster: &dyn OneStepForecaster, series: &TimeSeries, cfg: &ShapConfig) -> Result<ShapReport> {
    shap_report_with(forecaster, SurrogateKind::for_model(forecaster.kind()), series, cfg)
}

pub fn shap_report_with(
    forecaster: &dyn OneStepForecaster,
    surrogate: SurrogateKind,
    series: &TimeSeries,
    cfg: &ShapConfig,
) -> Result<ShapReport> {
    if !(cfg.holdout_fraction > 0.0 && cfg.holdout_fraction < 1.0) {
        return Err(Error::config("holdout_fraction", "must lie in (0, 1)"));
    }
    if cfg.n_instances == 0 || cfg.n_background == 0 {
        return Err(Error::config("n_instances", "instance and background counts must be positive"));
    }
    let lags = make_lag_matrix(series, DEFAULT_WINDOW)?;
    let targets = forecaster.one_step(series, &lags)?;
    let mut names = lag_feature_names(DEFAULT_WINDOW);
    let mut rows = lags.rows.clone();
    if let Some((extra_names, extra)) = forecaster.extra_features(series, &lags)? {
        names.extend(extra_names);
        for (r, e) in rows.iter_mut().zip(extra) {
            r.extend(e);
        }
    }
    let n = rows.len();
    let n_hold = ((n as f64 * cfg.holdout_fraction).round() as usize).clamp(1, n.saturating_sub(2));
    if n < 3 {
        return Err(Error::TooShort { needed: DEFAULT_WINDOW + 3, got: series.len() });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let (held, fit_rows) = order.split_at(n_hold);
    let mut fit_rows = fit_rows.to_vec();
    fit_rows.sort_unstable();
    let x_fit: Vec<Vec<f64>> = fit_rows.iter().map(|&i| rows[i].clone()).collect();
    let y_fit: Vec<f64> = fit_rows.iter().map(|&i| targets[i]).collect();

    let model: Box<dyn Fn(&[f64]) -> f64 + Sync> = match surrogate {
        SurrogateKind::Forest => {
            let f = fit_forest(&x_fit, &y_fit, &cfg.forest, cfg.seed)?;
            Box::new(move |x| f.predict(x))
        }
        SurrogateKind::Boosted => {
            let g = fit_gbt(&x_fit, &y_fit, &cfg.boosted)?;
            Box::new(move |x| g.predict(x))
        }
    };
    let held_pred: Vec<f64> = held.iter().map(|&i| model(&rows[i])).collect();
    let held_actual: Vec<f64> = held.iter().map(|&i| targets[i]).collect();
    let holdout_r2 = r_squared(&held_pred, &held_actual);
    let warning = (holdout_r2 < cfg.min_r2)
        .then(|| format!("surrogate holdout R^2 {holdout_r2:.3} is below {}", cfg.min_r2));

    let bg_idx = index::sample(&mut rng, x_fit.len(), cfg.n_background.min(x_fit.len())).into_vec();
    let background: Vec<Vec<f64>> = bg_idx.iter().map(|&i| x_fit[i].clone()).collect();
    let mut instance_rows = index::sample(&mut rng, n, cfg.n_instances.min(n)).into_vec();
    instance_rows.sort_unstable();

    let mut per_instance = Vec::with_capacity(instance_rows.len());
    let mut base_value = 0.0;
    let mut max_gap: f64 = 0.0;
    for &r in &instance_rows {
        let s = kernel_shap(&model, &rows[r], &background, &cfg.kernel)?;
        base_value = s.base_value;
        max_gap = max_gap.max(s.efficiency_gap());
        per_instance.push(s.values);
    }
    let m = names.len();
    let mut mean_abs: Vec<FeatureImportance> = (0..m)
        .map(|j| FeatureImportance {
            name: names[j].clone(),
            mean_abs_shap: per_instance.iter().map(|v| v[j].abs()).sum::<f64>() / per_instance.len() as f64,
        })
        .collect();
    // Stable sort keeps column order among equal magnitudes.
    mean_abs.sort_by(|a, b| b.mean_abs_shap.total_cmp(&a.mean_abs_shap));

    Ok(ShapReport {
        model: forecaster.kind(),
        surrogate,
        feature_names: names,
        base_value,
        instance_rows,
        per_instance_values: per_instance,
        mean_abs,
        holdout_r2,
        max_efficiency_gap: max_gap,
        warning,
    })
}
