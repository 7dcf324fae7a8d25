//! Run reports, charts and the output manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::evaluate::{evaluate, load_dataset, write_comparison_csv, write_json, Evaluation, FittedModels};
use super::svg::{line_chart, Line};
use crate::arima::fit_arima;
use crate::data::{Metrics, TimeSeries};
use crate::error::{Error, Result};
use crate::explain::{shap_report, FeatureImportance, LstmForecaster, OneStepForecaster, SurrogateKind};
use crate::forecast::ModelKind;
use crate::ga::{run_steady_state, run_worst_replacement, BalanceResult};
use crate::seasonal::fit_st;

/// Figures with no defined formula; listed so readers see they were skipped.
pub const UNREPORTED_METRICS: [&str; 2] = ["energy savings", "cost reduction"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub model: ModelKind,
    pub mae: f64,
    pub rmse: f64,
}

/// Test-span predictions next to the observed values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastVsActual {
    pub model: ModelKind,
    pub start: NaiveDateTime,
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Steady,
    Worst,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Steady => "steady",
            Strategy::Worst => "worst",
        }
    }

    pub fn run(&self, forecast: &[f64], cfg: &crate::ga::GaConfig) -> Result<BalanceResult> {
        match self {
            Strategy::Steady => run_steady_state(forecast, cfg),
            Strategy::Worst => run_worst_replacement(forecast, cfg),
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "steady" => Ok(Strategy::Steady),
            "worst" => Ok(Strategy::Worst),
            other => Err(Error::invalid(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceSummary {
    pub strategy: Strategy,
    pub source_model: ModelKind,
    pub genes: usize,
    pub generations: usize,
    pub initial_best: f64,
    pub best_fitness: f64,
    /// Share of the initial best deviation removed by the search.
    pub improvement: f64,
    pub mean_abs_deviation_kw: f64,
    pub forecast: Vec<f64>,
    pub allocation: Vec<f64>,
}

impl BalanceSummary {
    pub fn new(strategy: Strategy, source_model: ModelKind, forecast: &[f64], r: &BalanceResult) -> Self {
        let improvement = if r.initial_best != 0.0 { (r.best_fitness - r.initial_best) / r.initial_best.abs() } else { 0.0 };
        Self {
            strategy,
            source_model,
            genes: r.best_solution.len(),
            generations: r.fitness_history.len(),
            initial_best: r.initial_best,
            best_fitness: r.best_fitness,
            improvement,
            mean_abs_deviation_kw: r.mean_abs_deviation(),
            forecast: forecast.to_vec(),
            allocation: r.best_solution.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapSummary {
    pub model: ModelKind,
    pub surrogate: SurrogateKind,
    pub base_value: f64,
    pub holdout_r2: f64,
    pub max_efficiency_gap: f64,
    pub warning: Option<String>,
    pub features: Vec<FeatureImportance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Everything one pipeline run produced.
///
/// Timings are kept out of `report.json` so identical runs serialize to
/// identical bytes; they go to the manifest instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: Option<u64>,
    pub config: Option<PipelineConfig>,
    pub stages: Vec<String>,
    pub metrics: Vec<ModelMetrics>,
    pub forecasts: Vec<ForecastVsActual>,
    pub balance: Vec<BalanceSummary>,
    pub shap: Vec<ShapSummary>,
    pub unreported_metrics: Vec<String>,
    #[serde(skip)]
    pub timings: Vec<StageTiming>,
}

impl Default for RunReport {
    fn default() -> Self {
        Self {
            seed: None,
            config: None,
            stages: Vec::new(),
            metrics: Vec::new(),
            forecasts: Vec::new(),
            balance: Vec::new(),
            shap: Vec::new(),
            unreported_metrics: UNREPORTED_METRICS.iter().map(|s| s.to_string()).collect(),
            timings: Vec::new(),
        }
    }
}

impl RunReport {
    fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f().map_err(|e| match e {
            e @ Error::Stage { .. } => e,
            e => Error::Stage { stage: stage.to_string(), source: Box::new(e) },
        })?;
        self.stages.push(stage.to_string());
        self.timings.push(StageTiming { stage: stage.to_string(), seconds: t.elapsed().as_secs_f64() });
        Ok(out)
    }

    pub fn add_evaluation(&mut self, eval: &Evaluation) {
        for m in &eval.models {
            self.metrics.push(ModelMetrics { model: m.model, mae: m.metrics.mae, rmse: m.metrics.rmse });
            self.forecasts.push(ForecastVsActual {
                model: m.model,
                start: eval.test_start,
                actual: eval.actual.clone(),
                predicted: m.predictions.clone(),
            });
        }
    }
}

/// Stored by `evaluate` so later stages can reuse its models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationFile {
    pub config: PipelineConfig,
    pub evaluation: Evaluation,
}

pub const EVALUATION_FILE: &str = "evaluation.json";
pub const MODELS_DIR: &str = "models";

/// Run `evaluate` and persist its outputs under the configured directory.
pub fn run_evaluate(cfg: &PipelineConfig) -> Result<(Evaluation, FittedModels, RunReport)> {
    let mut report = RunReport { seed: Some(cfg.seed), config: Some(cfg.clone()), ..Default::default() };
    let series = report.timed("ingest", || load_dataset(cfg))?;
    let (eval, models) = report.timed("evaluate", || evaluate(&series, cfg))?;
    report.add_evaluation(&eval);
    save_evaluation(cfg, &eval, &models)?;
    eval.write_comparison_csv(cfg.output_dir.join("comparison.csv"))?;
    Ok((eval, models, report))
}

fn save_evaluation(cfg: &PipelineConfig, eval: &Evaluation, models: &FittedModels) -> Result<()> {
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_json(&EvaluationFile { config: cfg.clone(), evaluation: eval.clone() }, dir.join(EVALUATION_FILE))?;
    models.save(dir.join(MODELS_DIR))
}

/// Models and scores from an earlier `evaluate` with the same configuration.
pub fn load_evaluation(cfg: &PipelineConfig) -> Result<Option<(Evaluation, FittedModels)>> {
    let path = cfg.output_dir.join(EVALUATION_FILE);
    if !path.is_file() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let stored: EvaluationFile = serde_json::from_str(&text)?;
    if &stored.config != cfg {
        return Ok(None);
    }
    let dir = cfg.output_dir.join(MODELS_DIR);
    let read = |name: &str| -> Result<String> {
        let p = dir.join(name);
        std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))
    };
    let models = FittedModels {
        arima: serde_json::from_str(&read("arima.json")?)?,
        seasonal: serde_json::from_str(&read("seasonal.json")?)?,
        scaler: serde_json::from_str(&read("lstm_scaler.json")?)?,
        lstm: crate::lstm::load_json(dir.join("lstm.json"))?,
    };
    Ok(Some((stored.evaluation, models)))
}

fn balance_stage(series: &TimeSeries, cfg: &PipelineConfig) -> Result<Vec<BalanceSummary>> {
    let arima = fit_arima(series, cfg.arima.order, cfg.arima.budget)?;
    let arima_fc = arima.forecast(cfg.arima.horizon)?;
    let steady = Strategy::Steady.run(&arima_fc.values, &cfg.ga)?;

    let st = fit_st(series, &cfg.seasonal.model)?;
    let st_fc = st.forecast(cfg.seasonal.horizon)?.take(cfg.seasonal.balance_hours);
    let worst = Strategy::Worst.run(&st_fc.values, &cfg.ga)?;
    Ok(vec![
        BalanceSummary::new(Strategy::Steady, ModelKind::Arima, &arima_fc.values, &steady),
        BalanceSummary::new(Strategy::Worst, ModelKind::SeasonalTrend, &st_fc.values, &worst),
    ])
}

pub fn shap_summary(forecaster: &dyn OneStepForecaster, series: &TimeSeries, cfg: &PipelineConfig) -> Result<ShapSummary> {
    let r = shap_report(forecaster, series, &cfg.explain.shap)?;
    Ok(ShapSummary {
        model: r.model,
        surrogate: r.surrogate,
        base_value: r.base_value,
        holdout_r2: r.holdout_r2,
        max_efficiency_gap: r.max_efficiency_gap,
        warning: r.warning,
        features: r.mean_abs,
    })
}

/// Evaluation (reused from disk when possible), balancing of the ARIMA and
/// seasonal-trend forecasts, and attribution for every model.
pub fn run_report(cfg: &PipelineConfig) -> Result<RunReport> {
    let mut report = RunReport { seed: Some(cfg.seed), config: Some(cfg.clone()), ..Default::default() };
    let series = report.timed("ingest", || load_dataset(cfg))?;
    // Listed as a stage either way so the report does not depend on reuse.
    let (eval, models) = report.timed("evaluate", || match load_evaluation(cfg)? {
        Some(found) => Ok(found),
        None => {
            let (eval, models) = evaluate(&series, cfg)?;
            save_evaluation(cfg, &eval, &models)?;
            Ok((eval, models))
        }
    })?;
    report.add_evaluation(&eval);
    report.balance = report.timed("balance", || balance_stage(&series, cfg))?;
    if cfg.explain.enabled {
        let lstm = LstmForecaster { network: &models.lstm, scaler: models.scaler };
        let forecasters: [&dyn OneStepForecaster; 3] = [&models.arima, &models.seasonal, &lstm];
        let mut shap = Vec::new();
        for f in forecasters {
            let stage = format!("explain-{}", f.kind());
            shap.push(report.timed(&stage, || shap_summary(f, &series, cfg))?);
        }
        report.shap = shap;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub generated_at: String,
    pub files: Vec<ManifestEntry>,
    pub timings: Vec<StageTiming>,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Write `report.json`, `comparison.csv`, one SVG per chart and
/// `manifest.json` into `out_dir`.
pub fn emit_report(results: &RunReport, out_dir: impl AsRef<Path>) -> Result<Manifest> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written: Vec<PathBuf> = Vec::new();

    let p = dir.join("report.json");
    write_json(results, &p)?;
    written.push(p);

    let p = dir.join("comparison.csv");
    write_comparison_csv(results.metrics.iter().map(|m| (m.model, Metrics { mae: m.mae, rmse: m.rmse })), &p)?;
    written.push(p);

    for f in &results.forecasts {
        let p = dir.join(format!("forecast_vs_actual_{}.svg", f.model));
        let title = format!("{} forecast vs actual", f.model);
        let svg = line_chart(
            &title,
            "hours into test span",
            "kW",
            &[Line { label: "actual", values: &f.actual }, Line { label: "forecast", values: &f.predicted }],
        );
        write_text(&p, &svg)?;
        written.push(p);
    }
    for b in &results.balance {
        let p = dir.join(format!("forecast_vs_allocation_{}.svg", b.strategy.as_str()));
        let title = format!("{} forecast vs {} allocation", b.source_model, b.strategy.as_str());
        let svg = line_chart(
            &title,
            "hour",
            "kW",
            &[Line { label: "forecast", values: &b.forecast }, Line { label: "allocation", values: &b.allocation }],
        );
        write_text(&p, &svg)?;
        written.push(p);
    }

    let mut files = Vec::new();
    for p in &written {
        let bytes = std::fs::metadata(p).map_err(|e| Error::io(p, e))?.len();
        let file = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        files.push(ManifestEntry { file, bytes });
    }
    let manifest = Manifest {
        generated_at: chrono::Utc::now().to_rfc3339(),
        files,
        timings: results.timings.clone(),
    };
    write_json(&manifest, dir.join("manifest.json"))?;
    Ok(manifest)
}
