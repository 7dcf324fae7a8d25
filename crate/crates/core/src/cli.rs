//! Command-line front end.
//!
//! Exit status is 0 on success, 1 for configuration and stage failures and
//! 2 for usage errors. Failures print one line to stderr of the form
//! `error[<kind>]: <message>`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::data::{
    format_timestamp, make_lag_matrix, minmax_scale, pearson_corr, synth, LagMatrix, TimeSeries, DEFAULT_WINDOW,
};
use crate::error::{Error, Result};
use crate::explain::{shap_report, LstmForecaster, OneStepForecaster, ShapReport};
use crate::forecast::{Forecast, ModelKind};
use crate::ga::tune_lstm;
use crate::lstm::{init_network, predict_multi, train, write_loss_csv};
use crate::pipeline::{emit_report, load_dataset, run_evaluate, run_report, PipelineConfig, Strategy};
use crate::seasonal::tune_st;

#[derive(Debug, Parser)]
#[command(name = "wardwatt", version, about = "Hourly energy demand forecasting and GA load balancing")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global seed; overrides WARDWATT_SEED and the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Input CSV; the synthetic generator is used when neither this nor the
    /// config names one.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Arima,
    Seasonal,
    Lstm,
}

impl ModelArg {
    fn kind(self) -> ModelKind {
        match self {
            ModelArg::Arima => ModelKind::Arima,
            ModelArg::Seasonal => ModelKind::SeasonalTrend,
            ModelArg::Lstm => ModelKind::Lstm,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    Steady,
    Worst,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate and clean the input, writing a canonical CSV.
    Ingest,
    /// Fit one model on the whole series and forecast past its end.
    Forecast {
        #[arg(long, value_enum)]
        model: ModelArg,
        /// Defaults to the model's configured horizon.
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Search LSTM layer sizes and dropout with the GA.
    TuneLstm,
    /// Search seasonal-trend prior scales with the GA.
    TuneSeasonal,
    /// Balance an allocation against a forecast CSV.
    Balance {
        #[arg(long, value_enum)]
        strategy: StrategyArg,
        /// Forecast CSV with `timestamp,predicted_kw` columns.
        #[arg(long)]
        from: PathBuf,
        /// Leading hours to balance. Worst-replacement defaults to the
        /// configured seasonal balance hours, steady-state to all rows.
        #[arg(long)]
        hours: Option<usize>,
    },
    /// Attribute a model's one-step predictions to lag features.
    Explain {
        #[arg(long, value_enum)]
        model: ModelArg,
    },
    /// Score all three models on the chronological split.
    Evaluate,
    /// Pearson correlation between CSV columns.
    Correlate {
        #[arg(long, value_delimiter = ',', required = true)]
        columns: Vec<String>,
    },
    /// Full run: evaluation, balancing, attribution, charts.
    Report,
    /// Write the bundled synthetic dataset.
    Synth,
}

impl Command {
    fn stage(&self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Forecast { .. } => "forecast",
            Command::TuneLstm => "tune-lstm",
            Command::TuneSeasonal => "tune-seasonal",
            Command::Balance { .. } => "balance",
            Command::Explain { .. } => "explain",
            Command::Evaluate => "evaluate",
            Command::Correlate { .. } => "correlate",
            Command::Report => "report",
            Command::Synth => "synth",
        }
    }
}

/// Parse `args` (program name first) and run the chosen subcommand.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stage = cli.command.stage();
    let result = load_config(&cli).and_then(|cfg| {
        run(&cli.command, &cfg).map_err(|e| match e {
            e @ (Error::Config { .. } | Error::Stage { .. }) => e,
            e => Error::Stage { stage: stage.to_string(), source: Box::new(e) },
        })
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            1
        }
    }
}

/// `error[config]: ...` or `error[stage:<name>]: ...` on one line.
pub fn error_line(e: &Error) -> String {
    let kind = match e {
        Error::Config { .. } => "config".to_string(),
        Error::Stage { stage, .. } => format!("stage:{stage}"),
        _ => "error".to_string(),
    };
    let msg = e.to_string().replace(['\n', '\r'], " ");
    format!("error[{kind}]: {msg}")
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            if !path.is_file() {
                return Err(Error::config("--config", format!("{} does not exist", path.display())));
            }
            PipelineConfig::load(path)?
        }
        None => PipelineConfig::default(),
    };
    if let Some(input) = &cli.input {
        cfg.input.path = Some(input.clone());
    }
    if let Some(out) = &cli.output {
        cfg.output_dir = out.clone();
    }
    cfg.resolve_seed(cli.seed)?;
    cfg.validate()?;
    Ok(cfg)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn run(cmd: &Command, cfg: &PipelineConfig) -> Result<()> {
    let out = &cfg.output_dir;
    ensure_dir(out)?;
    match cmd {
        Command::Ingest => {
            let series = load_dataset(cfg)?;
            let path = out.join("clean.csv");
            write_series_csv(&series, &cfg.input.value_column, &path)?;
            println!("{} rows -> {}", series.len(), path.display());
        }
        Command::Forecast { model, horizon } => {
            let series = load_dataset(cfg)?;
            let kind = model.kind();
            let horizon = horizon.unwrap_or(match kind {
                ModelKind::Arima => cfg.arima.horizon,
                ModelKind::SeasonalTrend => cfg.seasonal.horizon,
                _ => cfg.lstm.horizon,
            });
            if horizon < 1 {
                return Err(Error::config("--horizon", "must be at least 1"));
            }
            let fc = forecast_model(kind, &series, cfg, horizon)?;
            let path = out.join(format!("forecast_{kind}.csv"));
            fc.write_csv(&path)?;
            println!("{} rows -> {}", fc.len(), path.display());
        }
        Command::TuneLstm => {
            let series = load_dataset(cfg)?;
            let (train_rows, test_rows, scaler) = split_lags(&series, cfg.split)?;
            let outcome = tune_lstm(&cfg.lstm.search, &train_rows, &test_rows, &scaler, &cfg.lstm.tune)?;
            let path = out.join("tune_lstm.json");
            write_json(&outcome, &path)?;
            println!("best {:?} mae {:.4} -> {}", outcome.best, outcome.best_mae, path.display());
        }
        Command::TuneSeasonal => {
            let series = load_dataset(cfg)?;
            let (train_s, _) = series.split(cfg.split)?;
            let outcome = tune_st(&train_s, &cfg.seasonal.model, &cfg.seasonal.ranges, &cfg.seasonal.tune)?;
            let path = out.join("tune_seasonal.json");
            write_json(&outcome, &path)?;
            println!(
                "changepoint_prior_scale {:.6} seasonality_prior_scale {:.6} rmse {:.4} -> {}",
                outcome.config.changepoint_prior_scale,
                outcome.config.seasonality_prior_scale,
                outcome.best_rmse,
                path.display()
            );
        }
        Command::Balance { strategy, from, hours } => {
            if !from.is_file() {
                return Err(Error::config("--from", format!("{} does not exist", from.display())));
            }
            let fc = Forecast::read_csv(from)?;
            let strategy = match strategy {
                StrategyArg::Steady => Strategy::Steady,
                StrategyArg::Worst => Strategy::Worst,
            };
            let n = hours.unwrap_or(match strategy {
                Strategy::Steady => fc.len(),
                Strategy::Worst => cfg.seasonal.balance_hours,
            });
            if n < 1 {
                return Err(Error::config("--hours", "must be at least 1"));
            }
            let fc = fc.take(n);
            let result = strategy.run(&fc.values, &cfg.ga)?;
            let name = strategy.as_str();
            write_json(&result, &out.join(format!("balance_{name}.json")))?;
            result.write_history_csv(out.join(format!("balance_{name}_history.csv")))?;
            result.write_allocation_csv(&fc.values, out.join(format!("balance_{name}_allocation.csv")))?;
            println!(
                "{} genes, best fitness {:.4} (initial {:.4}), mean |deviation| {:.4} kW",
                result.best_solution.len(),
                result.best_fitness,
                result.initial_best,
                result.mean_abs_deviation()
            );
        }
        Command::Explain { model } => {
            let series = load_dataset(cfg)?;
            let report = explain_model(model.kind(), &series, cfg)?;
            let kind = model.kind();
            report.write_json(out.join(format!("shap_{kind}.json")))?;
            report.write_instances_csv(out.join(format!("shap_{kind}_instances.csv")))?;
            for f in report.top(5) {
                println!("{:>8} {:.4}", f.name, f.mean_abs_shap);
            }
            if let Some(w) = &report.warning {
                println!("warning: {w}");
            }
        }
        Command::Evaluate => {
            let (eval, _, _) = run_evaluate(cfg)?;
            let rows: Vec<_> = eval
                .models
                .iter()
                .map(|m| serde_json::json!({"model": m.model, "mae": m.metrics.mae, "rmse": m.metrics.rmse}))
                .collect();
            println!("{}", serde_json::to_string_pretty(&serde_json::json!({ "models": rows }))?);
        }
        Command::Correlate { columns } => {
            let data = read_columns(cfg, columns)?;
            let m = pearson_corr(&data)?;
            write_json(&m, &out.join("correlation.json"))?;
            println!("{:>16} {}", "", m.labels.iter().map(|l| format!("{l:>16}")).collect::<String>());
            for (label, row) in m.labels.iter().zip(&m.entries) {
                println!("{label:>16} {}", row.iter().map(|v| format!("{v:>16.4}")).collect::<String>());
            }
        }
        Command::Report => {
            let report = run_report(cfg)?;
            let manifest = emit_report(&report, out)?;
            for f in &manifest.files {
                println!("{:>10} {}", f.bytes, f.file);
            }
        }
        Command::Synth => {
            let frame = synth::generate(&cfg.synthetic)?;
            let path = out.join("synthetic.csv");
            frame.write_csv(&path)?;
            println!("{} rows -> {}", frame.timestamps.len(), path.display());
        }
    }
    Ok(())
}

fn write_series_csv(series: &TimeSeries, value_column: &str, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["timestamp", value_column])?;
    for (t, v) in series.timestamps().iter().zip(series.values()) {
        w.write_record([format_timestamp(t), v.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Lag rows over the scaled series, split where targets enter the test span.
fn split_lags(series: &TimeSeries, split: f64) -> Result<(LagMatrix, LagMatrix, crate::data::ScalerParams)> {
    let (train_s, _) = series.split(split)?;
    let (_, scaler) = minmax_scale(&train_s)?;
    let scaled = scaler.transform_all(series.values());
    let all = LagMatrix::from_values(&scaled, DEFAULT_WINDOW)?;
    let cut = train_s.len().saturating_sub(DEFAULT_WINDOW);
    if cut == 0 || cut >= all.len() {
        return Err(Error::TooShort { needed: DEFAULT_WINDOW + 2, got: series.len() });
    }
    Ok((all.slice(0..cut), all.slice(cut..all.len()), scaler))
}

fn forecast_model(kind: ModelKind, series: &TimeSeries, cfg: &PipelineConfig, horizon: usize) -> Result<Forecast> {
    match kind {
        ModelKind::Arima => crate::arima::fit_arima(series, cfg.arima.order, cfg.arima.budget)?.forecast(horizon),
        ModelKind::SeasonalTrend => crate::seasonal::fit_st(series, &cfg.seasonal.model)?.forecast(horizon),
        _ => {
            let (scaled, scaler) = minmax_scale(series)?;
            let data = make_lag_matrix(&scaled, DEFAULT_WINDOW)?;
            let net = init_network(&cfg.lstm.hyperparams, cfg.lstm.train.seed)?;
            let outcome = train(&net, &data, &cfg.lstm.train)?;
            write_loss_csv(&outcome.losses, cfg.output_dir.join("lstm_loss.csv"))?;
            predict_multi(&outcome.network, series, horizon, &scaler)
        }
    }
}

fn explain_model(kind: ModelKind, series: &TimeSeries, cfg: &PipelineConfig) -> Result<ShapReport> {
    let shap = &cfg.explain.shap;
    match kind {
        ModelKind::Arima => {
            let m = crate::arima::fit_arima(series, cfg.arima.order, cfg.arima.budget)?;
            shap_report(&m, series, shap)
        }
        ModelKind::SeasonalTrend => {
            let m = crate::seasonal::fit_st(series, &cfg.seasonal.model)?;
            shap_report(&m, series, shap)
        }
        _ => {
            let (scaled, scaler) = minmax_scale(series)?;
            let data = make_lag_matrix(&scaled, DEFAULT_WINDOW)?;
            let net = init_network(&cfg.lstm.hyperparams, cfg.lstm.train.seed)?;
            let outcome = train(&net, &data, &cfg.lstm.train)?;
            let f = LstmForecaster { network: &outcome.network, scaler };
            shap_report(&f as &dyn OneStepForecaster, series, shap)
        }
    }
}

/// Named numeric columns from the input CSV, or from the synthetic frame.
fn read_columns(cfg: &PipelineConfig, names: &[String]) -> Result<Vec<(String, Vec<f64>)>> {
    match &cfg.input.path {
        None => {
            let frame = synth::generate(&cfg.synthetic)?;
            names
                .iter()
                .map(|n| {
                    frame
                        .column(n)
                        .map(|v| (n.clone(), v.to_vec()))
                        .ok_or_else(|| Error::MissingColumn(n.clone()))
                })
                .collect()
        }
        Some(path) => {
            let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
            let headers = r.headers()?.clone();
            let idx: Vec<usize> = names
                .iter()
                .map(|n| headers.iter().position(|h| h == n).ok_or_else(|| Error::MissingColumn(n.clone())))
                .collect::<Result<_>>()?;
            let mut cols = vec![Vec::new(); names.len()];
            for (row, rec) in r.records().enumerate() {
                let rec = rec?;
                for (c, &i) in idx.iter().enumerate() {
                    let raw = rec.get(i).unwrap_or("");
                    let v: f64 = raw.parse().map_err(|_| Error::BadValue { row: row + 1, value: raw.into() })?;
                    cols[c].push(v);
                }
            }
            Ok(names.iter().cloned().zip(cols).collect())
        }
    }
}
