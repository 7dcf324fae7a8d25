//! Decomposable seasonal-trend forecaster.
//!
//! `y(t) = offset + slope * t + sum_k delta_k * max(t - cp_k, 0)
//!         + daily Fourier terms (period 24 h) + weekly Fourier terms (period 168 h)`
//!
//! Coefficients solve a ridge problem: the base line is unpenalized, the
//! changepoint deltas carry `1 / changepoint_prior_scale^2` and the Fourier
//! weights `1 / seasonality_prior_scale^2`. The penalty is applied in a
//! normalized space where time runs over [0, 1] across the training history
//! and values are divided by their largest magnitude, so the prior scales
//! mean the same thing for any unit of demand.

mod design;
mod tune;

use std::path::Path;

use chrono::{Duration, NaiveDateTime};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{format_timestamp, TimeSeries};
use crate::error::{Error, Result};
use crate::forecast::{Forecast, ModelKind};
use crate::linalg::solve_spd;

pub use design::{build_design, DesignLayout, DesignMatrix};
pub use tune::{holdout_rmse, tune_st, PriorRanges, TuneGeneration, TuneOutcome, TuneSettings, TunedCandidate};

/// Fraction of the history over which changepoints are spread.
pub const CHANGEPOINT_RANGE: f64 = 0.8;
/// Hours generated by the default forecast (30 days).
pub const DEFAULT_HORIZON: usize = 720;
/// Hours of the default forecast handed to load balancing.
pub const BALANCE_HOURS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StConfig {
    pub n_changepoints: usize,
    pub daily_order: usize,
    pub weekly_order: usize,
    pub changepoint_prior_scale: f64,
    pub seasonality_prior_scale: f64,
}

impl Default for StConfig {
    fn default() -> Self {
        Self {
            n_changepoints: 25,
            daily_order: 4,
            weekly_order: 3,
            changepoint_prior_scale: 0.05,
            seasonality_prior_scale: 10.0,
        }
    }
}

impl StConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.changepoint_prior_scale > 0.0 && self.changepoint_prior_scale.is_finite()) {
            return Err(Error::config("changepoint_prior_scale", "must be a positive number"));
        }
        if !(self.seasonality_prior_scale > 0.0 && self.seasonality_prior_scale.is_finite()) {
            return Err(Error::config("seasonality_prior_scale", "must be a positive number"));
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        2 + self.n_changepoints + 2 * (self.daily_order + self.weekly_order)
    }
}

/// Per-timestamp additive decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Components {
    pub trend: f64,
    pub daily: f64,
    pub weekly: f64,
}

impl Components {
    pub fn seasonal(&self) -> f64 {
        self.daily + self.weekly
    }

    pub fn total(&self) -> f64 {
        self.trend + self.seasonal()
    }
}

/// Fitted seasonal-trend model in kW and hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StModel {
    pub config: StConfig,
    pub layout: DesignLayout,
    pub offset: f64,
    /// kW per hour before the first changepoint.
    pub base_slope: f64,
    /// Slope changes in kW per hour, one per changepoint.
    pub deltas: Vec<f64>,
    /// Daily sin/cos pairs by harmonic, then weekly pairs.
    pub seasonal_coeffs: Vec<f64>,
    /// Divisor applied to demand before the penalized solve.
    pub value_scale: f64,
    pub last_timestamp: NaiveDateTime,
}

impl StModel {
    fn hours(&self, t: NaiveDateTime) -> f64 {
        self.layout.hours_since_start(t)
    }

    pub fn trend_at_hours(&self, h: f64) -> f64 {
        let hinge: f64 = self
            .deltas
            .iter()
            .zip(&self.layout.changepoints)
            .map(|(d, cp)| d * (h - cp).max(0.0))
            .sum();
        self.offset + self.base_slope * h + hinge
    }

    /// Slope after the last changepoint, which carries into the future.
    pub fn final_slope(&self) -> f64 {
        self.base_slope + self.deltas.iter().sum::<f64>()
    }

    pub fn components_at_hours(&self, h: f64) -> Components {
        let d = self.config.daily_order;
        let (daily_coeffs, weekly_coeffs) = self.seasonal_coeffs.split_at(2 * d);
        Components {
            trend: self.trend_at_hours(h),
            daily: design::fourier_dot(h, 24.0, daily_coeffs),
            weekly: design::fourier_dot(h, 168.0, weekly_coeffs),
        }
    }

    pub fn components(&self, t: NaiveDateTime) -> Components {
        self.components_at_hours(self.hours(t))
    }

    pub fn predict(&self, t: NaiveDateTime) -> f64 {
        self.components(t).total()
    }

    pub fn predict_many(&self, timestamps: &[NaiveDateTime]) -> Vec<f64> {
        timestamps.iter().map(|t| self.predict(*t)).collect()
    }

    pub fn forecast(&self, horizon: usize) -> Result<Forecast> {
        if horizon < 1 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        let start = self.last_timestamp + Duration::hours(1);
        let values = (0..horizon)
            .map(|i| self.predict(start + Duration::hours(i as i64)))
            .collect();
        Ok(Forecast {
            model: ModelKind::SeasonalTrend,
            start,
            values,
            scaler: None,
        })
    }

    /// Coefficients in the normalized space the ridge problem is solved in.
    fn normalized_coefficients(&self) -> Vec<f64> {
        let span = self.layout.time_scale_hours;
        let k = self.value_scale;
        let mut beta = vec![self.offset / k, self.base_slope * span / k];
        beta.extend(self.deltas.iter().map(|d| d * span / k));
        beta.extend(self.seasonal_coeffs.iter().map(|c| c / k));
        beta
    }

    /// Gradient of the penalized least-squares objective (halved) at the
    /// fitted coefficients, in normalized units. Zero at an exact optimum.
    pub fn penalized_gradient(&self, series: &TimeSeries) -> Result<Vec<f64>> {
        let design = self.layout.matrix(series.timestamps());
        let x = normalized(&design.rows, &self.layout);
        let y = DVector::from_iterator(series.len(), series.values().iter().map(|v| v / self.value_scale));
        let beta = DVector::from_vec(self.normalized_coefficients());
        let penalty = penalty_diag(&self.config);
        let resid = &x * &beta - y;
        let grad = x.transpose() * resid + DVector::from_iterator(beta.len(), penalty.iter().zip(beta.iter()).map(|(l, b)| l * b));
        Ok(grad.iter().copied().collect())
    }

    /// CSV with columns `timestamp,trend,daily,weekly,total`.
    pub fn write_decomposition(&self, timestamps: &[NaiveDateTime], path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["timestamp", "trend", "daily", "weekly", "total"])?;
        for t in timestamps {
            let c = self.components(*t);
            w.write_record([
                format_timestamp(t),
                c.trend.to_string(),
                c.daily.to_string(),
                c.weekly.to_string(),
                c.total().to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn penalty_diag(config: &StConfig) -> Vec<f64> {
    let lambda_cp = 1.0 / config.changepoint_prior_scale.powi(2);
    let lambda_s = 1.0 / config.seasonality_prior_scale.powi(2);
    let mut diag = vec![0.0, 0.0];
    diag.extend(std::iter::repeat_n(lambda_cp, config.n_changepoints));
    diag.extend(std::iter::repeat_n(lambda_s, 2 * (config.daily_order + config.weekly_order)));
    diag
}

/// Divide the time and hinge columns by the history span.
fn normalized(rows: &DMatrix<f64>, layout: &DesignLayout) -> DMatrix<f64> {
    let mut x = rows.clone();
    let n_time = 1 + layout.changepoints.len();
    for j in 1..=n_time {
        x.column_mut(j).scale_mut(1.0 / layout.time_scale_hours);
    }
    x
}

pub fn fit_st(series: &TimeSeries, config: &StConfig) -> Result<StModel> {
    config.validate()?;
    series.require_complete()?;
    let width = config.width();
    if series.len() < width + 10 {
        return Err(Error::TooShort {
            needed: width + 10,
            got: series.len(),
        });
    }
    if config.n_changepoints >= series.len() {
        return Err(Error::config("n_changepoints", "must be below the training length"));
    }
    let design = build_design(series.timestamps(), config)?;
    let layout = design.layout.clone();
    if layout.time_scale_hours <= 0.0 {
        return Err(Error::Singular("rank-deficient unpenalized block".into()));
    }

    let value_scale = series.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let value_scale = if value_scale > 0.0 { value_scale } else { 1.0 };
    let x = normalized(&design.rows, &layout);
    let y = DVector::from_iterator(series.len(), series.values().iter().map(|v| v / value_scale));

    let mut gram = x.transpose() * &x;
    for (j, l) in penalty_diag(config).into_iter().enumerate() {
        gram[(j, j)] += l;
    }
    let rhs = x.transpose() * y;
    let beta = solve_spd(gram, &rhs, "seasonal-trend normal equations")
        .map_err(|_| Error::Singular("rank-deficient unpenalized block".into()))?;

    let span = layout.time_scale_hours;
    let n_cp = config.n_changepoints;
    Ok(StModel {
        config: *config,
        offset: beta[0] * value_scale,
        base_slope: beta[1] * value_scale / span,
        deltas: (0..n_cp).map(|k| beta[2 + k] * value_scale / span).collect(),
        seasonal_coeffs: beta.iter().skip(2 + n_cp).map(|b| b * value_scale).collect(),
        value_scale,
        last_timestamp: series.end(),
        layout,
    })
}

pub fn forecast_st(model: &StModel, horizon: usize) -> Result<Forecast> {
    model.forecast(horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{parse_timestamp, score};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::PI;

    fn t0() -> NaiveDateTime {
        parse_timestamp("2021-01-04T00:00").unwrap()
    }

    fn series_from(n: usize, f: impl Fn(f64) -> f64) -> TimeSeries {
        TimeSeries::hourly(t0(), (0..n).map(|i| f(i as f64)).collect()).unwrap()
    }

    fn rmse_on(model: &StModel, s: &TimeSeries) -> f64 {
        score(s.values(), &model.predict_many(s.timestamps())).unwrap().rmse
    }

    #[test]
    fn recovers_pure_line() {
        let s = series_from(400, |t| 2.0 * t + 5.0);
        let cfg = StConfig { changepoint_prior_scale: 1e3, seasonality_prior_scale: 1e3, ..Default::default() };
        let m = fit_st(&s, &cfg).unwrap();
        assert!((m.base_slope - 2.0).abs() < 1e-3, "{}", m.base_slope);
        assert!((m.offset - 5.0).abs() < 1e-3, "{}", m.offset);
        assert!(m.deltas.iter().all(|d| d.abs() < 1e-3));
        assert!(m.seasonal_coeffs.iter().all(|c| c.abs() < 1e-3));
    }

    #[test]
    fn recovers_daily_sine() {
        let s = series_from(24 * 28, |t| 10.0 * (2.0 * PI * t / 24.0).sin());
        let cfg = StConfig { changepoint_prior_scale: 1e3, seasonality_prior_scale: 1e3, ..Default::default() };
        let m = fit_st(&s, &cfg).unwrap();
        assert!((m.seasonal_coeffs[0] - 10.0).abs() < 1e-3, "{:?}", m.seasonal_coeffs);
        for (i, c) in m.seasonal_coeffs.iter().enumerate().skip(1) {
            assert!(c.abs() < 1e-3, "coefficient {i} = {c}");
        }
    }

    #[test]
    fn tight_changepoint_prior_kills_deltas() {
        let s = series_from(500, |t| if t < 250.0 { t } else { 250.0 + 3.0 * (t - 250.0) });
        let loose = fit_st(&s, &StConfig { changepoint_prior_scale: 10.0, ..Default::default() }).unwrap();
        let tight = fit_st(&s, &StConfig { changepoint_prior_scale: 1e-6, ..Default::default() }).unwrap();
        let max_loose = loose.deltas.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let max_tight = tight.deltas.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        assert!(max_loose > 0.1);
        assert!(max_tight < 1e-6, "{max_tight}");
    }

    #[test]
    fn optimality_and_monotone_flexibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let noise = Normal::new(0.0, 3.0).unwrap();
        let values: Vec<f64> = (0..600)
            .map(|i| {
                let t = i as f64;
                300.0 + 0.1 * t + (t / 90.0).sin() * 20.0 + 15.0 * (2.0 * PI * t / 24.0).cos() + noise.sample(&mut rng)
            })
            .collect();
        let s = TimeSeries::hourly(t0(), values).unwrap();
        let mut last = f64::INFINITY;
        for scale in [0.001, 0.01, 0.05, 0.2, 1.0, 10.0] {
            let m = fit_st(&s, &StConfig { changepoint_prior_scale: scale, ..Default::default() }).unwrap();
            let grad = m.penalized_gradient(&s).unwrap();
            let max = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
            assert!(max < 1e-6, "gradient {max} at scale {scale}");
            let r = rmse_on(&m, &s);
            assert!(r <= last * (1.0 + 1e-9), "rmse rose from {last} to {r}");
            last = r;
        }
    }

    #[test]
    fn additive_decomposition() {
        let s = series_from(300, |t| 50.0 + 0.5 * t + 4.0 * (2.0 * PI * t / 168.0).sin() + (t * 0.3).cos());
        let m = fit_st(&s, &StConfig::default()).unwrap();
        for h in [0.0, 17.0, 299.0, 450.5] {
            let c = m.components_at_hours(h);
            assert_eq!(c.total(), c.trend + (c.daily + c.weekly));
        }
        for t in s.timestamps() {
            let c = m.components(*t);
            assert_eq!(m.predict(*t), c.trend + c.seasonal());
        }
    }

    #[test]
    fn linear_extension_without_seasonality() {
        let s = series_from(100, |t| t + 3.0);
        let cfg = StConfig { n_changepoints: 0, daily_order: 0, weekly_order: 0, ..Default::default() };
        let m = fit_st(&s, &cfg).unwrap();
        let last = m.predict(s.end());
        let f = m.forecast(3).unwrap();
        for (i, v) in f.values.iter().enumerate() {
            assert!((v - (last + (i + 1) as f64)).abs() < 1e-9);
        }
    }

    #[test]
    fn daily_periodicity_of_forecast() {
        let s = series_from(400, |t| 100.0 + 0.3 * t + 6.0 * (2.0 * PI * t / 24.0).sin() + (t / 7.0).sin());
        let cfg = StConfig { weekly_order: 0, ..Default::default() };
        let m = fit_st(&s, &cfg).unwrap();
        let f = m.forecast(96).unwrap();
        let slope = m.final_slope();
        for i in 0..72 {
            assert!((f.values[i + 24] - f.values[i] - 24.0 * slope).abs() < 1e-9);
        }
    }

    #[test]
    fn horizon_and_take() {
        let s = series_from(200, |t| t.sqrt());
        let m = fit_st(&s, &StConfig::default()).unwrap();
        let f = forecast_st(&m, DEFAULT_HORIZON).unwrap();
        assert_eq!(f.len(), 720);
        assert_eq!(f.take(BALANCE_HOURS).len(), 50);
        assert_eq!(f, forecast_st(&m, DEFAULT_HORIZON).unwrap());
        assert!(forecast_st(&m, 0).is_err());
        assert_eq!(f.start, s.end() + Duration::hours(1));
    }

    #[test]
    fn too_short_and_bad_priors() {
        let s = series_from(40, |t| t);
        assert!(matches!(fit_st(&s, &StConfig::default()), Err(Error::TooShort { needed: 51, .. })));
        let s = series_from(100, |t| t);
        let bad = StConfig { seasonality_prior_scale: 0.0, ..Default::default() };
        assert!(matches!(fit_st(&s, &bad), Err(Error::Config { .. })));
    }
}
