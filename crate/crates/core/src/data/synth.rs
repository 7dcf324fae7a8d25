//! Seeded synthetic hospital load.
//!
//! The frame is the sum of a slow linear trend, an occupancy profile with
//! sharp morning and evening ramps damped on weekends, and an HVAC load that
//! is quadratic in an AR(1) outdoor temperature anomaly, plus Gaussian noise.
//! Component columns are emitted alongside the total for correlation work.

use std::path::Path;

use chrono::{Datelike, Duration, NaiveDateTime, Timelike, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{format_timestamp, parse_timestamp, TimeSeries};
use crate::error::{Error, Result};

/// Bumped whenever the generator's output for a given config changes.
pub const GENERATOR_VERSION: u32 = 2;

pub const TOTAL_COLUMN: &str = "total_kw";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub start: String,
    pub hours: usize,
    pub seed: u64,
    pub base_kw: f64,
    pub trend_kw_per_hour: f64,
    pub occupancy_kw: f64,
    /// Hour of day at which the morning ramp is half way.
    pub ramp_up_hour: f64,
    pub ramp_down_hour: f64,
    /// Ramp steepness; larger is sharper.
    pub ramp_rate: f64,
    pub weekend_factor: f64,
    pub hvac_kw_per_deg2: f64,
    pub temp_daily_amplitude: f64,
    pub temp_ar: f64,
    pub temp_shock_sd: f64,
    pub noise_sd: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            start: "2021-01-04T00:00".into(),
            hours: 24 * 7 * 8,
            seed: 2021,
            base_kw: 600.0,
            trend_kw_per_hour: 0.02,
            occupancy_kw: 250.0,
            ramp_up_hour: 7.0,
            ramp_down_hour: 19.0,
            ramp_rate: 2.5,
            weekend_factor: 0.7,
            hvac_kw_per_deg2: 3.0,
            temp_daily_amplitude: 4.0,
            temp_ar: 0.985,
            temp_shock_sd: 0.6,
            noise_sd: 8.0,
        }
    }
}

/// Named hourly columns sharing one timestamp axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthFrame {
    pub timestamps: Vec<NaiveDateTime>,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl SynthFrame {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn total(&self) -> Result<TimeSeries> {
        let values = self
            .column(TOTAL_COLUMN)
            .ok_or_else(|| Error::MissingColumn(TOTAL_COLUMN.into()))?;
        TimeSeries::new(self.timestamps.clone(), values.to_vec())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["timestamp".to_string()];
        header.extend(self.columns.iter().map(|(n, _)| n.clone()));
        w.write_record(&header)?;
        for (i, t) in self.timestamps.iter().enumerate() {
            let mut record = vec![format_timestamp(t)];
            record.extend(self.columns.iter().map(|(_, v)| v[i].to_string()));
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthFrame> {
    let start = parse_timestamp(&cfg.start)
        .ok_or_else(|| Error::config("start", format!("cannot parse `{}`", cfg.start)))?;
    if cfg.hours < 2 {
        return Err(Error::config("hours", "need at least 2 hours"));
    }
    let noise = Normal::new(0.0, cfg.noise_sd.max(0.0))
        .map_err(|e| Error::config("noise_sd", e.to_string()))?;
    let shock = Normal::new(0.0, cfg.temp_shock_sd.max(0.0))
        .map_err(|e| Error::config("temp_shock_sd", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let n = cfg.hours;
    let mut timestamps = Vec::with_capacity(n);
    let mut temperature = Vec::with_capacity(n);
    let mut occupancy = Vec::with_capacity(n);
    let mut hvac = Vec::with_capacity(n);
    let mut total = Vec::with_capacity(n);
    let mut anomaly = 0.0;
    for i in 0..n {
        let t = start + Duration::hours(i as i64);
        let hour = t.hour() as f64;
        let weekend = matches!(t.weekday(), Weekday::Sat | Weekday::Sun);

        let ramp = logistic(cfg.ramp_rate * (hour - cfg.ramp_up_hour))
            * logistic(cfg.ramp_rate * (cfg.ramp_down_hour - hour));
        let occ = cfg.occupancy_kw * ramp * if weekend { cfg.weekend_factor } else { 1.0 };

        anomaly = cfg.temp_ar * anomaly + shock.sample(&mut rng);
        let daily_temp = cfg.temp_daily_amplitude
            * (2.0 * std::f64::consts::PI * (hour - 15.0) / 24.0).cos();
        let temp = 22.0 + daily_temp + anomaly;
        let cooling = cfg.hvac_kw_per_deg2 * (temp - 18.0).max(0.0).powi(2);

        let load = cfg.base_kw + cfg.trend_kw_per_hour * i as f64 + occ + cooling + noise.sample(&mut rng);

        timestamps.push(t);
        temperature.push(temp);
        occupancy.push(occ);
        hvac.push(cooling);
        total.push(load);
    }
    Ok(SynthFrame {
        timestamps,
        columns: vec![
            (TOTAL_COLUMN.into(), total),
            ("occupancy_kw".into(), occupancy),
            ("hvac_kw".into(), hvac),
            ("temperature_c".into(), temperature),
        ],
    })
}
