//! Horizon-indexed predictions shared by every forecaster.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{Duration, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::data::{format_timestamp, parse_timestamp, ScalerParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Arima,
    SeasonalTrend,
    Lstm,
    /// Anything loaded from a file or supplied by a caller.
    External,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Arima => "arima",
            ModelKind::SeasonalTrend => "seasonal-trend",
            ModelKind::Lstm => "lstm",
            ModelKind::External => "external",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arima" => Ok(ModelKind::Arima),
            "seasonal" | "seasonal-trend" => Ok(ModelKind::SeasonalTrend),
            "lstm" => Ok(ModelKind::Lstm),
            "external" => Ok(ModelKind::External),
            other => Err(Error::invalid(format!("unknown model `{other}`"))),
        }
    }
}

/// Predicted demand for `values.len()` consecutive hours starting at `start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub model: ModelKind,
    pub start: NaiveDateTime,
    pub values: Vec<f64>,
    /// Present when the model worked on min-max scaled data.
    pub scaler: Option<ScalerParams>,
}

impl Forecast {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamps(&self) -> Vec<NaiveDateTime> {
        (0..self.values.len())
            .map(|i| self.start + Duration::hours(i as i64))
            .collect()
    }

    /// First `n` hours, or the whole forecast if it is shorter.
    pub fn take(&self, n: usize) -> Forecast {
        Forecast {
            values: self.values[..n.min(self.values.len())].to_vec(),
            ..self.clone()
        }
    }

    /// CSV with columns `timestamp,predicted_kw`. Values use the shortest
    /// representation that parses back to the same `f64`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["timestamp", "predicted_kw"])?;
        for (t, v) in self.timestamps().iter().zip(&self.values) {
            w.write_record([format_timestamp(t), v.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Forecast> {
        let path = path.as_ref();
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        let ts_idx = headers
            .iter()
            .position(|h| h == "timestamp")
            .ok_or_else(|| Error::MissingColumn("timestamp".into()))?;
        let v_idx = headers
            .iter()
            .position(|h| h == "predicted_kw")
            .ok_or_else(|| Error::MissingColumn("predicted_kw".into()))?;
        let mut start = None;
        let mut values = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let row = i + 1;
            let raw_t = rec.get(ts_idx).unwrap_or("");
            let t = parse_timestamp(raw_t).ok_or_else(|| Error::BadTimestamp {
                row,
                value: raw_t.into(),
            })?;
            let expected = start.map(|s: NaiveDateTime| s + Duration::hours(i as i64));
            match expected {
                None => start = Some(t),
                Some(e) if e != t => {
                    return Err(Error::IrregularSpacing {
                        row,
                        previous: e - Duration::hours(1),
                        found: t,
                    })
                }
                _ => {}
            }
            let raw_v = rec.get(v_idx).unwrap_or("");
            let v: f64 = raw_v.parse().map_err(|_| Error::BadValue {
                row,
                value: raw_v.into(),
            })?;
            values.push(v);
        }
        let start = start.ok_or_else(|| Error::invalid("forecast file has no rows"))?;
        Ok(Forecast {
            model: ModelKind::External,
            start,
            values,
            scaler: None,
        })
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let body = serde_json::to_string_pretty(self)?;
        std::fs::write(path, body).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn csv_round_trip_is_lossless(values in prop::collection::vec(-1e6f64..1e6, 1..60)) {
            let f = Forecast {
                model: ModelKind::Arima,
                start: parse_timestamp("2022-03-01T05:00").unwrap(),
                values,
                scaler: None,
            };
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("f.csv");
            f.write_csv(&path).unwrap();
            let back = Forecast::read_csv(&path).unwrap();
            prop_assert_eq!(back.values, f.values);
            prop_assert_eq!(back.start, f.start);
        }
    }

    #[test]
    fn take_truncates() {
        let f = Forecast {
            model: ModelKind::SeasonalTrend,
            start: parse_timestamp("2022-03-01T05:00").unwrap(),
            values: (0..720).map(f64::from).collect(),
            scaler: None,
        };
        assert_eq!(f.take(50).len(), 50);
        assert_eq!(f.take(5000).len(), 720);
    }
}
