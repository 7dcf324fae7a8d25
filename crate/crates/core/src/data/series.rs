use std::path::Path;

use chrono::{Duration, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TIMESTAMP_FORMATS: &[&str] = &[
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M",
    "%Y-%m-%d %H:%M:%S",
];

/// Parse an ISO-8601 local timestamp at minute (or second) precision.
pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim().trim_end_matches('Z');
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(s, fmt).ok())
}

pub fn format_timestamp(t: &NaiveDateTime) -> String {
    t.format("%Y-%m-%dT%H:%M").to_string()
}

/// Hourly demand observations in kW.
///
/// Timestamps are strictly increasing with a constant one-hour step. Missing
/// observations are stored as `NaN` until [`preprocess`] fills them; every
/// model entry point calls [`TimeSeries::require_complete`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    timestamps: Vec<NaiveDateTime>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(timestamps: Vec<NaiveDateTime>, values: Vec<f64>) -> Result<Self> {
        if timestamps.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: timestamps.len(),
                right: values.len(),
            });
        }
        if timestamps.len() < 2 {
            return Err(Error::TooShort {
                needed: 2,
                got: timestamps.len(),
            });
        }
        check_hourly(&timestamps)?;
        if values.iter().any(|v| v.is_infinite()) {
            return Err(Error::NonFinite("series values".into()));
        }
        Ok(Self { timestamps, values })
    }

    /// Build a series of hourly values starting at `start`.
    pub fn hourly(start: NaiveDateTime, values: Vec<f64>) -> Result<Self> {
        let timestamps = (0..values.len())
            .map(|i| start + Duration::hours(i as i64))
            .collect();
        Self::new(timestamps, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn start(&self) -> NaiveDateTime {
        self.timestamps[0]
    }

    pub fn end(&self) -> NaiveDateTime {
        self.timestamps[self.timestamps.len() - 1]
    }

    /// Number of whole hours between the first and last observation.
    pub fn span_hours(&self) -> i64 {
        (self.end() - self.start()).num_hours()
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_nan()).count()
    }

    pub fn require_complete(&self) -> Result<()> {
        match self.missing_count() {
            0 => Ok(()),
            n => Err(Error::MissingRemain(n)),
        }
    }

    /// Same timestamps, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.timestamps.clone(), values)
    }

    /// Chronological split: the first `round(len * fraction)` points train.
    pub fn split(&self, fraction: f64) -> Result<(TimeSeries, TimeSeries)> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::invalid(format!(
                "split fraction {fraction} outside (0, 1)"
            )));
        }
        let cut = (self.len() as f64 * fraction).round() as usize;
        self.split_at(cut)
    }

    pub fn split_at(&self, cut: usize) -> Result<(TimeSeries, TimeSeries)> {
        if cut < 2 || self.len() < cut + 2 {
            return Err(Error::invalid(format!(
                "split at {cut} leaves fewer than 2 points on one side of {}",
                self.len()
            )));
        }
        let head = Self {
            timestamps: self.timestamps[..cut].to_vec(),
            values: self.values[..cut].to_vec(),
        };
        let tail = Self {
            timestamps: self.timestamps[cut..].to_vec(),
            values: self.values[cut..].to_vec(),
        };
        Ok((head, tail))
    }
}

fn check_hourly(timestamps: &[NaiveDateTime]) -> Result<()> {
    for (i, pair) in timestamps.windows(2).enumerate() {
        let (previous, found) = (pair[0], pair[1]);
        // Data rows are numbered from 1.
        let row = i + 2;
        if found <= previous {
            return Err(Error::NonMonotone {
                row,
                previous,
                found,
            });
        }
        if found - previous != Duration::hours(1) {
            return Err(Error::IrregularSpacing {
                row,
                previous,
                found,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum IngestWarning {
    /// The value cell at this data row (1-based) was empty or non-finite.
    MissingValue { row: usize, timestamp: NaiveDateTime },
}

#[derive(Debug, Clone)]
pub struct LoadedSeries {
    pub series: TimeSeries,
    pub warnings: Vec<IngestWarning>,
}

/// Read a two-column hourly series from a headed CSV file.
///
/// Empty or non-finite value cells become missing observations and are
/// reported as warnings. Duplicate, backwards or irregularly spaced
/// timestamps are errors.
pub fn load_series(
    path: impl AsRef<Path>,
    timestamp_column: &str,
    value_column: &str,
) -> Result<LoadedSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let ts_idx = find(timestamp_column)?;
    let val_idx = find(value_column)?;

    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    let mut warnings = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let raw_ts = record.get(ts_idx).unwrap_or("");
        let ts = parse_timestamp(raw_ts).ok_or_else(|| Error::BadTimestamp {
            row,
            value: raw_ts.to_string(),
        })?;
        let raw_val = record.get(val_idx).unwrap_or("");
        let value = if raw_val.is_empty() {
            f64::NAN
        } else {
            raw_val.parse::<f64>().map_err(|_| Error::BadValue {
                row,
                value: raw_val.to_string(),
            })?
        };
        if !value.is_finite() {
            warnings.push(IngestWarning::MissingValue { row, timestamp: ts });
        }
        timestamps.push(ts);
        values.push(if value.is_finite() { value } else { f64::NAN });
    }
    let series = TimeSeries::new(timestamps, values)?;
    Ok(LoadedSeries { series, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PreprocessOptions {
    pub forward_fill: bool,
    pub outlier_3sigma: bool,
}

/// Fill gaps and optionally drop 3-sigma outliers.
///
/// Outlier statistics (mean and sample standard deviation) are computed once
/// on the observed raw values. Removed outliers are refilled from the last
/// prior retained value, or from the next retained value when the outlier
/// leads the series. Genuinely missing values are only filled when
/// `forward_fill` is set.
pub fn preprocess(series: &TimeSeries, opts: PreprocessOptions) -> Result<TimeSeries> {
    let values = series.values();
    let observed: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if observed.is_empty() {
        return Err(Error::AllMissing);
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Slot {
        Keep(f64),
        Missing,
        Outlier,
    }
    let mut slots: Vec<Slot> = values
        .iter()
        .map(|&v| if v.is_finite() { Slot::Keep(v) } else { Slot::Missing })
        .collect();

    if opts.outlier_3sigma && observed.len() > 1 {
        let n = observed.len() as f64;
        let mean = observed.iter().sum::<f64>() / n;
        let var = observed.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let limit = 3.0 * var.sqrt();
        for slot in slots.iter_mut() {
            if let Slot::Keep(v) = *slot {
                if (v - mean).abs() > limit {
                    *slot = Slot::Outlier;
                }
            }
        }
    }

    if opts.forward_fill && slots[0] == Slot::Missing {
        return Err(Error::LeadingMissing);
    }
    let first_kept = slots.iter().find_map(|s| match s {
        Slot::Keep(v) => Some(*v),
        _ => None,
    });

    let mut out = Vec::with_capacity(slots.len());
    let mut last: Option<f64> = None;
    for slot in slots {
        let v = match slot {
            Slot::Keep(v) => v,
            Slot::Outlier => match last.or(first_kept) {
                Some(v) => v,
                None => return Err(Error::AllMissing),
            },
            Slot::Missing if opts.forward_fill => match last {
                Some(v) => v,
                None => return Err(Error::LeadingMissing),
            },
            Slot::Missing => f64::NAN,
        };
        if v.is_finite() {
            last = Some(v);
        }
        out.push(v);
    }
    let cleaned = series.with_values(out)?;
    cleaned.require_complete()?;
    Ok(cleaned)
}
