use serde::{Deserialize, Serialize};

use super::TimeSeries;
use crate::error::{Error, Result};

pub const DEFAULT_WINDOW: usize = 24;

/// Sliding-window supervised view of a series.
///
/// `rows[i]` holds `values[i..i + window]` oldest-first and `targets[i]` is
/// `values[i + window]`. Column `j` is therefore lag `window - j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagMatrix {
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub window: usize,
}

impl LagMatrix {
    pub fn from_values(values: &[f64], window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::invalid("lag window must be positive"));
        }
        if values.len() <= window {
            return Err(Error::TooShort {
                needed: window + 1,
                got: values.len(),
            });
        }
        let rows = values.windows(window + 1).map(|w| w[..window].to_vec()).collect();
        let targets = values[window..].to_vec();
        Ok(Self {
            rows,
            targets,
            window,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Keep rows in `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            rows: self.rows[range.clone()].to_vec(),
            targets: self.targets[range].to_vec(),
            window: self.window,
        }
    }
}

pub fn make_lag_matrix(series: &TimeSeries, window: usize) -> Result<LagMatrix> {
    series.require_complete()?;
    LagMatrix::from_values(series.values(), window)
}

/// Names of the lag columns in storage order: `lag_{window}` ... `lag_1`.
pub fn lag_feature_names(window: usize) -> Vec<String> {
    (0..window).map(|j| format!("lag_{}", window - j)).collect()
}
