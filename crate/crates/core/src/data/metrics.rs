use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Forecast accuracy in kW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mae: f64,
    pub rmse: f64,
}

pub fn score(actual: &[f64], predicted: &[f64]) -> Result<Metrics> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: actual.len(),
            right: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::invalid("cannot score empty inputs"));
    }
    let n = actual.len() as f64;
    let (abs, sq) = actual
        .iter()
        .zip(predicted)
        .fold((0.0, 0.0), |(abs, sq), (a, p)| {
            let e = a - p;
            (abs + e.abs(), sq + e * e)
        });
    let metrics = Metrics {
        mae: abs / n,
        rmse: (sq / n).sqrt(),
    };
    if !(metrics.mae.is_finite() && metrics.rmse.is_finite()) {
        return Err(Error::NonFinite("metrics".into()));
    }
    Ok(metrics)
}
