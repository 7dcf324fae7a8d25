use serde::{Deserialize, Serialize};

use super::TimeSeries;
use crate::error::{Error, Result};

/// Min-max normalization bounds in kW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub min: f64,
    pub max: f64,
}

impl ScalerParams {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) {
            return Err(Error::NonFinite("scaler bounds".into()));
        }
        if max <= min {
            return Err(Error::DegenerateScale(min));
        }
        Ok(Self { min, max })
    }

    /// Fit on the given values; usually the training split only.
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("cannot fit a scaler on no values"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("scaler input".into()));
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::new(min, max)
    }

    pub fn range(&self) -> f64 {
        self.max - self.min
    }

    pub fn transform(&self, v: f64) -> f64 {
        (v - self.min) / self.range()
    }

    pub fn inverse(&self, s: f64) -> f64 {
        s * self.range() + self.min
    }

    pub fn transform_all(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&v| self.transform(v)).collect()
    }

    pub fn inverse_all(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&v| self.inverse(v)).collect()
    }
}

/// Scale a series onto [0, 1] using its own extremes.
pub fn minmax_scale(series: &TimeSeries) -> Result<(TimeSeries, ScalerParams)> {
    series.require_complete()?;
    let params = ScalerParams::fit(series.values())?;
    let scaled = series.with_values(params.transform_all(series.values()))?;
    Ok((scaled, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::parse_timestamp;
    use proptest::prelude::*;

    fn series(values: Vec<f64>) -> TimeSeries {
        TimeSeries::hourly(parse_timestamp("2021-01-01T00:00").unwrap(), values).unwrap()
    }

    #[test]
    fn endpoints_map_to_unit_interval() {
        let (s, p) = minmax_scale(&series(vec![0.0, 5.0, 10.0])).unwrap();
        assert_eq!(s.values(), &[0.0, 0.5, 1.0]);
        assert_eq!(p, ScalerParams { min: 0.0, max: 10.0 });
        let (s, _) = minmax_scale(&series(vec![20.0, 30.0, 25.0])).unwrap();
        assert_eq!(s.values(), &[0.0, 1.0, 0.5]);
    }

    #[test]
    fn constant_series_is_degenerate() {
        assert!(matches!(
            minmax_scale(&series(vec![3.0; 4])),
            Err(Error::DegenerateScale(v)) if v == 3.0
        ));
    }

    proptest! {
        #[test]
        fn inverse_undoes_transform(values in prop::collection::vec(-1e4f64..1e4, 2..64)) {
            prop_assume!(values.iter().any(|v| *v != values[0]));
            let (scaled, p) = minmax_scale(&series(values.clone())).unwrap();
            for (orig, s) in values.iter().zip(scaled.values()) {
                prop_assert!((0.0..=1.0).contains(s));
                prop_assert!((p.inverse(*s) - orig).abs() <= 1e-12 * orig.abs().max(1.0));
            }
        }
    }
}
