use std::f64::consts::PI;

use chrono::NaiveDateTime;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{StConfig, CHANGEPOINT_RANGE};
use crate::error::{Error, Result};

/// Maps timestamps to model time and fixes the changepoint grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignLayout {
    pub t0: NaiveDateTime,
    /// Hours spanned by the training history; trend columns are divided by
    /// it before the penalized solve.
    pub time_scale_hours: f64,
    /// Changepoint locations in hours since `t0`.
    pub changepoints: Vec<f64>,
    pub daily_order: usize,
    pub weekly_order: usize,
}

impl DesignLayout {
    pub fn new(t0: NaiveDateTime, span_hours: f64, config: &StConfig) -> Self {
        let n = config.n_changepoints;
        let changepoints = (1..=n)
            .map(|k| CHANGEPOINT_RANGE * span_hours * k as f64 / n as f64)
            .collect();
        Self {
            t0,
            time_scale_hours: span_hours,
            changepoints,
            daily_order: config.daily_order,
            weekly_order: config.weekly_order,
        }
    }

    pub fn hours_since_start(&self, t: NaiveDateTime) -> f64 {
        (t - self.t0).num_seconds() as f64 / 3600.0
    }

    pub fn width(&self) -> usize {
        2 + self.changepoints.len() + 2 * (self.daily_order + self.weekly_order)
    }

    /// Raw design row: `[1, t, hinges..., daily sin/cos..., weekly sin/cos...]`
    /// with `t` in hours.
    pub fn row(&self, h: f64) -> Vec<f64> {
        let mut row = Vec::with_capacity(self.width());
        row.push(1.0);
        row.push(h);
        row.extend(self.changepoints.iter().map(|cp| (h - cp).max(0.0)));
        push_fourier(&mut row, h, 24.0, self.daily_order);
        push_fourier(&mut row, h, 168.0, self.weekly_order);
        row
    }

    pub fn matrix(&self, timestamps: &[NaiveDateTime]) -> DesignMatrix {
        let width = self.width();
        let mut rows = DMatrix::zeros(timestamps.len(), width);
        for (i, t) in timestamps.iter().enumerate() {
            for (j, v) in self.row(self.hours_since_start(*t)).into_iter().enumerate() {
                rows[(i, j)] = v;
            }
        }
        DesignMatrix {
            layout: self.clone(),
            rows,
        }
    }
}

fn push_fourier(row: &mut Vec<f64>, h: f64, period: f64, order: usize) {
    for m in 1..=order {
        let angle = 2.0 * PI * m as f64 * h / period;
        row.push(angle.sin());
        row.push(angle.cos());
    }
}

/// `sum_m a_m sin(2 pi m h / P) + b_m cos(2 pi m h / P)` over sin/cos pairs.
pub(crate) fn fourier_dot(h: f64, period: f64, coeffs: &[f64]) -> f64 {
    coeffs
        .chunks_exact(2)
        .enumerate()
        .map(|(i, ab)| {
            let angle = 2.0 * PI * (i + 1) as f64 * h / period;
            ab[0] * angle.sin() + ab[1] * angle.cos()
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub layout: DesignLayout,
    pub rows: DMatrix<f64>,
}

/// Design over a training history; the first timestamp is `t0`.
pub fn build_design(timestamps: &[NaiveDateTime], config: &StConfig) -> Result<DesignMatrix> {
    let (first, last) = match (timestamps.first(), timestamps.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Err(Error::invalid("cannot build a design over no timestamps")),
    };
    if timestamps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("design timestamps must be increasing"));
    }
    let span = (last - first).num_seconds() as f64 / 3600.0;
    let layout = DesignLayout::new(first, span, config);
    Ok(layout.matrix(timestamps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::parse_timestamp;
    use chrono::Duration;

    fn stamps(n: usize) -> Vec<NaiveDateTime> {
        let t0 = parse_timestamp("2021-01-04T00:00").unwrap();
        (0..n).map(|i| t0 + Duration::hours(i as i64)).collect()
    }

    #[test]
    fn width_for_default_config() {
        let d = build_design(&stamps(168), &StConfig::default()).unwrap();
        assert_eq!(d.rows.ncols(), 41);
        assert_eq!(d.rows.nrows(), 168);
    }

    #[test]
    fn first_row_identities() {
        let cfg = StConfig::default();
        let d = build_design(&stamps(168), &cfg).unwrap();
        let row = d.rows.row(0);
        assert_eq!(row[0], 1.0);
        assert_eq!(row[1], 0.0);
        for k in 0..cfg.n_changepoints {
            assert_eq!(row[2 + k], 0.0);
        }
        let fourier = 2 + cfg.n_changepoints;
        for m in 0..(cfg.daily_order + cfg.weekly_order) {
            assert_eq!(row[fourier + 2 * m], 0.0);
            assert_eq!(row[fourier + 2 * m + 1], 1.0);
        }
    }

    #[test]
    fn daily_columns_repeat_every_24_hours() {
        let cfg = StConfig::default();
        let d = build_design(&stamps(100), &cfg).unwrap();
        let start = 2 + cfg.n_changepoints;
        for j in start..start + 2 * cfg.daily_order {
            assert!((d.rows[(5, j)] - d.rows[(29, j)]).abs() < 1e-12);
        }
    }

    #[test]
    fn changepoints_cover_first_80_percent() {
        let d = build_design(&stamps(101), &StConfig::default()).unwrap();
        let cps = &d.layout.changepoints;
        assert_eq!(cps.len(), 25);
        assert!(cps[0] > 0.0);
        assert!((cps[24] - 80.0).abs() < 1e-12);
        assert!(cps.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn empty_is_an_error() {
        assert!(build_design(&[], &StConfig::default()).is_err());
    }
}
