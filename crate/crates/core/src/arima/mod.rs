//! Non-seasonal ARIMA(p, d, q) fit by conditional sum of squares.
//!
//! On the `d`-times differenced series `w` the model is
//!
//! ```text
//! w[t] = c + sum_i phi_i * w[t-i] + sum_j theta_j * e[t-j] + e[t]
//! ```
//!
//! with pre-sample residuals fixed at zero. Coefficients are found by a
//! Nelder-Mead search that rejects non-stationary or non-invertible points.

mod optim;
mod poly;

use chrono::{Duration, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::data::TimeSeries;
use crate::error::{Error, Result};
use crate::forecast::{Forecast, ModelKind};

pub const DEFAULT_HORIZON: usize = 48;
pub const DEFAULT_BUDGET: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl Default for ArimaOrder {
    fn default() -> Self {
        Self { p: 2, d: 1, q: 2 }
    }
}

impl ArimaOrder {
    pub fn new(p: usize, d: usize, q: usize) -> Self {
        Self { p, d, q }
    }

    /// Fitting needs at least one AR or MA term.
    pub fn validate_for_fit(&self) -> Result<()> {
        if self.p + self.q == 0 {
            return Err(Error::invalid("ARIMA order needs p + q >= 1"));
        }
        Ok(())
    }

    fn n_params(&self) -> usize {
        1 + self.p + self.q
    }
}

/// Apply first differencing `d` times.
pub fn difference(values: &[f64], d: usize) -> Result<Vec<f64>> {
    if values.len() <= d {
        return Err(Error::TooShort {
            needed: d + 1,
            got: values.len(),
        });
    }
    let mut out = values.to_vec();
    for _ in 0..d {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(out)
}

/// Invert [`difference`]. `anchors[k]` is the value immediately preceding the
/// differenced block at differencing level `k` (level 0 is the raw series).
pub fn undifference(diffs: &[f64], anchors: &[f64]) -> Vec<f64> {
    let mut out = diffs.to_vec();
    for &anchor in anchors.iter().rev() {
        let mut level = anchor;
        for v in out.iter_mut() {
            level += *v;
            *v = level;
        }
    }
    out
}

/// Last value of each differencing level 0..d of `values`.
fn level_anchors(values: &[f64], d: usize) -> Vec<f64> {
    let mut anchors = Vec::with_capacity(d);
    let mut level = values.to_vec();
    for _ in 0..d {
        anchors.push(*level.last().expect("non-empty level"));
        level = level.windows(2).map(|w| w[1] - w[0]).collect();
    }
    anchors
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaModel {
    pub order: ArimaOrder,
    pub ar_coeffs: Vec<f64>,
    pub ma_coeffs: Vec<f64>,
    /// Constant on the differenced scale (drift when d = 1).
    pub intercept: f64,
    pub residual_variance: f64,
    /// Last `p + d` training observations on the original scale.
    pub last_observations: Vec<f64>,
    /// Last `q` in-sample residuals, oldest first.
    pub last_residuals: Vec<f64>,
    pub last_timestamp: NaiveDateTime,
    /// Conditional sum of squares at the solution.
    pub css: f64,
}

impl ArimaModel {
    /// Assemble a model from known parameters.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        order: ArimaOrder,
        ar_coeffs: Vec<f64>,
        ma_coeffs: Vec<f64>,
        intercept: f64,
        residual_variance: f64,
        last_observations: Vec<f64>,
        last_residuals: Vec<f64>,
        last_timestamp: NaiveDateTime,
    ) -> Result<Self> {
        if ar_coeffs.len() != order.p || ma_coeffs.len() != order.q {
            return Err(Error::invalid("coefficient vectors do not match the order"));
        }
        if last_observations.len() < order.p + order.d {
            return Err(Error::TooShort {
                needed: order.p + order.d,
                got: last_observations.len(),
            });
        }
        if last_residuals.len() != order.q {
            return Err(Error::invalid("need exactly q trailing residuals"));
        }
        if !poly::is_stationary(&ar_coeffs) {
            return Err(Error::invalid("AR polynomial is not stationary"));
        }
        if !poly::is_invertible(&ma_coeffs) {
            return Err(Error::invalid("MA polynomial is not invertible"));
        }
        if !(residual_variance > 0.0) {
            return Err(Error::invalid("residual variance must be positive"));
        }
        Ok(Self {
            order,
            ar_coeffs,
            ma_coeffs,
            intercept,
            residual_variance,
            last_observations,
            last_residuals,
            last_timestamp,
            css: f64::NAN,
        })
    }

    /// Same coefficients with the forecast origin moved to the end of
    /// `series`; residuals are rebuilt by the conditional recursion.
    pub fn condition_on(&self, series: &TimeSeries) -> Result<Self> {
        series.require_complete()?;
        let ArimaOrder { p, d, q } = self.order;
        let values = series.values();
        let w = difference(values, d)?;
        if w.len() <= p {
            return Err(Error::TooShort { needed: p + d + 1, got: values.len() });
        }
        let residuals = css_residuals(&w, &self.params(), self.order);
        Ok(Self {
            last_observations: values[values.len() - (p + d)..].to_vec(),
            last_residuals: residuals[residuals.len() - q..].to_vec(),
            last_timestamp: series.end(),
            ..self.clone()
        })
    }

    pub fn is_stationary(&self) -> bool {
        poly::is_stationary(&self.ar_coeffs)
    }

    pub fn is_invertible(&self) -> bool {
        poly::is_invertible(&self.ma_coeffs)
    }

    /// Iterated one-step predictions on the differenced scale with future
    /// shocks set to zero.
    pub fn forecast_differenced(&self, horizon: usize) -> Result<Vec<f64>> {
        if horizon < 1 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        let ArimaOrder { p, d, q } = self.order;
        let tail = &self.last_observations[self.last_observations.len() - (p + d)..];
        let mut w: Vec<f64> = if tail.len() > d {
            difference(tail, d)?
        } else {
            Vec::new()
        };
        let mut e = self.last_residuals.clone();
        let mut out = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let mut next = self.intercept;
            for (i, phi) in self.ar_coeffs.iter().enumerate() {
                next += phi * w[w.len() - 1 - i];
            }
            for (j, theta) in self.ma_coeffs.iter().enumerate() {
                next += theta * e[e.len() - 1 - j];
            }
            w.push(next);
            if q > 0 {
                e.push(0.0);
            }
            out.push(next);
        }
        Ok(out)
    }

    pub fn forecast(&self, horizon: usize) -> Result<Forecast> {
        let diffs = self.forecast_differenced(horizon)?;
        let anchors = level_anchors(&self.last_observations, self.order.d);
        Ok(Forecast {
            model: ModelKind::Arima,
            start: self.last_timestamp + Duration::hours(1),
            values: undifference(&diffs, &anchors),
            scaler: None,
        })
    }

    /// In-sample one-step-ahead predictions on the original scale.
    ///
    /// Position `t` holds the prediction of `values[t]` from everything
    /// before it; the first `p + d` positions have no prediction.
    pub fn one_step_predictions(&self, values: &[f64]) -> Result<Vec<Option<f64>>> {
        let ArimaOrder { p, d, .. } = self.order;
        let w = difference(values, d)?;
        let params = self.params();
        let residuals = css_residuals(&w, &params, self.order);
        let mut out = vec![None; values.len()];
        for t in p..w.len() {
            let w_hat = w[t] - residuals[t];
            // values[t + d] = w[t] - sum_{k=1..d} C(d,k) (-1)^k values[t + d - k]
            let mut y = w_hat;
            let mut binom = 1.0;
            for k in 1..=d {
                binom = binom * (d - k + 1) as f64 / k as f64;
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                y -= binom * sign * values[t + d - k];
            }
            out[t + d] = Some(y);
        }
        Ok(out)
    }

    fn params(&self) -> Vec<f64> {
        let mut v = vec![self.intercept];
        v.extend(&self.ar_coeffs);
        v.extend(&self.ma_coeffs);
        v
    }
}

/// Residuals of the conditional recursion; the first `p` are zero.
fn css_residuals(w: &[f64], params: &[f64], order: ArimaOrder) -> Vec<f64> {
    let ArimaOrder { p, q, .. } = order;
    let c = params[0];
    let phi = &params[1..1 + p];
    let theta = &params[1 + p..1 + p + q];
    let mut e = vec![0.0; w.len()];
    for t in p..w.len() {
        let mut pred = c;
        for (i, a) in phi.iter().enumerate() {
            pred += a * w[t - 1 - i];
        }
        for (j, b) in theta.iter().enumerate() {
            if t > j {
                pred += b * e[t - 1 - j];
            }
        }
        e[t] = w[t] - pred;
    }
    e
}

/// Conditional sum of squares; `+inf` outside the stationary and invertible
/// region.
pub fn css_objective(w: &[f64], params: &[f64], order: ArimaOrder) -> f64 {
    let phi = &params[1..1 + order.p];
    let theta = &params[1 + order.p..1 + order.p + order.q];
    if !poly::is_stationary(phi) || !poly::is_invertible(theta) {
        return f64::INFINITY;
    }
    css_residuals(w, params, order)
        .iter()
        .skip(order.p)
        .map(|e| e * e)
        .sum()
}

/// Starting point of the search: zero ARMA coefficients with the intercept at
/// the mean of the differenced series.
pub fn css_start(w: &[f64], order: ArimaOrder) -> Vec<f64> {
    let mut x0 = vec![0.0; order.n_params()];
    x0[0] = w.iter().sum::<f64>() / w.len() as f64;
    x0
}

pub fn fit_arima(series: &TimeSeries, order: ArimaOrder, optimizer_budget: usize) -> Result<ArimaModel> {
    order.validate_for_fit()?;
    series.require_complete()?;
    let values = series.values();
    let needed = 10 * order.n_params();
    let w = if values.len() > order.d {
        difference(values, order.d)?
    } else {
        Vec::new()
    };
    if w.len() < needed {
        return Err(Error::TooShort {
            needed: needed + order.d,
            got: values.len(),
        });
    }

    let x0 = css_start(&w, order);
    let mean = x0[0];
    let sd = (w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / w.len() as f64).sqrt();
    let mut steps = vec![0.1; order.n_params()];
    steps[0] = (0.1 * sd).max(1e-3);

    let objective = |x: &[f64]| css_objective(&w, x, order);
    let min = optim::nelder_mead(objective, &x0, &steps, optimizer_budget, 1e-12);
    if !min.value.is_finite() {
        return Err(Error::Infeasible(optimizer_budget));
    }

    let x = min.x;
    let residuals = css_residuals(&w, &x, order);
    let n_eff = (w.len() - order.p) as f64;
    let residual_variance = min.value / n_eff;
    if !(residual_variance > 0.0) {
        return Err(Error::invalid("fitted residual variance is zero"));
    }
    let keep = order.p + order.d;
    Ok(ArimaModel {
        order,
        ar_coeffs: x[1..1 + order.p].to_vec(),
        ma_coeffs: x[1 + order.p..].to_vec(),
        intercept: x[0],
        residual_variance,
        last_observations: values[values.len() - keep..].to_vec(),
        last_residuals: residuals[residuals.len() - order.q..].to_vec(),
        last_timestamp: series.end(),
        css: min.value,
    })
}

pub fn forecast_arima(model: &ArimaModel, horizon: usize) -> Result<Forecast> {
    model.forecast(horizon)
}
