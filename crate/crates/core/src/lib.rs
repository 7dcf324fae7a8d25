//! Hourly facility energy demand forecasting and load balancing.
//!
//! Three forecasters share one data layer:
//!
//! - [`arima`]: ARIMA(p,d,q) fit by conditional sum of squares.
//! - [`seasonal`]: piecewise-linear trend with changepoints plus daily and
//!   weekly Fourier seasonality, fit by penalized least squares.
//! - [`lstm`]: a two-layer LSTM regressor trained with Adam through
//!   backpropagation through time.
//!
//! [`ga`] balances hourly load allocations against a forecast and tunes model
//! hyperparameters. [`explain`] fits tree-ensemble surrogates to each
//! forecaster and attributes their predictions to lag features with kernel
//! SHAP. [`pipeline`] and [`cli`] wire everything together.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod arima;
pub mod cli;
pub mod data;
pub mod error;
pub mod explain;
pub mod forecast;
pub mod ga;
mod linalg;
pub mod lstm;
pub mod pipeline;
pub mod seasonal;

pub use error::{Error, Result};
pub use forecast::{Forecast, ModelKind};
