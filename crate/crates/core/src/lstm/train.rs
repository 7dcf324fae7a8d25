//! Adam training, recursive multi-step forecasting and gradient checking.

use chrono::Duration;
use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{LstmNetwork, Params};
use crate::data::{LagMatrix, ScalerParams, TimeSeries};
use crate::error::{Error, Result};
use crate::forecast::{Forecast, ModelKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::config("epochs", "must be at least 1"));
        }
        if self.batch_size < 1 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate", "must be a non-negative number"));
        }
        Ok(())
    }
}

/// Adam optimizer state.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Params,
    v: Params,
    t: i32,
}

impl Adam {
    pub fn new(like: &Params, learning_rate: f64) -> Self {
        let zero = |p: &Params| {
            let mut z = p.clone();
            z.tensors_mut().into_iter().for_each(|t| t.fill(0.0));
            z
        };
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: zero(like),
            v: zero(like),
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut Params, grad: &Params) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.learning_rate, self.epsilon);
        for (((p, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grad.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut())
        {
            for (((p, g), m), v) in p.iter_mut().zip(g.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub network: LstmNetwork,
    /// Training-set MSE with dropout off, measured after each epoch.
    pub losses: Vec<f64>,
}

fn inference_mse(net: &LstmNetwork, data: &LagMatrix) -> Result<f64> {
    let pred = net.predict_rows(&data.rows)?;
    Ok(pred.iter().zip(&data.targets).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / pred.len() as f64)
}

/// Mini-batch Adam on mean squared error with a seeded shuffle each epoch.
pub fn train(net: &LstmNetwork, data: &LagMatrix, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::invalid("no training rows"));
    }
    if data.len() < cfg.batch_size {
        return Err(Error::TooShort { needed: cfg.batch_size, got: data.len() });
    }
    if data.window != net.shape.window {
        return Err(Error::invalid(format!(
            "lag window {} does not match network window {}",
            data.window, net.shape.window
        )));
    }
    if data.targets.iter().chain(data.rows.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training data".into()));
    }

    let mut net = net.clone();
    let mut adam = Adam::new(&net.params, cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let windows: Vec<&[f64]> = batch.iter().map(|&i| data.rows[i].as_slice()).collect();
            let targets: Vec<f64> = batch.iter().map(|&i| data.targets[i]).collect();
            let cache = net.forward_unchecked(&windows, Some(&mut rng));
            let (loss, grad) = net.mse_backward(&cache, &targets);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            adam.step(&mut net.params, &grad);
        }
        let loss = inference_mse(&net, data)?;
        if !loss.is_finite() || !net.params.all_finite() {
            return Err(Error::Diverged { epoch });
        }
        losses.push(loss);
    }
    Ok(TrainOutcome { network: net, losses })
}

/// Roll the network forward `horizon` hours past the end of `history`,
/// feeding each prediction back into the window.
pub fn predict_multi(net: &LstmNetwork, history: &TimeSeries, horizon: usize, scaler: &ScalerParams) -> Result<Forecast> {
    if horizon < 1 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    let w = net.shape.window;
    if history.len() < w {
        return Err(Error::TooShort { needed: w, got: history.len() });
    }
    let mut window = scaler.transform_all(&history.values()[history.len() - w..]);
    let mut values = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let next = net.predict_window(&window)?;
        values.push(scaler.inverse(next));
        window.remove(0);
        window.push(next);
    }
    Ok(Forecast {
        model: ModelKind::Lstm,
        start: history.end() + Duration::hours(1),
        values,
        scaler: Some(*scaler),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    pub checked: usize,
}

/// Compare the analytic squared-error gradient for one sample with central
/// differences (step 1e-5). Checks every parameter when there are at most
/// `min_params`, otherwise a seeded subset of that size.
pub fn gradient_check(net: &LstmNetwork, window: &[f64], target: f64, min_params: usize, seed: u64) -> Result<GradientCheck> {
    const H: f64 = 1e-5;
    let (_, grad) = net.mse_gradient(&[window], &[target])?;
    if !grad.all_finite() {
        return Err(Error::NonFinite("analytic gradient".into()));
    }
    let total = net.param_count();
    let picks: Vec<usize> = if total <= min_params {
        (0..total).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = index::sample(&mut rng, total, min_params).into_vec();
        v.sort_unstable();
        v
    };
    let loss_at = |n: &LstmNetwork| -> Result<f64> { Ok((n.predict_window(window)? - target).powi(2)) };
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for &k in &picks {
        let p = net.params.get(k);
        probe.params.set(k, p + H);
        let up = loss_at(&probe)?;
        probe.params.set(k, p - H);
        let down = loss_at(&probe)?;
        probe.params.set(k, p);
        let numeric = (up - down) / (2.0 * H);
        let analytic = grad.get(k);
        if !numeric.is_finite() {
            return Err(Error::NonFinite("numeric gradient".into()));
        }
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    Ok(GradientCheck {
        max_relative_error: worst,
        checked: picks.len(),
    })
}
