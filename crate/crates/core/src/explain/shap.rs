//! Kernel SHAP: Shapley values as a constrained weighted regression over
//! feature coalitions, with absent features averaged over a background set.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::solve_spd;

/// Largest feature count solved by full coalition enumeration.
pub const EXACT_MAX_FEATURES: usize = 12;
const RIDGE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelShapSettings {
    /// Coalitions drawn when enumeration is too large (in complementary pairs).
    pub n_coalitions: usize,
    pub seed: u64,
}

impl Default for KernelShapSettings {
    fn default() -> Self {
        Self {
            n_coalitions: 2048,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapValues {
    pub values: Vec<f64>,
    /// Mean prediction over the background.
    pub base_value: f64,
    pub prediction: f64,
    pub exact: bool,
}

impl ShapValues {
    /// |base + sum(phi) - f(x)|.
    pub fn efficiency_gap(&self) -> f64 {
        (self.base_value + self.values.iter().sum::<f64>() - self.prediction).abs()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Shapley kernel weight of a coalition of `size` out of `m` features.
pub fn kernel_weight(m: usize, size: usize) -> f64 {
    (m - 1) as f64 / (binomial(m, size) * size as f64 * (m - size) as f64)
}

/// Coalitions as bit masks over `m <= 63` features with their weights.
fn coalitions(m: usize, settings: &KernelShapSettings) -> (Vec<u64>, Vec<f64>, bool) {
    if m <= EXACT_MAX_FEATURES {
        let masks: Vec<u64> = (1..(1u64 << m) - 1).collect();
        let weights = masks.iter().map(|z| kernel_weight(m, z.count_ones() as usize)).collect();
        return (masks, weights, true);
    }
    // Sizes drawn in proportion to their total kernel mass, members uniform.
    let size_mass: Vec<f64> = (1..m).map(|s| kernel_weight(m, s) * binomial(m, s)).collect();
    let total: f64 = size_mass.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut counts: BTreeMap<u64, f64> = BTreeMap::new();
    let full = (1u64 << m) - 1;
    for _ in 0..settings.n_coalitions.div_ceil(2).max(1) {
        let mut u = rng.random::<f64>() * total;
        let mut size = m - 1;
        for (k, w) in size_mass.iter().enumerate() {
            if u < *w {
                size = k + 1;
                break;
            }
            u -= w;
        }
        let mask = index::sample(&mut rng, m, size).iter().fold(0u64, |z, i| z | (1 << i));
        *counts.entry(mask).or_default() += 1.0;
        *counts.entry(full ^ mask).or_default() += 1.0;
    }
    let (masks, weights) = counts.into_iter().unzip();
    (masks, weights, false)
}

/// Kernel SHAP values of `instance` for the black box `predict`.
///
/// With at most 12 features every coalition is enumerated; otherwise
/// `settings.n_coalitions` are sampled in complementary pairs. The
/// efficiency constraint is imposed exactly by eliminating the last
/// feature; the normal equations carry a 1e-10 ridge.
pub fn kernel_shap<F>(predict: F, instance: &[f64], background: &[Vec<f64>], settings: &KernelShapSettings) -> Result<ShapValues>
where
    F: Fn(&[f64]) -> f64,
{
    let m = instance.len();
    if background.is_empty() {
        return Err(Error::invalid("background set is empty"));
    }
    if m == 0 || m > 63 {
        return Err(Error::invalid(format!("cannot explain {m} features")));
    }
    if let Some(bad) = background.iter().find(|b| b.len() != m) {
        return Err(Error::LengthMismatch { left: m, right: bad.len() });
    }
    let base = background.iter().map(|b| predict(b)).sum::<f64>() / background.len() as f64;
    let fx = predict(instance);
    if !(base.is_finite() && fx.is_finite()) {
        return Err(Error::NonFinite("black-box prediction".into()));
    }
    if m == 1 {
        return Ok(ShapValues { values: vec![fx - base], base_value: base, prediction: fx, exact: true });
    }

    let (masks, mut weights, exact) = coalitions(m, settings);
    let wsum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= wsum);

    let mut row = vec![0.0; m];
    let values: Vec<f64> = masks
        .iter()
        .map(|&z| {
            let mut acc = 0.0;
            for b in background {
                for j in 0..m {
                    row[j] = if z >> j & 1 == 1 { instance[j] } else { b[j] };
                }
                acc += predict(&row);
            }
            acc / background.len() as f64
        })
        .collect();

    // phi_last = (fx - base) - sum(others): regress on z_j - z_last.
    let k = m - 1;
    let delta = fx - base;
    let mut xtwx = DMatrix::<f64>::zeros(k, k);
    let mut xtwy = DVector::<f64>::zeros(k);
    let mut x = vec![0.0; k];
    for ((&z, &w), &v) in masks.iter().zip(&weights).zip(&values) {
        let last = (z >> k & 1) as f64;
        for (j, xj) in x.iter_mut().enumerate() {
            *xj = (z >> j & 1) as f64 - last;
        }
        let y = v - base - last * delta;
        for a in 0..k {
            if x[a] == 0.0 {
                continue;
            }
            xtwy[a] += w * x[a] * y;
            for b in 0..k {
                xtwx[(a, b)] += w * x[a] * x[b];
            }
        }
    }
    for a in 0..k {
        xtwx[(a, a)] += RIDGE;
    }
    let phi = solve_spd(xtwx, &xtwy, "kernel SHAP regression")?;
    let mut out: Vec<f64> = phi.iter().copied().collect();
    out.push(delta - out.iter().sum::<f64>());
    Ok(ShapValues { values: out, base_value: base, prediction: fx, exact })
}
