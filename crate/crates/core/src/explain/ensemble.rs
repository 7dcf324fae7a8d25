//! Bagged forests and gradient-boosted trees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{check_data, fit_cart_rows, CartParams, RegressionTree};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// `None` considers every feature at each split; bagging alone then
    /// decorrelates the trees.
    pub features_per_split: Option<usize>,
    /// Draw each tree's rows with replacement; off trains on every row.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 8,
            min_samples_leaf: 1,
            features_per_split: None,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestSurrogate {
    pub trees: Vec<RegressionTree>,
    pub features_per_split: usize,
    pub seed: u64,
}

impl ForestSurrogate {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Each tree gets its own random stream, so results do not depend on how
/// trees are scheduled across threads.
pub fn fit_forest(features: &[Vec<f64>], targets: &[f64], params: &ForestParams, seed: u64) -> Result<ForestSurrogate> {
    let m = check_data(features, targets)?;
    if params.n_trees == 0 {
        return Err(crate::error::Error::config("n_trees", "must be at least 1"));
    }
    let per_split = params.features_per_split.unwrap_or(m).clamp(1, m);
    let cart = CartParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        features_per_split: Some(per_split),
    };
    let n = targets.len();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            fit_cart_rows(features, targets, rows, &cart, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ForestSurrogate {
        trees,
        features_per_split: per_split,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtParams {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub learning_rate: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            n_rounds: 200,
            max_depth: 4,
            min_samples_leaf: 1,
            learning_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedSurrogate {
    pub base_prediction: f64,
    pub trees: Vec<RegressionTree>,
    pub learning_rate: f64,
    /// Training MSE after each round.
    pub train_mse: Vec<f64>,
}

impl BoostedSurrogate {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.base_prediction + self.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }
}

/// Squared-error boosting: every round fits a tree to the current residuals.
pub fn fit_gbt(features: &[Vec<f64>], targets: &[f64], params: &GbtParams) -> Result<BoostedSurrogate> {
    check_data(features, targets)?;
    if !(params.learning_rate > 0.0 && params.learning_rate.is_finite()) {
        return Err(crate::error::Error::config("learning_rate", "must be positive"));
    }
    let n = targets.len();
    let base = targets.iter().sum::<f64>() / n as f64;
    let mut pred = vec![base; n];
    let cart = CartParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        features_per_split: None,
    };
    // Splits use every feature, so the generator is never drawn from.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut trees = Vec::with_capacity(params.n_rounds);
    let mut train_mse = Vec::with_capacity(params.n_rounds);
    for _ in 0..params.n_rounds {
        let resid: Vec<f64> = targets.iter().zip(&pred).map(|(y, p)| y - p).collect();
        let tree = fit_cart_rows(features, &resid, (0..n).collect(), &cart, &mut rng)?;
        for (p, x) in pred.iter_mut().zip(features) {
            *p += params.learning_rate * tree.predict(x);
        }
        trees.push(tree);
        train_mse.push(targets.iter().zip(&pred).map(|(y, p)| (y - p).powi(2)).sum::<f64>() / n as f64);
    }
    Ok(BoostedSurrogate {
        base_prediction: base,
        trees,
        learning_rate: params.learning_rate,
        train_mse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::tree::fit_cart;

    fn smooth(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| rng.random::<f64>()).collect()).collect();
        let y = x.iter().map(|r| (3.0 * r[0]).sin() + r[1] * r[1] + 0.5 * r[2]).collect();
        (x, y)
    }

    fn r2(pred: &[f64], y: &[f64]) -> f64 {
        let m = y.iter().sum::<f64>() / y.len() as f64;
        let ss_tot: f64 = y.iter().map(|v| (v - m).powi(2)).sum();
        let ss_res: f64 = pred.iter().zip(y).map(|(p, v)| (p - v).powi(2)).sum();
        1.0 - ss_res / ss_tot
    }

    #[test]
    fn degenerate_forest_is_one_cart() {
        let (x, y) = smooth(150, 1);
        let params = ForestParams {
            n_trees: 1,
            features_per_split: Some(4),
            bootstrap: false,
            max_depth: 5,
            ..Default::default()
        };
        let forest = fit_forest(&x, &y, &params, 9).unwrap();
        let tree = fit_cart(&x, &y, 5, 1, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        for r in &x {
            assert_eq!(forest.predict(r), tree.predict(r));
        }
    }

    #[test]
    fn forest_fits_smooth_function() {
        let (x, y) = smooth(2000, 2);
        let params = ForestParams { max_depth: 6, ..Default::default() };
        let forest = fit_forest(&x, &y, &params, 3).unwrap();
        let pred: Vec<f64> = x.iter().map(|r| forest.predict(r)).collect();
        assert!(r2(&pred, &y) >= 0.8, "{}", r2(&pred, &y));
        let again = fit_forest(&x, &y, &params, 3).unwrap();
        assert_eq!(forest, again);
    }

    #[test]
    fn boosting_base_case_and_monotone_loss() {
        let (x, y) = smooth(300, 4);
        let zero = fit_gbt(&x, &y, &GbtParams { n_rounds: 0, ..Default::default() }).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        assert_eq!(zero.predict(&x[0]), mean);

        let b = fit_gbt(&x, &y, &GbtParams { n_rounds: 50, ..Default::default() }).unwrap();
        assert!(b.train_mse.windows(2).all(|w| w[1] <= w[0]));
        assert!(b.train_mse[49] < b.train_mse[0]);
        let direct: f64 = x.iter().zip(&y).map(|(r, v)| (b.predict(r) - v).powi(2)).sum::<f64>() / y.len() as f64;
        assert!((direct - b.train_mse[49]).abs() < 1e-12);
    }

    #[test]
    fn one_full_round_matches_cart_on_centered_targets() {
        let (x, y) = smooth(120, 5);
        let b = fit_gbt(&x, &y, &GbtParams { n_rounds: 1, max_depth: usize::MAX, learning_rate: 1.0, min_samples_leaf: 1 }).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let centered: Vec<f64> = y.iter().map(|v| v - mean).collect();
        let tree = fit_cart(&x, &centered, usize::MAX, 1, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        for (r, v) in x.iter().zip(&y) {
            let boosted_resid = v - b.predict(r);
            let cart_resid = v - mean - tree.predict(r);
            assert!((boosted_resid - cart_resid).abs() < 1e-12);
        }
    }
}
