//! Evolutionary search over LSTM layer sizes and dropout genes.

use serde::{Deserialize, Serialize};

use super::search::{evolve, SearchConfig, Selection};
use crate::data::{score, LagMatrix, ScalerParams};
use crate::error::{Error, Result};
use crate::lstm::{init_network, train, LstmHyperparams, TrainConfig, DROPOUT_GENE_RANGE, UNITS_RANGE};

/// Inclusive integer ranges for the four genes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LstmSearchSpace {
    pub units1: (usize, usize),
    pub units2: (usize, usize),
    pub dropout1_gene: (usize, usize),
    pub dropout2_gene: (usize, usize),
}

impl Default for LstmSearchSpace {
    fn default() -> Self {
        Self {
            units1: UNITS_RANGE,
            units2: UNITS_RANGE,
            dropout1_gene: DROPOUT_GENE_RANGE,
            dropout2_gene: DROPOUT_GENE_RANGE,
        }
    }
}

impl LstmSearchSpace {
    pub fn point(hp: &LstmHyperparams) -> Self {
        Self {
            units1: (hp.units1, hp.units1),
            units2: (hp.units2, hp.units2),
            dropout1_gene: (hp.dropout1_gene, hp.dropout1_gene),
            dropout2_gene: (hp.dropout2_gene, hp.dropout2_gene),
        }
    }

    fn bounds(&self) -> Result<Vec<(f64, f64)>> {
        let checks = [
            ("units1", self.units1, UNITS_RANGE),
            ("units2", self.units2, UNITS_RANGE),
            ("dropout1_gene", self.dropout1_gene, DROPOUT_GENE_RANGE),
            ("dropout2_gene", self.dropout2_gene, DROPOUT_GENE_RANGE),
        ];
        checks
            .iter()
            .map(|(name, (lo, hi), (min, max))| {
                if lo > hi || lo < min || hi > max {
                    Err(Error::config(*name, format!("range [{lo}, {hi}] not inside [{min}, {max}]")))
                } else {
                    Ok((*lo as f64, *hi as f64))
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LstmTuneConfig {
    pub population_size: usize,
    /// Fittest members kept and bred each generation.
    pub parents: usize,
    pub generations: usize,
    /// Training budget for each candidate.
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for LstmTuneConfig {
    fn default() -> Self {
        Self {
            population_size: 5,
            parents: 3,
            generations: 5,
            train: TrainConfig { epochs: 5, ..Default::default() },
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredHyperparams {
    pub hyperparams: LstmHyperparams,
    /// Test MAE in original units; infinite when training diverged.
    pub mae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmTuneOutcome {
    pub best: LstmHyperparams,
    pub best_mae: f64,
    /// Every generation's scored population.
    pub generations: Vec<Vec<ScoredHyperparams>>,
}

/// Test-set MAE, in original units, of a network trained from `hp`.
pub fn candidate_mae(
    hp: &LstmHyperparams,
    train_data: &LagMatrix,
    test_data: &LagMatrix,
    scaler: &ScalerParams,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<f64> {
    let net = init_network(hp, seed)?;
    let trained = train(&net, train_data, cfg)?;
    let pred = scaler.inverse_all(&trained.network.predict_rows(&test_data.rows)?);
    let actual = scaler.inverse_all(&test_data.targets);
    Ok(score(&actual, &pred)?.mae)
}

/// Generational search: the `parents` fittest candidates survive each
/// generation and SBX offspring with decaying mutation fill the rest.
/// Fitness is the negative test MAE after a short training run.
pub fn tune_lstm(
    space: &LstmSearchSpace,
    train_data: &LagMatrix,
    test_data: &LagMatrix,
    scaler: &ScalerParams,
    cfg: &LstmTuneConfig,
) -> Result<LstmTuneOutcome> {
    let bounds = space.bounds()?;
    if cfg.population_size < cfg.parents || cfg.parents == 0 {
        return Err(Error::config(
            "population_size",
            format!("population {} cannot hold {} parents", cfg.population_size, cfg.parents),
        ));
    }
    if test_data.is_empty() {
        return Err(Error::invalid("no test rows"));
    }
    cfg.train.validate()?;
    let search = SearchConfig {
        population_size: cfg.population_size,
        generations: cfg.generations,
        selection: Selection::Truncation { parents: cfg.parents },
        sbx_eta: 2.0,
        base_mutation_prob: 0.2,
        mutation_scale: 0.1,
        integer: true,
        seed: cfg.seed,
    };
    let fitness = |genes: &[f64]| {
        let Ok(hp) = LstmHyperparams::from_genes(genes) else {
            return f64::NEG_INFINITY;
        };
        match candidate_mae(&hp, train_data, test_data, scaler, &cfg.train, cfg.seed) {
            Ok(mae) => -mae,
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let out = evolve(&bounds, &search, fitness)?;
    if !out.best.fitness.is_finite() {
        return Err(Error::invalid("every LSTM candidate failed to train"));
    }
    let generations = out
        .generations
        .iter()
        .map(|g| {
            g.iter()
                .map(|c| ScoredHyperparams {
                    hyperparams: LstmHyperparams::from_genes(&c.genes).expect("genes stay in bounds"),
                    mae: -c.fitness,
                })
                .collect()
        })
        .collect();
    Ok(LstmTuneOutcome {
        best: LstmHyperparams::from_genes(&out.best.genes)?,
        best_mae: -out.best.fitness,
        generations,
    })
}
