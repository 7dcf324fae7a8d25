//! Real-coded genetic algorithms.
//!
//! [`operators`] holds the building blocks: the load-balance fitness,
//! bounded initialization, tournament selection, simulated binary crossover
//! and linearly decaying Gaussian mutation. [`balance`] assembles them into
//! the steady-state and worst-replacement load balancers, [`search`] into a
//! generational optimizer used for hyperparameter tuning, and [`hyper`] tunes
//! LSTM layer sizes and dropout genes with it.

pub mod balance;
pub mod hyper;
pub mod operators;
pub mod search;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use balance::{
    run_steady_state, run_worst_replacement, BalanceProblem, BalanceResult, PenaltyFn,
};
pub use hyper::{candidate_mae, tune_lstm, LstmSearchSpace, LstmTuneConfig, LstmTuneOutcome, ScoredHyperparams};
pub use operators::{
    adaptive_mutate, init_population, load_balance_fitness, mutation_probability, sbx_beta,
    sbx_crossover, tournament_select,
};
pub use search::{evolve, Candidate, SearchConfig, SearchOutcome, Selection};

/// A candidate gene vector: hourly allocations or hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genes: Vec<f64>,
}

impl Individual {
    pub fn new(genes: Vec<f64>) -> Self {
        Self { genes }
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub tournament_k: usize,
    pub sbx_eta: f64,
    pub base_mutation_prob: f64,
    /// Gaussian mutation standard deviation in kW. `None` uses 5% of the
    /// mean forecast.
    pub mutation_std: Option<f64>,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 20,
            generations: 100,
            tournament_k: 3,
            sbx_eta: 2.0,
            base_mutation_prob: 0.2,
            mutation_std: None,
            seed: 42,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::config("population_size", "must be at least 2"));
        }
        if self.tournament_k < 1 || self.tournament_k > self.population_size {
            return Err(Error::config("tournament_k", "must lie in [1, population_size]"));
        }
        if !(self.sbx_eta > 0.0) {
            return Err(Error::config("sbx_eta", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.base_mutation_prob) {
            return Err(Error::config("base_mutation_prob", "must lie in [0, 1]"));
        }
        if let Some(std) = self.mutation_std {
            if !(std >= 0.0 && std.is_finite()) {
                return Err(Error::config("mutation_std", "must be a non-negative number"));
            }
        }
        Ok(())
    }

    /// Mutation standard deviation for a given forecast.
    pub fn mutation_std_for(&self, forecast: &[f64]) -> f64 {
        self.mutation_std.unwrap_or_else(|| {
            if forecast.is_empty() {
                0.0
            } else {
                0.05 * forecast.iter().sum::<f64>().abs() / forecast.len() as f64
            }
        })
    }
}
