//! Load balancing against a demand forecast.

use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::operators::{adaptive_mutate, init_population, load_balance_fitness, sbx_crossover, tournament_select};
use super::{GaConfig, Individual};
use crate::error::{Error, Result};

/// Extra cost subtracted from the fitness of an allocation.
pub type PenaltyFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceResult {
    pub best_solution: Vec<f64>,
    pub best_fitness: f64,
    /// Best fitness of the initial population.
    pub initial_best: f64,
    /// Best fitness after each generation.
    pub fitness_history: Vec<f64>,
    /// Mean fitness after each generation.
    pub mean_history: Vec<f64>,
}

impl BalanceResult {
    /// CSV `generation,best_fitness,mean_fitness`, generations counted from 1.
    pub fn write_history_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["generation", "best_fitness", "mean_fitness"])?;
        for (g, (b, m)) in self.fitness_history.iter().zip(&self.mean_history).enumerate() {
            w.write_record([(g + 1).to_string(), b.to_string(), m.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// CSV `hour,allocated_kw,forecast_kw`.
    pub fn write_allocation_csv(&self, forecast: &[f64], path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["hour", "allocated_kw", "forecast_kw"])?;
        for (h, (a, f)) in self.best_solution.iter().zip(forecast).enumerate() {
            w.write_record([h.to_string(), a.to_string(), f.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Mean absolute deviation per hour of the best allocation.
    pub fn mean_abs_deviation(&self) -> f64 {
        -self.best_fitness / self.best_solution.len().max(1) as f64
    }
}

/// A forecast to balance against, with optional penalty and gene grid.
#[derive(Clone)]
pub struct BalanceProblem {
    pub forecast: Vec<f64>,
    /// Disabled unless set by the caller.
    pub penalty: Option<PenaltyFn>,
    /// Snap every gene to this many evenly spaced points on `[0.8 f, 1.2 f]`.
    pub grid_points: Option<usize>,
}

impl BalanceProblem {
    pub fn new(forecast: &[f64]) -> Self {
        Self {
            forecast: forecast.to_vec(),
            penalty: None,
            grid_points: None,
        }
    }

    pub fn fitness(&self, solution: &[f64]) -> Result<f64> {
        let base = load_balance_fitness(solution, &self.forecast)?;
        Ok(match &self.penalty {
            Some(p) => base - p(solution),
            None => base,
        })
    }

    fn repair(&self, ind: &mut Individual) {
        let Some(points) = self.grid_points else { return };
        if points < 2 {
            return;
        }
        for (g, &f) in ind.genes.iter_mut().zip(&self.forecast) {
            let lo = 0.8 * f;
            let step = 0.4 * f / (points - 1) as f64;
            if step <= 0.0 {
                *g = lo;
                continue;
            }
            let k = ((*g - lo) / step).round().clamp(0.0, (points - 1) as f64);
            *g = lo + k * step;
        }
    }

    fn initial(&self, cfg: &GaConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Individual>> {
        let mut pop = init_population(cfg.population_size, &self.forecast, rng)?;
        for ind in pop.iter_mut() {
            self.repair(ind);
        }
        Ok(pop)
    }

    fn scores(&self, pop: &[Individual]) -> Result<Vec<f64>> {
        pop.iter().map(|i| self.fitness(&i.genes)).collect()
    }

    /// Steady-state evolution: each generation two tournament-selected
    /// parents produce two SBX offspring which are mutated and replace the
    /// two least fit members.
    pub fn run_steady_state(&self, cfg: &GaConfig) -> Result<BalanceResult> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let pop = self.initial(cfg, &mut rng)?;
        self.steady_state_from(pop, cfg, &mut rng)
    }

    pub fn steady_state_from(
        &self,
        mut pop: Vec<Individual>,
        cfg: &GaConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<BalanceResult> {
        cfg.validate()?;
        let std_dev = cfg.mutation_std_for(&self.forecast);
        let mut fit = self.scores(&pop)?;
        let initial_best = max(&fit);
        let mut history = Vec::with_capacity(cfg.generations);
        let mut means = Vec::with_capacity(cfg.generations);
        for generation in 0..cfg.generations {
            let a = tournament_select(&fit, cfg.tournament_k, rng)?;
            let b = tournament_select(&fit, cfg.tournament_k, rng)?;
            let (c1, c2) = sbx_crossover(&pop[a], &pop[b], cfg.sbx_eta, rng)?;
            let mut c1 = adaptive_mutate(&c1, generation, cfg.generations, cfg.base_mutation_prob, std_dev, rng)?;
            let mut c2 = adaptive_mutate(&c2, generation, cfg.generations, cfg.base_mutation_prob, std_dev, rng)?;
            self.repair(&mut c1);
            self.repair(&mut c2);

            let worst = worst_two(&fit);
            fit[worst[0]] = self.fitness(&c1.genes)?;
            fit[worst[1]] = self.fitness(&c2.genes)?;
            pop[worst[0]] = c1;
            pop[worst[1]] = c2;
            history.push(max(&fit));
            means.push(mean(&fit));
        }
        Ok(self.finish(pop, &fit, initial_best, history, means))
    }

    /// Worst-replacement evolution: each generation the least fit member is
    /// mutated and put back. There is no crossover.
    pub fn run_worst_replacement(&self, cfg: &GaConfig) -> Result<BalanceResult> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let pop = self.initial(cfg, &mut rng)?;
        self.worst_replacement_from(pop, cfg, &mut rng)
    }

    pub fn worst_replacement_from(
        &self,
        mut pop: Vec<Individual>,
        cfg: &GaConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<BalanceResult> {
        cfg.validate()?;
        let std_dev = cfg.mutation_std_for(&self.forecast);
        let mut fit = self.scores(&pop)?;
        let initial_best = max(&fit);
        let mut history = Vec::with_capacity(cfg.generations);
        let mut means = Vec::with_capacity(cfg.generations);
        for generation in 0..cfg.generations {
            let worst = worst_two(&fit)[0];
            let mut mutated = adaptive_mutate(&pop[worst], generation, cfg.generations, cfg.base_mutation_prob, std_dev, rng)?;
            self.repair(&mut mutated);
            fit[worst] = self.fitness(&mutated.genes)?;
            pop[worst] = mutated;
            history.push(max(&fit));
            means.push(mean(&fit));
        }
        Ok(self.finish(pop, &fit, initial_best, history, means))
    }

    fn finish(
        &self,
        pop: Vec<Individual>,
        fit: &[f64],
        initial_best: f64,
        fitness_history: Vec<f64>,
        mean_history: Vec<f64>,
    ) -> BalanceResult {
        let best = best_index(fit);
        BalanceResult {
            best_solution: pop[best].genes.clone(),
            best_fitness: fit[best],
            initial_best,
            fitness_history,
            mean_history,
        }
    }
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Highest fitness, lowest index on ties.
fn best_index(fit: &[f64]) -> usize {
    let mut best = 0;
    for (i, f) in fit.iter().enumerate() {
        if *f > fit[best] {
            best = i;
        }
    }
    best
}

/// Indices of the two lowest fitnesses, lowest index first among ties.
fn worst_two(fit: &[f64]) -> [usize; 2] {
    let mut order: Vec<usize> = (0..fit.len()).collect();
    order.sort_by(|&a, &b| fit[a].total_cmp(&fit[b]).then(a.cmp(&b)));
    [order[0], order[1]]
}

pub fn run_steady_state(forecast: &[f64], cfg: &GaConfig) -> Result<BalanceResult> {
    BalanceProblem::new(forecast).run_steady_state(cfg)
}

pub fn run_worst_replacement(forecast: &[f64], cfg: &GaConfig) -> Result<BalanceResult> {
    BalanceProblem::new(forecast).run_worst_replacement(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn daily_forecast(n: usize) -> Vec<f64> {
        (0..n).map(|h| 500.0 + 80.0 * (h as f64 * std::f64::consts::PI / 12.0).sin()).collect()
    }

    #[test]
    fn worst_two_breaks_ties_by_index() {
        assert_eq!(worst_two(&[1.0, 0.0, 0.0, 0.0]), [1, 2]);
        assert_eq!(worst_two(&[3.0, 2.0, 1.0]), [2, 1]);
        assert_eq!(best_index(&[1.0, 5.0, 5.0]), 1);
    }

    #[test]
    fn steady_state_history_never_drops() {
        let f = daily_forecast(48);
        let r = run_steady_state(&f, &GaConfig::default()).unwrap();
        assert_eq!(r.fitness_history.len(), 100);
        assert!(r.fitness_history.windows(2).all(|w| w[1] >= w[0]));
        assert!(r.best_fitness >= r.initial_best);
        assert_eq!(r.best_fitness, load_balance_fitness(&r.best_solution, &f).unwrap());
        assert_eq!(r.best_fitness, *r.fitness_history.last().unwrap());
    }

    #[test]
    fn zero_generations_returns_initial_best() {
        let cfg = GaConfig { generations: 0, ..Default::default() };
        let r = run_steady_state(&[100.0; 10], &cfg).unwrap();
        assert!(r.fitness_history.is_empty());
        assert_eq!(r.best_fitness, r.initial_best);
    }

    #[test]
    fn runs_are_deterministic() {
        let f = daily_forecast(50);
        let cfg = GaConfig { seed: 9, ..Default::default() };
        assert_eq!(run_steady_state(&f, &cfg).unwrap(), run_steady_state(&f, &cfg).unwrap());
        assert_eq!(run_worst_replacement(&f, &cfg).unwrap(), run_worst_replacement(&f, &cfg).unwrap());
    }

    #[test]
    fn worst_replacement_keeps_exact_solution() {
        let f = daily_forecast(50);
        let problem = BalanceProblem::new(&f);
        let cfg = GaConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut pop = init_population(cfg.population_size, &f, &mut rng).unwrap();
        pop[7] = Individual::new(f.clone());
        let r = problem.worst_replacement_from(pop, &cfg, &mut rng).unwrap();
        assert_eq!(r.best_fitness, 0.0);
        assert_eq!(r.best_solution, f);
        assert!(r.fitness_history.iter().all(|b| *b == 0.0));
    }

    #[test]
    fn worst_replacement_never_loses_best() {
        let f = daily_forecast(50);
        let r = run_worst_replacement(&f, &GaConfig { seed: 3, ..Default::default() }).unwrap();
        assert_eq!(r.best_solution.len(), 50);
        assert!(r.best_fitness >= r.initial_best);
        assert!(r.fitness_history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn penalty_hook_enters_fitness() {
        let f = vec![100.0; 4];
        let mut p = BalanceProblem::new(&f);
        assert_eq!(p.fitness(&f).unwrap(), 0.0);
        p.penalty = Some(Arc::new(|s: &[f64]| s.iter().cloned().fold(0.0, f64::max) * 0.01));
        assert_eq!(p.fitness(&f).unwrap(), -1.0);
    }

    #[test]
    fn grid_repair_snaps() {
        let mut p = BalanceProblem::new(&[100.0, 0.0]);
        p.grid_points = Some(41);
        let mut ind = Individual::new(vec![100.4, 3.0]);
        p.repair(&mut ind);
        assert!((ind.genes[0] - 100.0).abs() < 1e-12);
        assert_eq!(ind.genes[1], 0.0);
    }

    #[test]
    fn two_gene_grid_matches_exhaustive_search() {
        let f = [100.0, 250.0];
        let mut problem = BalanceProblem::new(&f);
        problem.grid_points = Some(41);
        let grid = |j: usize, k: usize| 0.8 * f[j] + k as f64 * 0.4 * f[j] / 40.0;
        let mut best = (f64::NEG_INFINITY, [0.0; 2]);
        for a in 0..41 {
            for b in 0..41 {
                let s = [grid(0, a), grid(1, b)];
                let fit = problem.fitness(&s).unwrap();
                if fit > best.0 {
                    best = (fit, s);
                }
            }
        }
        // Late generations mutate rarely, so a few seeds stall two steps out.
        let mut within_one = 0;
        for seed in 0..100 {
            let r = problem.run_steady_state(&GaConfig { seed, ..Default::default() }).unwrap();
            let off: Vec<f64> = (0..2).map(|j| (r.best_solution[j] - best.1[j]).abs() / (0.4 * f[j] / 40.0)).collect();
            assert!(off.iter().all(|o| *o <= 2.0 + 1e-9), "seed {seed}: {:?}", r.best_solution);
            if off.iter().all(|o| *o <= 1.0 + 1e-9) {
                within_one += 1;
            }
        }
        assert!(within_one >= 85, "{within_one}/100 runs within one grid step");
    }

    #[test]
    fn rejects_bad_config() {
        let f = [1.0, 2.0];
        assert!(run_steady_state(&f, &GaConfig { population_size: 1, ..Default::default() }).is_err());
        assert!(run_steady_state(&f, &GaConfig { tournament_k: 21, ..Default::default() }).is_err());
        assert!(run_worst_replacement(&[-1.0], &GaConfig::default()).is_err());
    }
}
