//! Generational real-coded search over a bounded box.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::operators::{adaptive_mutate, sbx_crossover, tournament_select};
use super::Individual;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Selection {
    /// Parents drawn by `k`-way tournament; the `elite` best survive.
    Tournament { k: usize, elite: usize },
    /// The `parents` fittest members survive and breed the rest.
    Truncation { parents: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub population_size: usize,
    pub generations: usize,
    pub selection: Selection,
    pub sbx_eta: f64,
    pub base_mutation_prob: f64,
    /// Mutation standard deviation as a fraction of each gene's range.
    pub mutation_scale: f64,
    /// Round genes to integers after every operator.
    pub integer: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub genes: Vec<f64>,
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    /// Fittest candidate ever evaluated (earliest on ties).
    pub best: Candidate,
    /// Every generation's evaluated population, in order.
    pub generations: Vec<Vec<Candidate>>,
}

impl SearchOutcome {
    pub fn evaluations(&self) -> impl Iterator<Item = &Candidate> {
        self.generations.iter().flatten()
    }
}

fn key(genes: &[f64]) -> Vec<u64> {
    genes.iter().map(|g| g.to_bits()).collect()
}

/// Maximize `fitness` over `bounds`. Non-finite or NaN fitness counts as
/// `-inf`. Each distinct gene vector is evaluated once; evaluations inside a
/// generation run in parallel.
pub fn evolve<F>(bounds: &[(f64, f64)], cfg: &SearchConfig, fitness: F) -> Result<SearchOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if bounds.is_empty() {
        return Err(Error::invalid("search space has no genes"));
    }
    if let Some((lo, hi)) = bounds.iter().find(|(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite()) {
        return Err(Error::invalid(format!("empty search range [{lo}, {hi}]")));
    }
    if cfg.population_size < 2 {
        return Err(Error::config("population_size", "must be at least 2"));
    }
    if cfg.generations < 1 {
        return Err(Error::config("generations", "must be at least 1"));
    }
    match cfg.selection {
        Selection::Truncation { parents } if parents < 1 || parents > cfg.population_size => {
            return Err(Error::config("parents", "population is smaller than the parent count"));
        }
        Selection::Tournament { k, elite } if k < 1 || k > cfg.population_size || elite >= cfg.population_size => {
            return Err(Error::config("tournament", "k or elite count out of range"));
        }
        _ => {}
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let repair = |genes: &mut Vec<f64>| {
        for (g, (lo, hi)) in genes.iter_mut().zip(bounds) {
            let v = if cfg.integer { g.round() } else { *g };
            *g = v.clamp(*lo, *hi);
        }
    };

    let mut pop: Vec<Vec<f64>> = (0..cfg.population_size)
        .map(|_| {
            let mut genes: Vec<f64> = bounds.iter().map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>()).collect();
            repair(&mut genes);
            genes
        })
        .collect();

    let mut cache: HashMap<Vec<u64>, f64> = HashMap::new();
    let mut generations = Vec::with_capacity(cfg.generations);
    let mut best: Option<Candidate> = None;

    for generation in 0..cfg.generations {
        let mut fresh: Vec<Vec<f64>> = Vec::new();
        for genes in &pop {
            if !cache.contains_key(&key(genes)) && !fresh.iter().any(|f| f == genes) {
                fresh.push(genes.clone());
            }
        }
        let scored: Vec<f64> = fresh
            .par_iter()
            .map(|g| {
                let f = fitness(g);
                if f.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    f
                }
            })
            .collect();
        for (g, f) in fresh.iter().zip(scored) {
            cache.insert(key(g), f);
        }
        let evaluated: Vec<Candidate> = pop
            .iter()
            .map(|g| Candidate {
                genes: g.clone(),
                fitness: cache[&key(g)],
            })
            .collect();
        for c in &evaluated {
            if best.as_ref().is_none_or(|b| c.fitness > b.fitness) {
                best = Some(c.clone());
            }
        }
        let fit: Vec<f64> = evaluated.iter().map(|c| c.fitness).collect();
        generations.push(evaluated);
        if generation + 1 == cfg.generations {
            break;
        }

        let mut ranked: Vec<usize> = (0..pop.len()).collect();
        ranked.sort_by(|&a, &b| fit[b].total_cmp(&fit[a]).then(a.cmp(&b)));
        let (survivors, pick_parent): (usize, Box<dyn Fn(&mut ChaCha8Rng, usize) -> Result<usize>>) = match cfg.selection {
            Selection::Truncation { parents } => {
                let ranked = ranked.clone();
                (parents, Box::new(move |_, slot| Ok(ranked[slot % parents])))
            }
            Selection::Tournament { k, elite } => {
                let fit = fit.clone();
                (elite, Box::new(move |rng, _| tournament_select(&fit, k, rng)))
            }
        };

        let mut next: Vec<Vec<f64>> = ranked[..survivors].iter().map(|&i| pop[i].clone()).collect();
        let mut slot = 0;
        while next.len() < cfg.population_size {
            let a = pick_parent(&mut rng, slot)?;
            let b = pick_parent(&mut rng, slot + 1)?;
            slot += 1;
            let (c1, c2) = sbx_crossover(&Individual::new(pop[a].clone()), &Individual::new(pop[b].clone()), cfg.sbx_eta, &mut rng)?;
            for child in [c1, c2] {
                if next.len() == cfg.population_size {
                    break;
                }
                let mut genes = Vec::with_capacity(bounds.len());
                for (j, (lo, hi)) in bounds.iter().enumerate() {
                    let one = Individual::new(vec![child.genes[j]]);
                    let std = cfg.mutation_scale * (hi - lo);
                    let m = adaptive_mutate(&one, generation, cfg.generations, cfg.base_mutation_prob, std, &mut rng)?;
                    genes.push(m.genes[0]);
                }
                repair(&mut genes);
                next.push(genes);
            }
        }
        pop = next;
    }

    Ok(SearchOutcome {
        best: best.expect("at least one generation evaluated"),
        generations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(selection: Selection) -> SearchConfig {
        SearchConfig {
            population_size: 12,
            generations: 30,
            selection,
            sbx_eta: 2.0,
            base_mutation_prob: 0.3,
            mutation_scale: 0.1,
            integer: false,
            seed: 1,
        }
    }

    #[test]
    fn finds_sphere_minimum() {
        let out = evolve(&[(-5.0, 5.0), (-5.0, 5.0)], &cfg(Selection::Tournament { k: 3, elite: 1 }), |g| {
            -(g[0] - 1.0).powi(2) - (g[1] + 2.0).powi(2)
        })
        .unwrap();
        assert_eq!(out.generations.len(), 30);
        assert!(out.best.fitness > -0.05, "{:?}", out.best);
        assert!(out.evaluations().all(|c| c.fitness <= out.best.fitness));
    }

    #[test]
    fn truncation_integer_search_respects_bounds() {
        let mut c = cfg(Selection::Truncation { parents: 3 });
        c.integer = true;
        c.population_size = 5;
        c.generations = 5;
        let bounds = [(20.0, 100.0), (1.0, 5.0)];
        let out = evolve(&bounds, &c, |g| -(g[0] - 64.0).abs() - (g[1] - 2.0).abs()).unwrap();
        for cand in out.evaluations() {
            for (g, (lo, hi)) in cand.genes.iter().zip(&bounds) {
                assert_eq!(g.fract(), 0.0);
                assert!(g >= lo && g <= hi);
            }
        }
    }

    #[test]
    fn singleton_space_returns_the_point() {
        let out = evolve(&[(3.0, 3.0)], &cfg(Selection::Tournament { k: 2, elite: 1 }), |g| g[0]).unwrap();
        assert_eq!(out.best.genes, vec![3.0]);
    }

    #[test]
    fn nan_fitness_is_worst() {
        let out = evolve(&[(0.0, 1.0)], &cfg(Selection::Truncation { parents: 2 }), |g| if g[0] > 0.5 { f64::NAN } else { g[0] }).unwrap();
        assert!(out.best.genes[0] <= 0.5);
    }

    #[test]
    fn rejects_bad_inputs() {
        let c = cfg(Selection::Truncation { parents: 13 });
        assert!(evolve(&[(0.0, 1.0)], &c, |g| g[0]).is_err());
        assert!(evolve(&[(2.0, 1.0)], &cfg(Selection::Truncation { parents: 2 }), |g| g[0]).is_err());
    }

    #[test]
    fn deterministic() {
        let c = cfg(Selection::Tournament { k: 3, elite: 2 });
        let f = |g: &[f64]| -(g[0] * g[1]).sin().abs();
        assert_eq!(evolve(&[(0.0, 3.0), (0.0, 3.0)], &c, f).unwrap(), evolve(&[(0.0, 3.0), (0.0, 3.0)], &c, f).unwrap());
    }
}
