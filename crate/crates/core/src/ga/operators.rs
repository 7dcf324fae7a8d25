use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::Individual;
use crate::error::{Error, Result};

/// Negative total absolute deviation of an allocation from the forecast.
pub fn load_balance_fitness(solution: &[f64], forecast: &[f64]) -> Result<f64> {
    if solution.len() != forecast.len() {
        return Err(Error::LengthMismatch {
            left: solution.len(),
            right: forecast.len(),
        });
    }
    Ok(-solution
        .iter()
        .zip(forecast)
        .map(|(s, f)| (s - f).abs())
        .sum::<f64>())
}

/// Each gene `j` uniform on `[0.8 f_j, 1.2 f_j]`.
pub fn init_population<R: Rng + ?Sized>(size: usize, forecast: &[f64], rng: &mut R) -> Result<Vec<Individual>> {
    if size < 2 {
        return Err(Error::invalid("population size must be at least 2"));
    }
    if forecast.is_empty() {
        return Err(Error::invalid("forecast is empty"));
    }
    if let Some(bad) = forecast.iter().find(|f| !(**f >= 0.0) || !f.is_finite()) {
        return Err(Error::invalid(format!(
            "forecast value {bad} is negative or non-finite; initialization bounds would invert"
        )));
    }
    Ok((0..size)
        .map(|_| {
            Individual::new(
                forecast
                    .iter()
                    .map(|&f| {
                        let (lo, hi) = (0.8 * f, 1.2 * f);
                        lo + (hi - lo) * rng.random::<f64>()
                    })
                    .collect(),
            )
        })
        .collect())
}

/// Winner among explicit draws: the highest fitness, first draw on ties.
pub fn tournament_winner(fitnesses: &[f64], draws: &[usize]) -> usize {
    let mut best = draws[0];
    for &d in &draws[1..] {
        if fitnesses[d] > fitnesses[best] {
            best = d;
        }
    }
    best
}

/// Index of the fittest of `k` uniform draws with replacement.
pub fn tournament_select<R: Rng + ?Sized>(fitnesses: &[f64], k: usize, rng: &mut R) -> Result<usize> {
    if k < 1 || k > fitnesses.len() {
        return Err(Error::invalid(format!(
            "tournament size {k} outside [1, {}]",
            fitnesses.len()
        )));
    }
    let draws: Vec<usize> = (0..k).map(|_| rng.random_range(0..fitnesses.len())).collect();
    Ok(tournament_winner(fitnesses, &draws))
}

/// Spread factor for a uniform draw `u`.
pub fn sbx_beta(u: f64, eta: f64) -> f64 {
    let exponent = 1.0 / (eta + 1.0);
    if u <= 0.5 {
        (2.0 * u).powf(exponent)
    } else {
        (1.0 / (2.0 * (1.0 - u))).powf(exponent)
    }
}

/// Simulated binary crossover with the given per-gene uniforms.
pub fn sbx_with_uniforms(p1: &[f64], p2: &[f64], eta: f64, uniforms: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = Vec::with_capacity(p1.len());
    let mut c2 = Vec::with_capacity(p1.len());
    for ((a, b), &u) in p1.iter().zip(p2).zip(uniforms) {
        // 0.5[(1 ± beta) a + (1 ∓ beta) b] written as mean ± spread, which
        // returns coincident parents unchanged in floating point.
        let beta = sbx_beta(u, eta);
        let mean = 0.5 * (a + b);
        let spread = 0.5 * beta * (a - b);
        c1.push(mean + spread);
        c2.push(mean - spread);
    }
    (c1, c2)
}

pub fn sbx_crossover<R: Rng + ?Sized>(
    p1: &Individual,
    p2: &Individual,
    eta: f64,
    rng: &mut R,
) -> Result<(Individual, Individual)> {
    if p1.len() != p2.len() {
        return Err(Error::LengthMismatch {
            left: p1.len(),
            right: p2.len(),
        });
    }
    if !(eta > 0.0) {
        return Err(Error::invalid("SBX distribution index must be positive"));
    }
    // u in (0, 1): u = 1 would send beta to infinity.
    let uniforms: Vec<f64> = (0..p1.len())
        .map(|_| rng.random::<f64>().max(f64::MIN_POSITIVE))
        .collect();
    let (c1, c2) = sbx_with_uniforms(&p1.genes, &p2.genes, eta, &uniforms);
    Ok((Individual::new(c1), Individual::new(c2)))
}

/// `base_prob * (1 - generation / max_generations)`.
pub fn mutation_probability(base_prob: f64, generation: usize, max_generations: usize) -> f64 {
    base_prob * (1.0 - generation as f64 / max_generations as f64)
}

pub fn adaptive_mutate<R: Rng + ?Sized>(
    ind: &Individual,
    generation: usize,
    max_generations: usize,
    base_prob: f64,
    std_dev: f64,
    rng: &mut R,
) -> Result<Individual> {
    if !(0.0..=1.0).contains(&base_prob) {
        return Err(Error::invalid(format!("base mutation probability {base_prob} outside [0, 1]")));
    }
    if max_generations == 0 || generation > max_generations {
        return Err(Error::invalid(format!(
            "generation {generation} outside [0, {max_generations}]"
        )));
    }
    if !(std_dev >= 0.0 && std_dev.is_finite()) {
        return Err(Error::invalid("mutation standard deviation must be non-negative"));
    }
    let p = mutation_probability(base_prob, generation, max_generations);
    let noise = Normal::new(0.0, std_dev).map_err(|e| Error::invalid(e.to_string()))?;
    let genes = ind
        .genes
        .iter()
        .map(|&g| if rng.random::<f64>() < p { g + noise.sample(rng) } else { g })
        .collect();
    Ok(Individual::new(genes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fitness_examples() {
        let f = vec![100.0; 48];
        assert_eq!(load_balance_fitness(&f, &f).unwrap(), 0.0);
        assert_eq!(load_balance_fitness(&vec![101.0; 48], &f).unwrap(), -48.0);
        assert!(load_balance_fitness(&[1.0], &f).is_err());
    }

    proptest! {
        #[test]
        fn fitness_zero_iff_equal(s in prop::collection::vec(-50f64..50.0, 1..20), shift in prop::collection::vec(-1f64..1.0, 20)) {
            prop_assert_eq!(load_balance_fitness(&s, &s).unwrap(), 0.0);
            let other: Vec<f64> = s.iter().zip(&shift).map(|(a, d)| a + d).collect();
            let fit = load_balance_fitness(&other, &s).unwrap();
            if other != s { prop_assert!(fit < 0.0) } else { prop_assert_eq!(fit, 0.0) }
        }

        #[test]
        fn fitness_is_permutation_invariant(pairs in prop::collection::vec((0f64..200.0, 0f64..200.0), 1..30), seed in 0u64..1000) {
            use rand::seq::SliceRandom;
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let split = |v: &[(f64, f64)]| -> (Vec<f64>, Vec<f64>) { v.iter().copied().unzip() };
            let (s1, f1) = split(&pairs);
            let (s2, f2) = split(&shuffled);
            let a = load_balance_fitness(&s1, &f1).unwrap();
            let b = load_balance_fitness(&s2, &f2).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }

        #[test]
        fn sbx_preserves_gene_mean(
            genes in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3, 1e-9f64..1.0), 1..20),
            eta in 0.01f64..50.0,
        ) {
            let p1: Vec<f64> = genes.iter().map(|g| g.0).collect();
            let p2: Vec<f64> = genes.iter().map(|g| g.1).collect();
            let us: Vec<f64> = genes.iter().map(|g| g.2).collect();
            let (c1, c2) = sbx_with_uniforms(&p1, &p2, eta, &us);
            for i in 0..p1.len() {
                let scale = p1[i].abs().max(p2[i].abs()).max(1.0) * sbx_beta(us[i], eta).max(1.0);
                prop_assert!(((c1[i] + c2[i]) / 2.0 - (p1[i] + p2[i]) / 2.0).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn init_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pop = init_population(20, &[100.0; 48], &mut rng).unwrap();
        assert!(pop.iter().flat_map(|i| &i.genes).all(|g| (80.0..=120.0).contains(g)));
        let pop = init_population(5, &[0.0; 4], &mut rng).unwrap();
        assert!(pop.iter().flat_map(|i| &i.genes).all(|g| *g == 0.0));
        assert!(init_population(5, &[10.0, -1.0], &mut rng).is_err());
        assert!(init_population(1, &[10.0], &mut rng).is_err());
    }

    #[test]
    fn init_mean_matches_uniform_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pop = init_population(100_000, &[100.0], &mut rng).unwrap();
        let mean = pop.iter().map(|i| i.genes[0]).sum::<f64>() / 1e5;
        // sd of the mean: 40 / sqrt(12) / sqrt(1e5) ~ 0.037
        assert!((mean - 100.0).abs() < 0.5);
    }

    #[test]
    fn exhaustive_tournament_finds_global_best() {
        let fit = [3.0, -1.0, 9.0, 9.0, 2.0];
        let draws: Vec<usize> = vec![4, 0, 3, 1, 2];
        // Distinct draws covering every member; first-drawn wins a tie.
        assert_eq!(tournament_winner(&fit, &draws), 3);
        assert_eq!(tournament_winner(&fit, &[0, 1, 2, 3, 4]), 2);
    }

    #[test]
    fn unit_tournament_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fit: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let mut counts = [0usize; 10];
        for _ in 0..10_000 {
            counts[tournament_select(&fit, 1, &mut rng).unwrap()] += 1;
        }
        let (n, p): (f64, f64) = (10_000.0, 0.1);
        let sigma = (n * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n * p).abs() < 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn tied_fitness_selects_uniformly() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let fit = vec![1.0; 5];
        let mut counts = [0usize; 5];
        for _ in 0..10_000 {
            counts[tournament_select(&fit, 3, &mut rng).unwrap()] += 1;
        }
        let sigma = (10_000.0f64 * 0.2 * 0.8).sqrt();
        assert!(counts.iter().all(|&c| (c as f64 - 2000.0).abs() < 3.0 * sigma + 1.0), "{counts:?}");
        assert!(tournament_select(&fit, 0, &mut rng).is_err());
        assert!(tournament_select(&fit, 6, &mut rng).is_err());
    }

    #[test]
    fn sbx_edge_cases() {
        let x = vec![1.0, -2.0, 3.5];
        let (c1, c2) = sbx_with_uniforms(&x, &x, 2.0, &[0.1, 0.7, 0.99]);
        assert_eq!(c1, x);
        assert_eq!(c2, x);
        let p1 = vec![1.0, 2.0];
        let p2 = vec![5.0, -4.0];
        assert_eq!(sbx_beta(0.5, 2.0), 1.0);
        let (c1, c2) = sbx_with_uniforms(&p1, &p2, 2.0, &[0.5, 0.5]);
        assert_eq!(c1, p1);
        assert_eq!(c2, p2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sbx_crossover(&Individual::new(p1.clone()), &Individual::new(vec![1.0]), 2.0, &mut rng).is_err());
        assert!(sbx_crossover(&Individual::new(p1.clone()), &Individual::new(p2), 0.0, &mut rng).is_err());
    }

    #[test]
    fn mutation_schedule() {
        assert_eq!(mutation_probability(0.2, 0, 100), 0.2);
        assert_eq!(mutation_probability(0.2, 50, 100), 0.1);
        assert_eq!(mutation_probability(0.2, 100, 100), 0.0);
        for g in 0..=100 {
            let expected = 0.2 * (1.0 - g as f64 / 100.0);
            assert_eq!(mutation_probability(0.2, g, 100), expected);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ind = Individual::new(vec![7.0; 100]);
        assert_eq!(adaptive_mutate(&ind, 100, 100, 0.9, 5.0, &mut rng).unwrap(), ind);
        assert!(adaptive_mutate(&ind, 101, 100, 0.2, 5.0, &mut rng).is_err());
        assert!(adaptive_mutate(&ind, 1, 100, 1.5, 5.0, &mut rng).is_err());
    }

    #[test]
    fn mutation_frequency_matches_schedule() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ind = Individual::new(vec![0.0; 100_000]);
        let out = adaptive_mutate(&ind, 50, 100, 0.2, 1.0, &mut rng).unwrap();
        let changed = out.genes.iter().filter(|g| **g != 0.0).count() as f64;
        let sigma = (1e5f64 * 0.1 * 0.9).sqrt();
        assert!((changed - 1e4).abs() < 3.0 * sigma, "{changed}");
        let full = adaptive_mutate(&Individual::new(vec![0.0; 10_000]), 0, 100, 0.2, 1.0, &mut rng).unwrap();
        let changed = full.genes.iter().filter(|g| **g != 0.0).count() as f64;
        assert!((changed - 2000.0).abs() < 3.0 * (1e4f64 * 0.2 * 0.8).sqrt());
    }
}
