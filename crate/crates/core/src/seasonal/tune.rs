//! Prior-scale search on a chronological holdout.

use serde::{Deserialize, Serialize};

use super::{fit_st, StConfig};
use crate::data::{score, TimeSeries};
use crate::error::{Error, Result};
use crate::ga::{evolve, SearchConfig, Selection};

/// Closed intervals for the two prior scales. Both must be positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorRanges {
    pub changepoint: (f64, f64),
    pub seasonality: (f64, f64),
}

impl Default for PriorRanges {
    fn default() -> Self {
        Self {
            changepoint: (0.001, 0.5),
            seasonality: (0.01, 10.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuneSettings {
    pub generations: usize,
    pub population_size: usize,
    /// Share of the series used for fitting; the rest is the holdout.
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for TuneSettings {
    fn default() -> Self {
        Self {
            generations: 50,
            population_size: 10,
            train_fraction: 0.8,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunedCandidate {
    pub changepoint_prior_scale: f64,
    pub seasonality_prior_scale: f64,
    /// Holdout RMSE, infinite when the fit failed.
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneGeneration {
    pub generation: usize,
    pub candidates: Vec<TunedCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneOutcome {
    pub config: StConfig,
    pub best_rmse: f64,
    pub history: Vec<TuneGeneration>,
}

fn check_range(name: &str, (lo, hi): (f64, f64)) -> Result<(f64, f64)> {
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::config(name, format!("empty or non-positive range [{lo}, {hi}]")));
    }
    Ok((lo.log10(), hi.log10()))
}

/// Holdout RMSE of `config` fitted on `train`.
pub fn holdout_rmse(train: &TimeSeries, holdout: &TimeSeries, config: &StConfig) -> Result<f64> {
    let model = fit_st(train, config)?;
    let predicted = model.predict_many(holdout.timestamps());
    Ok(score(holdout.values(), &predicted)?.rmse)
}

/// Search both prior scales on a log10 grid with the genetic engine. Other
/// fields of `base` are kept.
pub fn tune_st(series: &TimeSeries, base: &StConfig, ranges: &PriorRanges, settings: &TuneSettings) -> Result<TuneOutcome> {
    let cp = check_range("changepoint_prior_scale", ranges.changepoint)?;
    let sp = check_range("seasonality_prior_scale", ranges.seasonality)?;
    series.require_complete()?;
    let (train, holdout) = series.split(settings.train_fraction)?;
    // Surface a too-short training span before the search swallows it.
    fit_st(&train, base)?;

    let to_config = |g: &[f64]| StConfig {
        changepoint_prior_scale: 10f64.powf(g[0]),
        seasonality_prior_scale: 10f64.powf(g[1]),
        ..*base
    };
    let cfg = SearchConfig {
        population_size: settings.population_size,
        generations: settings.generations,
        selection: Selection::Tournament { k: 3.min(settings.population_size), elite: 1 },
        sbx_eta: 2.0,
        base_mutation_prob: 0.2,
        mutation_scale: 0.1,
        integer: false,
        seed: settings.seed,
    };
    let out = evolve(&[cp, sp], &cfg, |g| match holdout_rmse(&train, &holdout, &to_config(g)) {
        Ok(rmse) => -rmse,
        Err(_) => f64::NEG_INFINITY,
    })?;
    if !out.best.fitness.is_finite() {
        return Err(Error::invalid("no candidate prior pair could be fitted"));
    }

    let history = out
        .generations
        .iter()
        .enumerate()
        .map(|(generation, cands)| TuneGeneration {
            generation,
            candidates: cands
                .iter()
                .map(|c| {
                    let config = to_config(&c.genes);
                    TunedCandidate {
                        changepoint_prior_scale: config.changepoint_prior_scale,
                        seasonality_prior_scale: config.seasonality_prior_scale,
                        rmse: -c.fitness,
                    }
                })
                .collect(),
        })
        .collect();
    Ok(TuneOutcome {
        config: to_config(&out.best.genes),
        best_rmse: -out.best.fitness,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn noisy_line(n: usize) -> TimeSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 3.0).unwrap();
        let values = (0..n)
            .map(|h| {
                let t = h as f64;
                50.0 + 0.3 * t + 8.0 * (2.0 * std::f64::consts::PI * t / 24.0).sin() + noise.sample(&mut rng)
            })
            .collect();
        let start = NaiveDate::from_ymd_opt(2022, 3, 7).unwrap().and_hms_opt(0, 0, 0).unwrap();
        TimeSeries::hourly(start, values).unwrap()
    }

    fn quick() -> TuneSettings {
        TuneSettings { generations: 8, population_size: 6, ..Default::default() }
    }

    #[test]
    fn tuned_beats_default_and_logs_every_generation() {
        let s = noisy_line(600);
        let base = StConfig::default();
        let settings = TuneSettings { generations: 12, ..quick() };
        let out = tune_st(&s, &base, &PriorRanges::default(), &settings).unwrap();
        assert_eq!(out.history.len(), 12);
        let (train, holdout) = s.split(0.8).unwrap();
        let default_rmse = holdout_rmse(&train, &holdout, &base).unwrap();
        assert!(out.best_rmse <= default_rmse + 1e-9, "{} vs {}", out.best_rmse, default_rmse);
        let recomputed = holdout_rmse(&train, &holdout, &out.config).unwrap();
        assert!((recomputed - out.best_rmse).abs() < 1e-9);
        for g in &out.history {
            for c in &g.candidates {
                assert!(out.best_rmse <= c.rmse);
            }
        }
    }

    #[test]
    fn singleton_ranges_return_the_point() {
        let s = noisy_line(400);
        let ranges = PriorRanges { changepoint: (0.2, 0.2), seasonality: (3.0, 3.0) };
        let out = tune_st(&s, &StConfig::default(), &ranges, &quick()).unwrap();
        assert!((out.config.changepoint_prior_scale - 0.2).abs() < 1e-12);
        assert!((out.config.seasonality_prior_scale - 3.0).abs() < 1e-12);
        assert_eq!(out.history.len(), 8);
    }

    #[test]
    fn rejects_empty_ranges_and_short_holdouts() {
        let s = noisy_line(400);
        let bad = PriorRanges { changepoint: (0.5, 0.1), ..Default::default() };
        assert!(tune_st(&s, &StConfig::default(), &bad, &quick()).is_err());
        let zero = PriorRanges { seasonality: (0.0, 1.0), ..Default::default() };
        assert!(tune_st(&s, &StConfig::default(), &zero, &quick()).is_err());
        let all_train = TuneSettings { train_fraction: 0.999, ..quick() };
        assert!(tune_st(&s, &StConfig::default(), &PriorRanges::default(), &all_train).is_err());
    }
}
