//! Pipeline configuration file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::arima::{ArimaOrder, DEFAULT_BUDGET};
use crate::data::synth::SynthConfig;
use crate::error::{Error, Result};
use crate::explain::ShapConfig;
use crate::ga::{GaConfig, LstmSearchSpace, LstmTuneConfig};
use crate::lstm::{LstmHyperparams, TrainConfig};
use crate::seasonal::{PriorRanges, StConfig, TuneSettings, BALANCE_HOURS, DEFAULT_HORIZON};

/// Environment variable consulted for the seed when no flag is given.
pub const SEED_ENV: &str = "WARDWATT_SEED";
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    /// CSV to read; the bundled synthetic generator is used when absent.
    pub path: Option<PathBuf>,
    pub timestamp_column: String,
    pub value_column: String,
    pub forward_fill: bool,
    pub outlier_3sigma: bool,
}

impl Default for InputConfig {
    fn default() -> Self {
        Self {
            path: None,
            timestamp_column: "timestamp".into(),
            value_column: "total_kw".into(),
            forward_fill: true,
            outlier_3sigma: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArimaSection {
    pub order: ArimaOrder,
    pub budget: usize,
    pub horizon: usize,
}

impl Default for ArimaSection {
    fn default() -> Self {
        Self {
            order: ArimaOrder::default(),
            budget: DEFAULT_BUDGET,
            horizon: crate::arima::DEFAULT_HORIZON,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeasonalSection {
    pub model: StConfig,
    pub horizon: usize,
    /// Leading forecast hours handed to worst-replacement balancing.
    pub balance_hours: usize,
    pub tune: TuneSettings,
    pub ranges: PriorRanges,
}

impl Default for SeasonalSection {
    fn default() -> Self {
        Self {
            model: StConfig::default(),
            horizon: DEFAULT_HORIZON,
            balance_hours: BALANCE_HOURS,
            tune: TuneSettings::default(),
            ranges: PriorRanges::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LstmSection {
    pub hyperparams: LstmHyperparams,
    pub train: TrainConfig,
    pub horizon: usize,
    pub tune: LstmTuneConfig,
    pub search: LstmSearchSpace,
}

impl Default for LstmSection {
    fn default() -> Self {
        Self {
            hyperparams: LstmHyperparams::default(),
            train: TrainConfig::default(),
            horizon: 48,
            tune: LstmTuneConfig::default(),
            search: LstmSearchSpace::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainSection {
    /// Run the attribution stage as part of `report`.
    pub enabled: bool,
    pub shap: ShapConfig,
}

impl Default for ExplainSection {
    fn default() -> Self {
        Self {
            enabled: true,
            shap: ShapConfig {
                n_instances: 50,
                n_background: 50,
                ..ShapConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Share of the series used for training.
    pub split: f64,
    /// Hours per rolling forecast when scoring models on the test span.
    pub eval_horizon: usize,
    pub input: InputConfig,
    pub synthetic: SynthConfig,
    pub arima: ArimaSection,
    pub seasonal: SeasonalSection,
    pub lstm: LstmSection,
    pub ga: GaConfig,
    pub explain: ExplainSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            output_dir: PathBuf::from("wardwatt-out"),
            split: 0.8,
            eval_horizon: 48,
            input: InputConfig::default(),
            synthetic: SynthConfig::default(),
            arima: ArimaSection::default(),
            seasonal: SeasonalSection::default(),
            lstm: LstmSection::default(),
            ga: GaConfig::default(),
            explain: ExplainSection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let field = e.span().map(|s| text[s].trim().to_string()).unwrap_or_default();
            Error::config(if field.is_empty() { "config".to_string() } else { field }, e.message().to_string())
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("config", e.to_string()))
    }

    /// Seed precedence: explicit flag, then the environment variable, then
    /// the value already in the file.
    pub fn resolve_seed(&mut self, flag: Option<u64>) -> Result<()> {
        if let Some(s) = flag {
            self.seed = s;
        } else if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::config(SEED_ENV, format!("`{v}` is not an unsigned integer")))?;
        }
        self.apply_seed();
        Ok(())
    }

    /// Every stochastic stage draws from its own generator seeded with the
    /// global seed.
    pub fn apply_seed(&mut self) {
        let s = self.seed;
        self.ga.seed = s;
        self.lstm.train.seed = s;
        self.lstm.tune.seed = s;
        self.lstm.tune.train.seed = s;
        self.seasonal.tune.seed = s;
        self.explain.shap.seed = s;
        self.explain.shap.kernel.seed = s;
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::config("split", "must lie strictly between 0 and 1"));
        }
        for (name, h) in [
            ("eval_horizon", self.eval_horizon),
            ("arima.horizon", self.arima.horizon),
            ("seasonal.horizon", self.seasonal.horizon),
            ("seasonal.balance_hours", self.seasonal.balance_hours),
            ("lstm.horizon", self.lstm.horizon),
        ] {
            if h < 1 {
                return Err(Error::config(name, "must be at least 1"));
            }
        }
        if let Some(p) = &self.input.path {
            if !p.is_file() {
                return Err(Error::config("input.path", format!("{} does not exist", p.display())));
            }
        }
        self.arima.order.validate_for_fit()?;
        self.seasonal.model.validate()?;
        self.lstm.hyperparams.validate()?;
        self.lstm.train.validate()?;
        self.ga.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = PipelineConfig::from_toml("split = 0.75\n[arima.order]\np = 3\n[lstm.hyperparams]\nunits1 = 30\n").unwrap();
        assert_eq!(cfg.split, 0.75);
        assert_eq!(cfg.arima.order, ArimaOrder::new(3, 1, 2));
        assert_eq!(cfg.lstm.hyperparams.units1, 30);
        assert_eq!(cfg.lstm.hyperparams.units2, 50);
        assert_eq!(cfg.seasonal.horizon, 720);
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn violations_name_the_field() {
        let err = PipelineConfig::from_toml("splt = 0.5").unwrap_err();
        assert!(err.to_string().contains("splt"), "{err}");
        let cfg = PipelineConfig { split: 1.5, ..Default::default() };
        assert!(cfg.validate().unwrap_err().to_string().contains("split"));
        let mut cfg = PipelineConfig::default();
        cfg.lstm.hyperparams.units1 = 5;
        assert!(cfg.validate().unwrap_err().to_string().contains("units1"));
    }

    #[test]
    fn flag_seed_wins() {
        let mut cfg = PipelineConfig::default();
        cfg.resolve_seed(Some(7)).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.ga.seed, 7);
        assert_eq!(cfg.explain.shap.kernel.seed, 7);
    }
}
