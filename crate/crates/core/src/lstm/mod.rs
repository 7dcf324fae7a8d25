//! Two-layer LSTM regressor mapping a 24-hour scaled window to the next hour.
//!
//! Forward and backward passes are written out by hand (see [`network`]);
//! training uses Adam on mini-batches with inverted dropout after each LSTM
//! layer. Multi-step forecasts feed each prediction back into the window.

mod io;
mod network;
mod train;

use serde::{Deserialize, Serialize};

use crate::data::DEFAULT_WINDOW;
use crate::error::{Error, Result};

pub use io::{load_json, save_json, write_loss_csv, WEIGHTS_FORMAT, WEIGHTS_VERSION};
pub use network::{glorot_bound, ForwardCache, LstmNetwork, Params, Shape, TENSOR_NAMES};
pub use train::{gradient_check, predict_multi, train, Adam, GradientCheck, TrainConfig, TrainOutcome};

/// Neurons in the dense layer between the LSTM stack and the output.
pub const DENSE_UNITS: usize = 25;
pub const UNITS_RANGE: (usize, usize) = (20, 100);
pub const DROPOUT_GENE_RANGE: (usize, usize) = (1, 5);

/// Layer sizes and dropout genes; rate = gene / 10.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct LstmHyperparams {
    pub units1: usize,
    pub units2: usize,
    pub dropout1_gene: usize,
    pub dropout2_gene: usize,
}

impl Default for LstmHyperparams {
    fn default() -> Self {
        Self {
            units1: 50,
            units2: 50,
            dropout1_gene: 2,
            dropout2_gene: 2,
        }
    }
}

impl LstmHyperparams {
    pub fn validate(&self) -> Result<()> {
        let (ulo, uhi) = UNITS_RANGE;
        let (glo, ghi) = DROPOUT_GENE_RANGE;
        for (name, v) in [("units1", self.units1), ("units2", self.units2)] {
            if !(ulo..=uhi).contains(&v) {
                return Err(Error::config(name, format!("{v} outside [{ulo}, {uhi}]")));
            }
        }
        for (name, v) in [("dropout1_gene", self.dropout1_gene), ("dropout2_gene", self.dropout2_gene)] {
            if !(glo..=ghi).contains(&v) {
                return Err(Error::config(name, format!("{v} outside [{glo}, {ghi}]")));
            }
        }
        Ok(())
    }

    pub fn dropout1(&self) -> f64 {
        self.dropout1_gene as f64 / 10.0
    }

    pub fn dropout2(&self) -> f64 {
        self.dropout2_gene as f64 / 10.0
    }

    /// Round a gene vector `[units1, units2, dropout1, dropout2]`.
    pub fn from_genes(genes: &[f64]) -> Result<Self> {
        if genes.len() != 4 {
            return Err(Error::invalid(format!("expected 4 genes, got {}", genes.len())));
        }
        if genes.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::invalid("genes must be finite and non-negative"));
        }
        let hp = Self {
            units1: genes[0].round() as usize,
            units2: genes[1].round() as usize,
            dropout1_gene: genes[2].round() as usize,
            dropout2_gene: genes[3].round() as usize,
        };
        hp.validate()?;
        Ok(hp)
    }

    pub fn genes(&self) -> [f64; 4] {
        [self.units1 as f64, self.units2 as f64, self.dropout1_gene as f64, self.dropout2_gene as f64]
    }

    pub fn shape(&self) -> Shape {
        Shape {
            window: DEFAULT_WINDOW,
            units1: self.units1,
            units2: self.units2,
            dense: DENSE_UNITS,
            dropout1: self.dropout1(),
            dropout2: self.dropout2(),
        }
    }
}

/// Network for valid hyperparameters with a 24-hour window.
pub fn init_network(hp: &LstmHyperparams, seed: u64) -> Result<LstmNetwork> {
    hp.validate()?;
    LstmNetwork::init(hp.shape(), seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates_are_tenths_of_genes() {
        let hp = LstmHyperparams { units1: 20, units2: 100, dropout1_gene: 1, dropout2_gene: 5 };
        assert_eq!(hp.dropout1(), 0.1);
        assert_eq!(hp.dropout2(), 0.5);
        assert!(hp.validate().is_ok());
    }

    #[test]
    fn gene_space_is_enforced() {
        let ok = LstmHyperparams::default();
        for bad in [
            LstmHyperparams { units1: 19, ..ok },
            LstmHyperparams { units2: 101, ..ok },
            LstmHyperparams { dropout1_gene: 0, ..ok },
            LstmHyperparams { dropout2_gene: 6, ..ok },
        ] {
            assert!(init_network(&bad, 0).is_err());
        }
        assert_eq!(LstmHyperparams::from_genes(&[49.6, 20.2, 1.4, 4.5]).unwrap(), LstmHyperparams {
            units1: 50,
            units2: 20,
            dropout1_gene: 1,
            dropout2_gene: 5
        });
        assert!(LstmHyperparams::from_genes(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn layer_one_shape_for_fifty_units() {
        let hp = LstmHyperparams { units1: 50, ..Default::default() };
        let net = init_network(&hp, 1).unwrap();
        // Four gates, each 50 x (1 + 50), stacked.
        assert_eq!(net.params.w1.shape(), (4 * 50, 51));
        assert_eq!(net.params.b1.len(), 200);
        assert_eq!(net.params.wd.shape(), (25, 50));
    }
}
