//! Weight files and loss traces.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::{LstmNetwork, Mat, Params, Shape, TENSOR_NAMES};
use crate::error::{Error, Result};

pub const WEIGHTS_FORMAT: &str = "wardwatt-lstm";
pub const WEIGHTS_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Tensor {
    rows: usize,
    cols: usize,
    /// Row-major values.
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct WeightsFile {
    format: String,
    version: u32,
    shape: Shape,
    tensors: BTreeMap<String, Tensor>,
}

pub fn save_json(net: &LstmNetwork, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let tensors = TENSOR_NAMES
        .iter()
        .zip(net.params.tensors())
        .map(|(name, m)| {
            let data = m.transpose().as_slice().to_vec();
            (name.to_string(), Tensor { rows: m.nrows(), cols: m.ncols(), data })
        })
        .collect();
    let file = WeightsFile {
        format: WEIGHTS_FORMAT.into(),
        version: WEIGHTS_VERSION,
        shape: net.shape,
        tensors,
    };
    let text = serde_json::to_string_pretty(&file)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_json(path: impl AsRef<Path>) -> Result<LstmNetwork> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut file: WeightsFile = serde_json::from_str(&text)?;
    if file.format != WEIGHTS_FORMAT || file.version != WEIGHTS_VERSION {
        return Err(Error::invalid(format!(
            "unsupported weights file {} v{}",
            file.format, file.version
        )));
    }
    let mut params = Params::zeros(&file.shape);
    for (name, slot) in TENSOR_NAMES.iter().zip(params.tensors_mut()) {
        let t = file
            .tensors
            .remove(*name)
            .ok_or_else(|| Error::invalid(format!("weights file lacks {name}")))?;
        if t.rows * t.cols != t.data.len() {
            return Err(Error::invalid(format!("{name} holds {} values for {}x{}", t.data.len(), t.rows, t.cols)));
        }
        *slot = Mat::from_row_slice(t.rows, t.cols, &t.data);
    }
    LstmNetwork::from_params(file.shape, params)
}

/// CSV `epoch,mse`, epochs counted from 1.
pub fn write_loss_csv(losses: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "mse"])?;
    for (e, l) in losses.iter().enumerate() {
        w.write_record([(e + 1).to_string(), l.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_round_trip_exactly() {
        let shape = Shape { window: 24, units1: 3, units2: 4, dense: 25, dropout1: 0.1, dropout2: 0.3 };
        let net = LstmNetwork::init(shape, 12).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.json");
        save_json(&net, &p).unwrap();
        assert_eq!(load_json(&p).unwrap(), net);

        let text = fs::read_to_string(&p).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["tensors"]["lstm1.weight"]["rows"], 12);
        assert_eq!(v["tensors"]["lstm1.weight"]["data"][1].as_f64().unwrap(), net.params.w1[(0, 1)]);
    }

    #[test]
    fn rejects_other_versions() {
        let net = LstmNetwork::init(Shape { window: 4, units1: 1, units2: 1, dense: 2, dropout1: 0.0, dropout2: 0.0 }, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.json");
        save_json(&net, &p).unwrap();
        let text = fs::read_to_string(&p).unwrap().replace("\"version\": 1", "\"version\": 9");
        fs::write(&p, text).unwrap();
        assert!(load_json(&p).is_err());
    }

    #[test]
    fn loss_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("loss.csv");
        write_loss_csv(&[0.5, 0.25], &p).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "epoch,mse\n1,0.5\n2,0.25\n");
    }
}
