//! Train the two-layer LSTM on a sine wave, check its gradients, roll it
//! forward two days and save the weights.

use wardwatt::data::{LagMatrix, ScalerParams, TimeSeries, parse_timestamp};
use wardwatt::lstm::{
    gradient_check, init_network, predict_multi, save_json, train, LstmHyperparams, TrainConfig,
};

fn main() -> wardwatt::Result<()> {
    let wave = |t: usize| 0.5 * (std::f64::consts::TAU * t as f64 / 24.0).sin() + 0.5;
    let values: Vec<f64> = (0..500).map(wave).collect();
    let data = LagMatrix::from_values(&values, 24)?;

    let hp = LstmHyperparams { units1: 20, units2: 20, ..Default::default() };
    let net = init_network(&hp, 42)?;
    let check = gradient_check(&net, &values[..24], values[24], 200, 1)?;
    println!("gradient check: max relative error {:.2e} over {} params", check.max_relative_error, check.checked);

    let out = train(&net, &data, &TrainConfig { epochs: 30, ..Default::default() })?;
    println!("loss {:.2e} -> {:.2e}", out.losses[0], out.losses.last().unwrap());

    let start = parse_timestamp("2021-01-04T00:00").expect("valid timestamp");
    let history = TimeSeries::hourly(start, values.clone())?;
    let fc = predict_multi(&out.network, &history, 48, &ScalerParams::new(0.0, 1.0)?)?;
    let mae = fc.values.iter().enumerate().map(|(h, p)| (p - wave(500 + h)).abs()).sum::<f64>() / 48.0;
    println!("48-step roll-out mae {mae:.4}");

    let path = std::env::temp_dir().join("wardwatt-lstm.json");
    save_json(&out.network, &path)?;
    println!("weights -> {}", path.display());
    Ok(())
}
