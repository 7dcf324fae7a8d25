//! GA search over LSTM layer sizes and dropout, with a small budget.

use wardwatt::data::{minmax_scale, synth, LagMatrix};
use wardwatt::ga::{tune_lstm, LstmSearchSpace, LstmTuneConfig};
use wardwatt::lstm::TrainConfig;

fn main() -> wardwatt::Result<()> {
    let cfg = synth::SynthConfig { hours: 24 * 21, ..Default::default() };
    let series = synth::generate(&cfg)?.total()?;
    let (train, _) = series.split(0.8)?;
    let (_, scaler) = minmax_scale(&train)?;
    let lags = LagMatrix::from_values(&scaler.transform_all(series.values()), 24)?;
    let cut = train.len() - 24;
    let (train_rows, test_rows) = (lags.slice(0..cut), lags.slice(cut..lags.len()));

    let space = LstmSearchSpace { units1: (20, 40), units2: (20, 40), ..Default::default() };
    let tune = LstmTuneConfig { generations: 2, train: TrainConfig { epochs: 2, ..Default::default() }, ..Default::default() };
    let out = tune_lstm(&space, &train_rows, &test_rows, &scaler, &tune)?;
    for (g, pop) in out.generations.iter().enumerate() {
        let maes: Vec<String> = pop.iter().map(|c| format!("{:.1}", c.mae)).collect();
        println!("generation {}: {}", g + 1, maes.join(" "));
    }
    println!("best {:?} with test mae {:.2} kW", out.best, out.best_mae);
    Ok(())
}
