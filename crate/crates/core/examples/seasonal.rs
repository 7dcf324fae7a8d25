//! Piecewise-linear trend plus daily and weekly seasonality: forecast 30
//! days, keep the first 50 hours, and write the decomposition.

use wardwatt::data::{score, synth};
use wardwatt::seasonal::{fit_st, StConfig, BALANCE_HOURS, DEFAULT_HORIZON};

fn main() -> wardwatt::Result<()> {
    let series = synth::generate(&synth::SynthConfig::default())?.total()?;
    let (train, test) = series.split(0.8)?;
    let model = fit_st(&train, &StConfig::default())?;
    println!("slope at end of training {:.4} kW/h", model.final_slope());

    let pred = model.predict_many(test.timestamps());
    let m = score(test.values(), &pred)?;
    println!("test span: mae {:.2} rmse {:.2}", m.mae, m.rmse);

    let head = model.forecast(DEFAULT_HORIZON)?.take(BALANCE_HOURS);
    println!("{} hours kept for balancing, first {:.1} kW", head.len(), head.values[0]);

    let path = std::env::temp_dir().join("wardwatt-decomposition.csv");
    model.write_decomposition(test.timestamps(), &path)?;
    println!("components -> {}", path.display());
    Ok(())
}
