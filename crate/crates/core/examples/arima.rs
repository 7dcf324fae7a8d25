//! Fit ARIMA(2,1,2) by conditional sum of squares and forecast two days.

use wardwatt::arima::{fit_arima, ArimaOrder, DEFAULT_BUDGET};
use wardwatt::data::{score, synth};

fn main() -> wardwatt::Result<()> {
    let series = synth::generate(&synth::SynthConfig::default())?.total()?;
    let (train, test) = series.split(0.8)?;
    let model = fit_arima(&train, ArimaOrder::new(2, 1, 2), DEFAULT_BUDGET)?;
    println!("ar {:?} ma {:?} intercept {:.4}", model.ar_coeffs, model.ma_coeffs, model.intercept);
    println!("stationary {} invertible {}", model.is_stationary(), model.is_invertible());

    let fc = model.forecast(48)?;
    let m = score(&test.values()[..48], &fc.values)?;
    println!("48 h ahead: mae {:.2} rmse {:.2}", m.mae, m.rmse);

    // Move the origin forward a day without refitting.
    let (seen, _) = series.split_at(train.len() + 24)?;
    let next = model.condition_on(&seen)?.forecast(24)?;
    println!("next day starts {} at {:.1} kW", next.start, next.values[0]);
    Ok(())
}
