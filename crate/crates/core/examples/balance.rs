//! Balance hourly allocations against a forecast with both GA strategies.

use wardwatt::arima::{fit_arima, ArimaOrder, DEFAULT_BUDGET};
use wardwatt::data::synth;
use wardwatt::ga::{run_steady_state, run_worst_replacement, GaConfig};
use wardwatt::seasonal::{fit_st, StConfig};

fn main() -> wardwatt::Result<()> {
    let series = synth::generate(&synth::SynthConfig::default())?.total()?;
    let cfg = GaConfig::default();

    let arima = fit_arima(&series, ArimaOrder::default(), DEFAULT_BUDGET)?.forecast(48)?;
    let steady = run_steady_state(&arima.values, &cfg)?;
    println!(
        "steady-state on 48 h ARIMA forecast: {:.1} -> {:.1}, mean |dev| {:.2} kW",
        steady.initial_best,
        steady.best_fitness,
        steady.mean_abs_deviation()
    );

    let st = fit_st(&series, &StConfig::default())?.forecast(720)?.take(50);
    let worst = run_worst_replacement(&st.values, &cfg)?;
    println!(
        "worst-replacement on 50 h seasonal forecast: {:.1} -> {:.1} over {} genes",
        worst.initial_best,
        worst.best_fitness,
        worst.best_solution.len()
    );

    let path = std::env::temp_dir().join("wardwatt-steady-history.csv");
    steady.write_history_csv(&path)?;
    println!("history -> {}", path.display());
    Ok(())
}
