//! Search the changepoint and seasonality prior scales on a holdout.

use wardwatt::data::synth;
use wardwatt::seasonal::{tune_st, PriorRanges, StConfig, TuneSettings};

fn main() -> wardwatt::Result<()> {
    let series = synth::generate(&synth::SynthConfig::default())?.total()?;
    let (train, _) = series.split(0.8)?;
    let settings = TuneSettings { generations: 10, ..Default::default() };
    let out = tune_st(&train, &StConfig::default(), &PriorRanges::default(), &settings)?;
    for g in out.history.iter().step_by(3) {
        let best = g.candidates.iter().map(|c| c.rmse).fold(f64::INFINITY, f64::min);
        println!("generation {:>2}: best holdout rmse {best:.3}", g.generation);
    }
    println!(
        "changepoint {:.4} seasonality {:.4} -> rmse {:.3}",
        out.config.changepoint_prior_scale, out.config.seasonality_prior_scale, out.best_rmse
    );
    Ok(())
}
