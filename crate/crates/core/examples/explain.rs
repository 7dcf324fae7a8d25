//! Kernel SHAP on a known linear function, then surrogate attribution of
//! an ARIMA model over its 24 lag features.

use wardwatt::arima::{fit_arima, ArimaOrder, DEFAULT_BUDGET};
use wardwatt::data::synth;
use wardwatt::explain::{kernel_shap, shap_report, KernelShapSettings, ShapConfig};

fn main() -> wardwatt::Result<()> {
    let beta = [2.0, -1.0, 0.5];
    let background = vec![vec![0.0, 0.0, 0.0], vec![1.0, 2.0, 3.0]];
    let x = [1.0, 1.0, 1.0];
    let phi = kernel_shap(|r: &[f64]| r.iter().zip(&beta).map(|(a, b)| a * b).sum(), &x, &background, &KernelShapSettings::default())?;
    println!("linear: phi {:?} base {:.2} (exact {})", phi.values, phi.base_value, phi.exact);

    let series = synth::generate(&synth::SynthConfig { hours: 24 * 28, ..Default::default() })?.total()?;
    let model = fit_arima(&series, ArimaOrder::default(), DEFAULT_BUDGET)?;
    let cfg = ShapConfig { n_instances: 30, n_background: 30, ..Default::default() };
    let report = shap_report(&model, &series, &cfg)?;
    println!("surrogate {:?}, holdout r2 {:.3}", report.surrogate, report.holdout_r2);
    for f in report.top(5) {
        println!("{:>7} {:8.2}", f.name, f.mean_abs_shap);
    }
    Ok(())
}
