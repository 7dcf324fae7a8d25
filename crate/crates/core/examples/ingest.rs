//! Write the synthetic dataset to CSV, read it back, clean it and build the
//! scaled lag matrix the LSTM trains on.

use wardwatt::data::{load_series, make_lag_matrix, minmax_scale, preprocess, synth, PreprocessOptions};

fn main() -> wardwatt::Result<()> {
    let dir = std::env::temp_dir().join("wardwatt-ingest");
    std::fs::create_dir_all(&dir).map_err(|e| wardwatt::Error::Io { path: dir.clone(), source: e })?;
    let path = dir.join("synthetic.csv");
    synth::generate(&synth::SynthConfig::default())?.write_csv(&path)?;

    let loaded = load_series(&path, "timestamp", "total_kw")?;
    println!("read {} hourly rows, {} warnings", loaded.series.len(), loaded.warnings.len());
    let clean = preprocess(&loaded.series, PreprocessOptions { forward_fill: true, outlier_3sigma: true })?;
    println!("{} .. {}", clean.start(), clean.end());

    let (train, _test) = clean.split(0.8)?;
    let (scaled, scaler) = minmax_scale(&train)?;
    let lags = make_lag_matrix(&scaled, 24)?;
    println!("scaler min {:.1} max {:.1}; {} lag rows of width {}", scaler.min, scaler.max, lags.len(), lags.window);
    Ok(())
}
