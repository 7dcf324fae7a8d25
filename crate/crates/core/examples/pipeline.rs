//! Evaluate all three models on the bundled dataset, then write the full
//! report with charts. Takes a few minutes on one core.

use wardwatt::pipeline::{emit_report, run_evaluate, run_report, PipelineConfig};

fn main() -> wardwatt::Result<()> {
    let mut cfg = PipelineConfig { output_dir: std::env::temp_dir().join("wardwatt-run"), ..Default::default() };
    cfg.resolve_seed(None)?;
    cfg.validate()?;

    let (eval, _, _) = run_evaluate(&cfg)?;
    for m in &eval.models {
        println!("{:<15} mae {:8.2} rmse {:8.2}", m.model.as_str(), m.metrics.mae, m.metrics.rmse);
    }

    let report = run_report(&cfg)?;
    let manifest = emit_report(&report, &cfg.output_dir)?;
    for f in &manifest.files {
        println!("{:>8} {}", f.bytes, f.file);
    }
    Ok(())
}
