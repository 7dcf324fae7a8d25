//! Pearson correlations between the synthetic load components.

use wardwatt::data::{pearson_corr, synth};

fn main() -> wardwatt::Result<()> {
    let frame = synth::generate(&synth::SynthConfig::default())?;
    let m = pearson_corr(&frame.columns)?;
    print!("{:>14}", "");
    for l in &m.labels {
        print!("{l:>14}");
    }
    println!();
    for (l, row) in m.labels.iter().zip(&m.entries) {
        print!("{l:>14}");
        for v in row {
            print!("{v:>14.3}");
        }
        println!();
    }
    Ok(())
}
