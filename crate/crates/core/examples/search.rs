//! The generational GA on its own: minimize a shifted sphere in 5
//! dimensions, once with real genes and once on the integer grid.

use wardwatt::ga::{evolve, SearchConfig, Selection};

fn main() -> wardwatt::Result<()> {
    let target = [3.0, -2.0, 0.5, 7.0, -4.0];
    let bounds = vec![(-10.0, 10.0); 5];
    let sphere = |x: &[f64]| -x.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>();

    for integer in [false, true] {
        let cfg = SearchConfig {
            population_size: 30,
            generations: 60,
            selection: Selection::Tournament { k: 3, elite: 2 },
            sbx_eta: 2.0,
            base_mutation_prob: 0.2,
            mutation_scale: 0.1,
            integer,
            seed: 7,
        };
        let out = evolve(&bounds, &cfg, sphere)?;
        let genes: Vec<String> = out.best.genes.iter().map(|g| format!("{g:.2}")).collect();
        println!("integer={integer}: [{}] fitness {:.4} after {} evaluations", genes.join(", "), out.best.fitness, out.evaluations().count());
    }
    Ok(())
}
