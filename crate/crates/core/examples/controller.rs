//! The fuzzy operator-rate controller: multipliers over its input space,
//! then the rates it chose during a mode D run.

use std::fs::File;

use adplan::{build_controller_system, evolve, load_product, FitnessMode, GaConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fs = build_controller_system();
    println!("stagnation diversity  mutation x  crossover x");
    for s in [0.0, 0.5, 1.0] {
        for d in [0.0, 0.5, 1.0] {
            let out = fs.infer(&[s, d])?;
            println!("{s:>10} {d:>9} {:>11.3} {:>12.3}", out[0], out[1]);
        }
    }

    let product = load_product(File::open("crates/core/fixtures/product1.json")?)?;
    let cfg = GaConfig { mode: FitnessMode::AdaptiveFuzzyControl, seed: 3, max_generations: 100, ..GaConfig::default() };
    let r = evolve(&product, &cfg)?;
    for s in r.stats.iter().step_by(10) {
        println!(
            "gen {:>3}: max {:>5} diversity {:.3} mutation {:.3} crossover {:.3}",
            s.generation, s.max_fitness, s.diversity, s.mutation_prob, s.crossover_rate
        );
    }
    Ok(())
}
