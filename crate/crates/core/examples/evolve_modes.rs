//! One seeded run of each GA mode on the same product.

use std::fs::File;

use adplan::{evolve, load_product, FitnessMode, GaConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "crates/core/fixtures/product1.json".into());
    let product = load_product(File::open(&path)?)?;
    for mode in FitnessMode::ALL {
        let cfg = GaConfig { mode, seed: 1, ..GaConfig::default() };
        let r = evolve(&product, &cfg)?;
        println!(
            "mode {mode}: {:?}, weighted fitness {}, {:.0?}",
            r.best_metrics, r.reference_fitness, r.elapsed
        );
    }
    Ok(())
}
