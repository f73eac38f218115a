//! Exact optimum of a small product by exhaustive search.
//!
//! cargo run --example oracle -- crates/core/fixtures/oracle/box6.json

use std::fs::File;

use adplan::{brute_force_optimal, load_product, Weights};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "crates/core/fixtures/oracle/box6.json".into());
    let product = load_product(File::open(&path)?)?;
    let r = brute_force_optimal(&product, &Weights::default())?;
    println!(
        "{}: optimum {} with {:?}, {} optimal plans, {} states",
        product.name(),
        r.optimal_fitness,
        r.optimal_metrics,
        r.plan_count,
        r.states_explored
    );
    let plan = &r.optimal_plans[0];
    for step in plan.steps() {
        println!(
            "  remove {:<14} along {} with {}",
            product.components()[step.part].name,
            product.direction(step.direction).label,
            product.gripper_label(step.gripper)
        );
    }
    Ok(())
}
