//! Load a product file, inspect what blocks what, and take a part out.
//!
//! cargo run --example load_product -- fixtures/product1.json

use std::fs::File;

use adplan::{load_product, DirectionId, RemovedSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "crates/core/fixtures/product1.json".into());
    let product = load_product(File::open(&path)?)?;
    println!("{}: {} components", product.name(), product.n());

    let nothing = RemovedSet::new(product.n());
    for (part, c) in product.components().iter().enumerate() {
        let free: Vec<&str> = (0..product.direction_count())
            .map(DirectionId)
            .filter(|&d| product.removable(part, d, &nothing))
            .map(|d| product.direction(d).label.as_str())
            .collect();
        let grips: Vec<&str> = c.grippers.iter().map(|&g| product.gripper_label(g)).collect();
        println!("  {part:>2} {:<16} grippers {:<12} free now: {}", c.name, grips.join(","), free.join(" "));
    }

    let reduced = product.reduce(product.n() - 1)?;
    println!("after reducing the last component: {} left", reduced.n());
    Ok(())
}
