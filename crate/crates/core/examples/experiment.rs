//! A small seeded batch: success rates per mode and the files it writes.

use std::path::PathBuf;

use adplan::experiment::{run_and_write, ExperimentSpec};
use adplan::GaConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("adplan-example");
    let spec = ExperimentSpec {
        runs: 5,
        config: GaConfig::default(),
        out: Some(out.clone()),
        ..ExperimentSpec::new(PathBuf::from("crates/core/fixtures/oracle/tradeoff6.json"))
    };
    let report = run_and_write(&spec, None)?;
    if let Some(t) = report.target {
        println!("target {} ({:?})", t.fitness, t.source);
    }
    for m in &report.modes {
        println!("mode {}: success {:?} of {}", m.mode, m.successes, m.runs);
    }
    println!("outputs in {}", out.display());
    Ok(())
}
