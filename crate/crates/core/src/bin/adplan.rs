use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use adplan::experiment::{run_and_write, ExperimentError, ExperimentSpec};
use adplan::oracle::{brute_force_with, OracleOptions};
use adplan::plan::PlanRecord;
use adplan::product::ProductError;
use adplan::{algebraic_fitness, load_product, metrics, FitnessMode, GaConfig, PlanChromosome, ProductModel, Weights};

#[derive(Parser)]
#[command(name = "adplan", version, about = "Disassembly sequence planning with a fuzzy-hybrid GA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one plan for a product and print it as JSON.
    Plan {
        product: PathBuf,
        #[arg(long, default_value = "A")]
        mode: FitnessMode,
        #[arg(long, default_value_t = 80)]
        pop: usize,
        #[arg(long = "mut", default_value_t = 0.8)]
        mutation: f64,
        #[arg(long, default_value_t = 0.4)]
        cross: f64,
        #[arg(long, default_value_t = 300)]
        gens: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "2,1,1")]
        weights: Weights,
        /// Also write curves, report, manifest and plan files here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a batch described by a spec or manifest file.
    Experiment {
        spec: PathBuf,
        /// Overrides the spec's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Exact optimum of a small product.
    Oracle {
        product: PathBuf,
        #[arg(long, default_value_t = 7)]
        cap: usize,
        #[arg(long, default_value = "2,1,1")]
        weights: Weights,
    },
    /// Check a product file and summarize it.
    Validate { product: PathBuf },
}

/// Message plus process exit code.
struct Failure(i32, String);

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        Failure(e.exit_code(), e.to_string())
    }
}

fn load(path: &Path) -> Result<ProductModel, Failure> {
    let file = File::open(path).map_err(|e| Failure(3, format!("{}: {e}", path.display())))?;
    load_product(file).map_err(|e| {
        let code = if matches!(e, ProductError::Io(_)) { 3 } else { 2 };
        Failure(code, format!("{}: {e}", path.display()))
    })
}

fn print_json(value: &impl serde::Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("output serializes");
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure(3, format!("stdout: {e}"))),
        _ => Ok(()),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Plan {
            product,
            mode,
            pop,
            mutation,
            cross,
            gens,
            seed,
            weights,
            out,
        } => {
            let base = GaConfig::default();
            let config = GaConfig {
                population_size: pop,
                mutation_prob: mutation,
                crossover_rate: cross,
                max_generations: gens,
                weights,
                mutation_bounds: [base.mutation_bounds[0].min(mutation), base.mutation_bounds[1].max(mutation)],
                crossover_bounds: [base.crossover_bounds[0].min(cross), base.crossover_bounds[1].max(cross)],
                ..base
            };
            let spec = ExperimentSpec {
                modes: vec![mode],
                runs: 1,
                seed,
                config,
                out,
                ..ExperimentSpec::new(product)
            };
            let report = run_and_write(&spec, Some(1))?;
            let m = &report.modes[0];
            eprintln!(
                "mode {mode}: weighted fitness {} ({:?})",
                m.run_summaries[0].reference_fitness, m.run_summaries[0].best_metrics
            );
            print_json(&m.best_plan)?;
        }
        Command::Experiment { spec, out, workers } => {
            let mut spec = ExperimentSpec::load(&spec)?;
            if out.is_some() {
                spec.out = out;
            }
            let report = run_and_write(&spec, workers)?;
            for m in &report.modes {
                let rate = m.success_rate.map_or("n/a".to_string(), |r| format!("{r:.2}"));
                let last = m.mean_max_fitness.last().copied().unwrap_or(f64::NAN);
                println!("mode {}: success rate {rate}, final mean max fitness {last}", m.mode);
            }
        }
        Command::Oracle { product, cap, weights } => {
            let model = load(&product)?;
            let opts = OracleOptions { cap, ..OracleOptions::default() };
            let r = brute_force_with(&model, &weights, opts).map_err(|e| Failure(2, e.to_string()))?;
            let plans: Vec<PlanRecord> = r
                .optimal_plans
                .iter()
                .map(|p| PlanRecord::new(&model, p, BTreeMap::from([("weighted".to_string(), r.optimal_fitness)])))
                .collect();
            print_json(&serde_json::json!({
                "optimal_fitness": r.optimal_fitness,
                "optimal_metrics": r.optimal_metrics,
                "plan_count": r.plan_count,
                "states_explored": r.states_explored,
                "plans": plans,
            }))?;
        }
        Command::Validate { product } => {
            let model = load(&product)?;
            println!(
                "{}: {} components, {} directions, {} grippers",
                model.name(),
                model.n(),
                model.direction_count(),
                model.gripper_catalog().len()
            );
            if let Some(steps) = model.reference_plan() {
                let plan = PlanChromosome::from_steps(steps);
                let m = metrics(&model, &plan);
                let f = algebraic_fitness(&m, &Weights::default());
                println!("reference plan: l={} o={} g={}, weighted fitness {f}", m.l, m.o, m.g);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code as u8)
        }
    }
}
