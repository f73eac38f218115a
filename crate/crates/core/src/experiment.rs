//! Seeded batches of GA runs: spec loading, a worker pool, aggregation into
//! mean-of-max curves and success rates, and the files written for a batch.
//!
//! Every run is keyed by its seed and results are aggregated in seed order,
//! so the number of workers never changes an output byte. The manifest
//! written next to the results is itself a valid spec and replays the batch.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::fitness::{algebraic_fitness, FitnessMode};
use crate::ga::{evolve, GaConfig, GaError, RunResult};
use crate::oracle::{brute_force_with, OracleOptions};
use crate::plan::{metrics, PlanChromosome, PlanMetrics, PlanRecord};
use crate::product::{load_product, ProductError, ProductModel};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment spec: {0}")]
    Spec(String),
    #[error("{path}: {source}")]
    Product { path: PathBuf, source: ProductError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Ga(#[from] GaError),
    #[error("run aborted (mode {mode}, seed {seed}): {message}")]
    RunPanicked { mode: FitnessMode, seed: u64, message: String },
}

impl ExperimentError {
    /// Process exit code: 2 for invalid input, 3 for I/O failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Spec(_) | ExperimentError::Json { .. } | ExperimentError::Ga(_) => 2,
            ExperimentError::Product { source, .. } => match source {
                ProductError::Io(_) => 3,
                _ => 2,
            },
            ExperimentError::Io { .. } => 3,
            ExperimentError::RunPanicked { .. } => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn default_modes() -> Vec<FitnessMode> {
    FitnessMode::ALL.to_vec()
}

fn default_runs() -> usize {
    20
}

fn default_cap() -> usize {
    OracleOptions::default().cap
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Product file; relative paths are resolved against the spec file.
    pub product: PathBuf,
    #[serde(default = "default_modes")]
    pub modes: Vec<FitnessMode>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Run `i` uses seed `seed + i`.
    #[serde(default)]
    pub seed: u64,
    /// Base GA settings. `mode`, `seed` and `target_fitness` are set per run.
    #[serde(default)]
    pub config: GaConfig,
    /// Success target. Without one, products up to `oracle_cap` components
    /// use the exact optimum and larger ones their reference plan.
    #[serde(default)]
    pub target_fitness: Option<f64>,
    #[serde(default = "default_cap")]
    pub oracle_cap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn new(product: impl Into<PathBuf>) -> Self {
        ExperimentSpec {
            product: product.into(),
            modes: default_modes(),
            runs: default_runs(),
            seed: 0,
            config: GaConfig::default(),
            target_fitness: None,
            oracle_cap: default_cap(),
            out: None,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.runs == 0 {
            return Err(ExperimentError::Spec("runs must be at least 1".into()));
        }
        if self.modes.is_empty() {
            return Err(ExperimentError::Spec("modes must not be empty".into()));
        }
        let mut seen = self.modes.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.modes.len() {
            return Err(ExperimentError::Spec("modes must not repeat".into()));
        }
        if self.seed.checked_add(self.runs as u64 - 1).is_none() {
            return Err(ExperimentError::Spec("seed range overflows".into()));
        }
        if self.target_fitness.is_some_and(|t| !t.is_finite()) {
            return Err(ExperimentError::Spec("target_fitness must be finite".into()));
        }
        self.config.validate()?;
        Ok(())
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> {
        let base = self.seed;
        (0..self.runs as u64).map(move |i| base + i)
    }

    /// Reads a spec, or the `spec` section of a manifest. Relative product
    /// and output paths are resolved against the file's directory. A
    /// manifest's fixture hash is checked against the product on disk.
    pub fn load(path: &Path) -> Result<ExperimentSpec, ExperimentError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let json_err = |source| ExperimentError::Json {
            path: path.to_path_buf(),
            source,
        };
        let value: serde_json::Value = serde_json::from_str(&text).map_err(json_err)?;
        let (spec_value, expected_hash) = match value.get("manifest_version") {
            Some(_) => {
                let m: Manifest = serde_json::from_value(value).map_err(json_err)?;
                (m.spec, Some(m.product_sha256))
            }
            None => (value, None),
        };
        let mut spec: ExperimentSpec = serde_json::from_value(spec_value).map_err(json_err)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if spec.product.is_relative() {
            spec.product = base.join(&spec.product);
        }
        if let Some(out) = spec.out.as_mut().filter(|o| o.is_relative()) {
            *out = base.join(&*out);
        }
        if let Some(expected) = expected_hash {
            let bytes = fs::read(&spec.product).map_err(io_err(&spec.product))?;
            if sha256_hex(&bytes) != expected {
                return Err(ExperimentError::Spec(format!(
                    "{} changed since the manifest was written",
                    spec.product.display()
                )));
            }
        }
        Ok(spec)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSource {
    Configured,
    Oracle,
    ReferencePlan,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub fitness: f64,
    pub source: TargetSource,
}

/// Everything needed to reproduce a batch: the resolved spec, the product
/// hash and the seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub crate_version: String,
    pub spec: serde_json::Value,
    pub product_sha256: String,
    pub seeds: Vec<u64>,
    pub target: Option<Target>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub best_fitness: f64,
    pub reference_fitness: f64,
    pub best_metrics: PlanMetrics,
    pub success: Option<bool>,
    #[serde(skip)]
    pub max_fitness: Vec<f64>,
    #[serde(skip)]
    pub all_feasible: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeReport {
    pub mode: FitnessMode,
    pub runs: usize,
    pub successes: Option<usize>,
    pub success_rate: Option<f64>,
    pub mean_max_fitness: Vec<f64>,
    pub mean_diversity: Vec<f64>,
    pub mean_mutation_prob: Vec<f64>,
    pub mean_crossover_rate: Vec<f64>,
    /// Plan with the highest weighted objective across the runs.
    pub best_plan: PlanRecord,
    #[serde(skip)]
    pub best_chromosome: PlanChromosome,
    pub run_summaries: Vec<RunSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub product: String,
    pub components: usize,
    pub target: Option<Target>,
    pub modes: Vec<ModeReport>,
    /// Set when a run panicked; `modes` then holds the modes finished before it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
    #[serde(skip)]
    pub manifest: Manifest,
}

impl ExperimentReport {
    pub fn mode(&self, mode: FitnessMode) -> Option<&ModeReport> {
        self.modes.iter().find(|m| m.mode == mode)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Explicit target, else the exact optimum when the product is small enough,
/// else the weighted objective of the product's reference plan.
pub fn resolve_target(model: &ProductModel, spec: &ExperimentSpec) -> Option<Target> {
    if let Some(fitness) = spec.target_fitness {
        return Some(Target {
            fitness,
            source: TargetSource::Configured,
        });
    }
    let opts = OracleOptions {
        cap: spec.oracle_cap,
        max_reported: 1,
        ..OracleOptions::default()
    };
    if let Ok(r) = brute_force_with(model, &spec.config.weights, opts) {
        return Some(Target {
            fitness: r.optimal_fitness,
            source: TargetSource::Oracle,
        });
    }
    model.reference_plan().map(|steps| Target {
        fitness: algebraic_fitness(&metrics(model, &PlanChromosome::from_steps(steps)), &spec.config.weights),
        source: TargetSource::ReferencePlan,
    })
}

/// Loads the product and runs every mode of the spec on `workers` threads
/// (all available cores when `None`).
pub fn run_experiment(spec: &ExperimentSpec, workers: Option<usize>) -> Result<ExperimentReport, ExperimentError> {
    run_experiment_with(spec, workers, evolve)
}

/// [`run_experiment`] with a caller-supplied run function.
pub fn run_experiment_with<F>(
    spec: &ExperimentSpec,
    workers: Option<usize>,
    run: F,
) -> Result<ExperimentReport, ExperimentError>
where
    F: Fn(&ProductModel, &GaConfig) -> Result<RunResult, GaError> + Sync,
{
    spec.validate()?;
    let bytes = fs::read(&spec.product).map_err(|e| ExperimentError::Product {
        path: spec.product.clone(),
        source: ProductError::Io(e),
    })?;
    let model = load_product(bytes.as_slice()).map_err(|source| ExperimentError::Product {
        path: spec.product.clone(),
        source,
    })?;
    let target = resolve_target(&model, spec);
    let mut recorded = spec.clone();
    recorded.out = None;
    let manifest = Manifest {
        manifest_version: 1,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        spec: serde_json::to_value(&recorded).expect("spec serializes"),
        product_sha256: sha256_hex(&bytes),
        seeds: spec.seeds().collect(),
        target,
    };

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder.build().map_err(|e| ExperimentError::Spec(format!("worker pool: {e}")))?;

    let mut report = ExperimentReport {
        product: model.name().to_string(),
        components: model.n(),
        target,
        modes: Vec::with_capacity(spec.modes.len()),
        aborted: None,
        manifest,
    };
    for &mode in &spec.modes {
        let configs: Vec<GaConfig> = spec
            .seeds()
            .map(|seed| GaConfig {
                mode,
                seed,
                target_fitness: target.map(|t| t.fitness),
                ..spec.config.clone()
            })
            .collect();
        let outcomes: Vec<Result<Result<RunResult, GaError>, String>> = pool.install(|| {
            configs
                .par_iter()
                .map(|cfg| catch_unwind(AssertUnwindSafe(|| run(&model, cfg))).map_err(panic_message))
                .collect()
        });
        let mut results = Vec::with_capacity(outcomes.len());
        for (cfg, outcome) in configs.iter().zip(outcomes) {
            match outcome {
                Ok(r) => results.push(r?),
                Err(message) => {
                    let err = ExperimentError::RunPanicked {
                        mode,
                        seed: cfg.seed,
                        message,
                    };
                    report.aborted = Some(err.to_string());
                    if let Some(out) = &spec.out {
                        write_outputs(&report, &model, out)?;
                    }
                    return Err(err);
                }
            }
        }
        report.modes.push(aggregate(&model, spec, mode, &results));
    }
    Ok(report)
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into())
}

fn mean_curve(results: &[RunResult], field: impl Fn(&crate::ga::GenerationStats) -> f64) -> Vec<f64> {
    let len = results.iter().map(|r| r.stats.len()).max().unwrap_or(0);
    (0..len)
        .map(|g| {
            let values: Vec<f64> = results.iter().filter_map(|r| r.stats.get(g)).map(&field).collect();
            values.iter().sum::<f64>() / values.len() as f64
        })
        .collect()
}

fn aggregate(model: &ProductModel, spec: &ExperimentSpec, mode: FitnessMode, results: &[RunResult]) -> ModeReport {
    let successes = results
        .iter()
        .map(|r| r.success)
        .collect::<Option<Vec<bool>>>()
        .map(|flags| flags.iter().filter(|&&s| s).count());
    let best = results
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| {
            a.reference_fitness
                .total_cmp(&b.reference_fitness)
                .then_with(|| j.cmp(i))
        })
        .map(|(_, r)| r)
        .expect("runs >= 1");
    let mut fitness = BTreeMap::new();
    fitness.insert("weighted".to_string(), best.reference_fitness);
    fitness.insert(format!("mode_{}", mode.letter()), best.best_fitness);
    ModeReport {
        mode,
        runs: results.len(),
        successes,
        success_rate: successes.map(|s| s as f64 / results.len() as f64),
        mean_max_fitness: mean_curve(results, |s| s.max_fitness),
        mean_diversity: mean_curve(results, |s| s.diversity),
        mean_mutation_prob: mean_curve(results, |s| s.mutation_prob),
        mean_crossover_rate: mean_curve(results, |s| s.crossover_rate),
        best_plan: PlanRecord::new(model, &best.best, fitness),
        best_chromosome: best.best.clone(),
        run_summaries: spec
            .seeds()
            .zip(results)
            .map(|(seed, r)| RunSummary {
                seed,
                best_fitness: r.best_fitness,
                reference_fitness: r.reference_fitness,
                best_metrics: r.best_metrics,
                success: r.success,
                max_fitness: r.stats.iter().map(|s| s.max_fitness).collect(),
                all_feasible: r.stats.iter().map(|s| s.all_feasible).collect(),
            })
            .collect(),
    }
}

/// `curve_<mode>.csv` text: one row per generation.
pub fn curve_csv(mode: &ModeReport) -> String {
    let mut out = String::from("generation,meanMaxFitness,meanDiversity,meanMutationProb,meanCrossoverRate\n");
    for g in 0..mode.mean_max_fitness.len() {
        let _ = writeln!(
            out,
            "{g},{},{},{},{}",
            mode.mean_max_fitness[g], mode.mean_diversity[g], mode.mean_mutation_prob[g], mode.mean_crossover_rate[g]
        );
    }
    out
}

/// `runs_<mode>.csv` text: per-run max fitness and fitness phase.
pub fn runs_csv(mode: &ModeReport) -> String {
    let mut out = String::from("seed,generation,maxFitness,allFeasible\n");
    for run in &mode.run_summaries {
        for (g, (max, phase)) in run.max_fitness.iter().zip(&run.all_feasible).enumerate() {
            let _ = writeln!(out, "{},{g},{max},{phase}", run.seed);
        }
    }
    out
}

/// Writes the per-mode curve CSVs into `dir` and returns their paths.
pub fn emit_curves(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for m in &report.modes {
        for (name, text) in [
            (format!("curve_{}.csv", m.mode), curve_csv(m)),
            (format!("runs_{}.csv", m.mode), runs_csv(m)),
        ] {
            let path = dir.join(name);
            fs::write(&path, text).map_err(io_err(&path))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Curves, `report.json`, `manifest.json` and one `plan_<mode>.json` per mode.
pub fn write_outputs(report: &ExperimentReport, model: &ProductModel, dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    let mut written = emit_curves(report, dir)?;
    let mut json = |name: String, value: serde_json::Value| -> Result<(), ExperimentError> {
        let path = dir.join(name);
        let text = serde_json::to_string_pretty(&value).expect("report values serialize") + "\n";
        fs::write(&path, text).map_err(io_err(&path))?;
        written.push(path);
        Ok(())
    };
    json("report.json".into(), serde_json::to_value(report).expect("serializes"))?;
    json("manifest.json".into(), serde_json::to_value(&report.manifest).expect("serializes"))?;
    for m in &report.modes {
        let record = PlanRecord::new(model, &m.best_chromosome, m.best_plan.fitness.clone());
        json(format!("plan_{}.json", m.mode), serde_json::to_value(record).expect("serializes"))?;
    }
    Ok(written)
}

/// Loads the spec's product, runs the batch and writes all outputs to the
/// spec's output directory when it has one.
pub fn run_and_write(spec: &ExperimentSpec, workers: Option<usize>) -> Result<ExperimentReport, ExperimentError> {
    let report = run_experiment(spec, workers)?;
    if let Some(out) = &spec.out {
        let model = load_product(fs::File::open(&spec.product).map_err(io_err(&spec.product))?).map_err(|source| {
            ExperimentError::Product {
                path: spec.product.clone(),
                source,
            }
        })?;
        write_outputs(&report, &model, out)?;
    }
    Ok(report)
}
