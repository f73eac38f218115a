//! Generational GA: tournament selection, one elite, order crossover at a
//! population-level rate, per-individual mutation, and for mode D a fuzzy
//! controller that rescales the two operator rates every generation.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fitness::{
    algebraic_fitness, compare_ranked, FitnessError, FitnessMode, RankContext, Ranked, Weights,
};
use crate::fuzzy::{build_controller_system, build_ranking_system, FuzzyError, FuzzySystem};
use crate::plan::{crossover, metrics, mutate, random_chromosome, PlanChromosome, PlanMetrics};
use crate::product::ProductModel;

/// Pair count above which [`diversity`] samples instead of enumerating.
const DIVERSITY_ALL_PAIRS: usize = 8128;
const DIVERSITY_SAMPLES: usize = 4096;

#[derive(Debug, Error, PartialEq)]
pub enum GaError {
    #[error("invalid GA configuration: {0}")]
    Config(String),
    #[error("product has no components")]
    EmptyProduct,
    #[error(transparent)]
    Fitness(#[from] FitnessError),
    #[error("controller: {0}")]
    Controller(#[from] FuzzyError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population_size: usize,
    pub mutation_prob: f64,
    pub crossover_rate: f64,
    pub max_generations: usize,
    pub mode: FitnessMode,
    pub weights: Weights,
    pub seed: u64,
    /// `[min, max]` the controller may move the mutation probability within.
    pub mutation_bounds: [f64; 2],
    pub crossover_bounds: [f64; 2],
    /// Generations without improvement that count as full stagnation.
    pub stagnation_window: usize,
    /// Weighted-objective value a run must reach to count as a success.
    pub target_fitness: Option<f64>,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 80,
            mutation_prob: 0.8,
            crossover_rate: 0.4,
            max_generations: 300,
            mode: FitnessMode::AlgebraicFixed,
            weights: Weights::default(),
            seed: 0,
            mutation_bounds: [0.2, 1.0],
            crossover_bounds: [0.1, 0.9],
            stagnation_window: 20,
            target_fitness: None,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), GaError> {
        let err = |m: String| Err(GaError::Config(m));
        if self.population_size < 2 {
            return err(format!("population_size must be >= 2, got {}", self.population_size));
        }
        if self.max_generations == 0 {
            return err("max_generations must be positive".into());
        }
        if self.stagnation_window == 0 {
            return err("stagnation_window must be positive".into());
        }
        for (name, value, [lo, hi]) in [
            ("mutation_prob", self.mutation_prob, self.mutation_bounds),
            ("crossover_rate", self.crossover_rate, self.crossover_bounds),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return err(format!("{name} must lie in [0, 1], got {value}"));
            }
            if !(0.0 < lo && lo <= value && value <= hi && hi <= 1.0) {
                return err(format!("{name} bounds [{lo}, {hi}] must satisfy 0 < min <= {value} <= max <= 1"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub max_fitness: f64,
    pub mean_fitness: f64,
    pub best_metrics: PlanMetrics,
    /// Rates used to breed the next generation.
    pub mutation_prob: f64,
    pub crossover_rate: f64,
    pub diversity: f64,
    /// Adaptive modes: whether the weighted objective is active.
    pub all_feasible: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub best: PlanChromosome,
    pub best_metrics: PlanMetrics,
    pub best_fitness: f64,
    /// Weighted objective of the best plan, whatever the run's mode.
    pub reference_fitness: f64,
    pub stats: Vec<GenerationStats>,
    /// `None` when no target was configured.
    pub success: Option<bool>,
    pub elapsed: Duration,
}

/// Mean position-wise disagreement of the sequence sections, divided by the
/// sequence length. Uses every pair for small populations and a fixed
/// pseudo-random sample of pairs otherwise.
pub fn diversity(pop: &[PlanChromosome]) -> f64 {
    let p = pop.len();
    if p < 2 || pop[0].is_empty() {
        return 0.0;
    }
    let n = pop[0].len() as f64;
    let differ = |a: &PlanChromosome, b: &PlanChromosome| {
        a.sequence.iter().zip(&b.sequence).filter(|(x, y)| x != y).count() as f64 / n
    };
    let pairs = p * (p - 1) / 2;
    if pairs <= DIVERSITY_ALL_PAIRS {
        let total: f64 = (0..p)
            .flat_map(|i| (i + 1..p).map(move |j| (i, j)))
            .map(|(i, j)| differ(&pop[i], &pop[j]))
            .sum();
        total / pairs as f64
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let total: f64 = (0..DIVERSITY_SAMPLES)
            .map(|_| {
                let i = rng.gen_range(0..p);
                let mut j = rng.gen_range(0..p - 1);
                if j >= i {
                    j += 1;
                }
                differ(&pop[i], &pop[j])
            })
            .sum();
        total / DIVERSITY_SAMPLES as f64
    }
}

/// Binary tournament with replacement; ties go to the first draw.
pub fn select<'a, 'p, R: Rng + ?Sized>(ranked: &'a [Ranked<'p>], rng: &mut R) -> &'a Ranked<'p> {
    let first = &ranked[rng.gen_range(0..ranked.len())];
    let second = &ranked[rng.gen_range(0..ranked.len())];
    if second.fitness > first.fitness {
        second
    } else {
        first
    }
}

/// Generations since the phase's best maximum last improved, over
/// `window`, capped at 1.
pub fn stagnation(history: &[GenerationStats], window: usize) -> f64 {
    let Some(last) = history.last() else {
        return 0.0;
    };
    let mut best = f64::NEG_INFINITY;
    let mut since = 0usize;
    for s in history.iter().filter(|s| s.all_feasible == last.all_feasible) {
        if s.max_fitness > best {
            best = s.max_fitness;
            since = 0;
        } else {
            since += 1;
        }
    }
    (since as f64 / window as f64).min(1.0)
}

/// New `(mutation_prob, crossover_rate)`: the last generation's rates times
/// the controller's multipliers, clamped to the configured bounds.
pub fn controller_update(history: &[GenerationStats], fs: &FuzzySystem, cfg: &GaConfig) -> Result<(f64, f64), GaError> {
    let last = history
        .last()
        .ok_or_else(|| GaError::Config("controller needs at least one generation of history".into()))?;
    if fs.inputs().len() != 2 || fs.outputs().len() != 2 {
        return Err(GaError::Config("controller system needs 2 inputs and 2 outputs".into()));
    }
    let out = fs.infer(&[stagnation(history, cfg.stagnation_window), last.diversity])?;
    let [mlo, mhi] = cfg.mutation_bounds;
    let [clo, chi] = cfg.crossover_bounds;
    Ok((
        (last.mutation_prob * out[0]).clamp(mlo, mhi),
        (last.crossover_rate * out[1]).clamp(clo, chi),
    ))
}

/// Runs the GA with the shipped fuzzy systems.
pub fn evolve(model: &ProductModel, cfg: &GaConfig) -> Result<RunResult, GaError> {
    evolve_with(model, cfg, &build_ranking_system(), &build_controller_system())
}

/// Runs the GA with caller-supplied ranking and controller systems.
pub fn evolve_with(
    model: &ProductModel,
    cfg: &GaConfig,
    ranking: &FuzzySystem,
    controller: &FuzzySystem,
) -> Result<RunResult, GaError> {
    let mut ctx = RankContext::new(model, cfg.weights, ranking);
    run(model, cfg, controller, |m, all_feasible| {
        ctx.population_all_feasible = all_feasible;
        ctx.fitness(cfg.mode, m)
    })
}

/// Runs the GA loop of `cfg.mode` with an arbitrary scoring function of
/// `(metrics, population_all_feasible)`. Population mechanics do not depend
/// on the mode except through the adaptive latch and the controller.
pub fn evolve_with_fitness<F>(model: &ProductModel, cfg: &GaConfig, mut fitness: F) -> Result<RunResult, GaError>
where
    F: FnMut(&PlanMetrics, bool) -> f64,
{
    run(model, cfg, &build_controller_system(), |m, f| Ok(fitness(m, f)))
}

fn run<F>(model: &ProductModel, cfg: &GaConfig, controller: &FuzzySystem, mut fitness: F) -> Result<RunResult, GaError>
where
    F: FnMut(&PlanMetrics, bool) -> Result<f64, FitnessError>,
{
    cfg.validate()?;
    if model.n() == 0 {
        return Err(GaError::EmptyProduct);
    }
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let size = cfg.population_size;
    let mut pop: Vec<PlanChromosome> = (0..size).map(|_| random_chromosome(model, &mut rng)).collect();

    let mut mutation_prob = cfg.mutation_prob;
    let mut crossover_rate = cfg.crossover_rate;
    let mut all_feasible = false;
    let mut stats: Vec<GenerationStats> = Vec::with_capacity(cfg.max_generations);
    let mut best: Option<(PlanChromosome, PlanMetrics, f64)> = None;

    for generation in 0..cfg.max_generations {
        let pop_metrics: Vec<PlanMetrics> = pop.iter().map(|c| metrics(model, c)).collect();
        if cfg.mode.is_adaptive() && !all_feasible && pop_metrics.iter().all(PlanMetrics::is_complete) {
            all_feasible = true;
        }

        let mut ranked = Vec::with_capacity(size);
        for (index, (plan, m)) in pop.iter().zip(&pop_metrics).enumerate() {
            ranked.push(Ranked {
                plan,
                index,
                metrics: *m,
                fitness: fitness(m, all_feasible)?,
            });
        }
        ranked.sort_by(compare_ranked);

        let top = &ranked[0];
        let improves = match &best {
            None => true,
            Some((_, bm, bf)) => {
                top.fitness > *bf || (top.fitness == *bf && (top.metrics.o, top.metrics.g) < (bm.o, bm.g))
            }
        };
        if improves {
            best = Some((top.plan.clone(), top.metrics, top.fitness));
        }

        stats.push(GenerationStats {
            generation,
            max_fitness: top.fitness,
            mean_fitness: ranked.iter().map(|r| r.fitness).sum::<f64>() / size as f64,
            best_metrics: top.metrics,
            mutation_prob,
            crossover_rate,
            diversity: diversity(&pop),
            all_feasible,
        });

        if generation + 1 == cfg.max_generations {
            break;
        }
        if cfg.mode.is_controlled() {
            (mutation_prob, crossover_rate) = controller_update(&stats, controller, cfg)?;
            let last = stats.last_mut().expect("just pushed");
            last.mutation_prob = mutation_prob;
            last.crossover_rate = crossover_rate;
        }

        let mut next = Vec::with_capacity(size);
        next.push(top.plan.clone());
        let crossed = (crossover_rate * (size - 1) as f64).round() as usize;
        while next.len() < 1 + crossed {
            let a = select(&ranked, &mut rng).plan;
            let b = select(&ranked, &mut rng).plan;
            let (c1, c2) = crossover(a, b, &mut rng);
            next.push(c1);
            if next.len() < 1 + crossed {
                next.push(c2);
            }
        }
        while next.len() < size {
            next.push(select(&ranked, &mut rng).plan.clone());
        }
        for child in next.iter_mut().skip(1) {
            if rng.gen_bool(mutation_prob) {
                *child = mutate(child, model, &mut rng);
            }
        }
        pop = next;
    }

    let (best, best_metrics, best_fitness) = best.expect("at least one generation ran");
    let reference_fitness = algebraic_fitness(&best_metrics, &cfg.weights);
    Ok(RunResult {
        best,
        best_metrics,
        best_fitness,
        reference_fitness,
        success: cfg.target_fitness.map(|t| reference_fitness >= t - 1e-9),
        stats,
        elapsed: started.elapsed(),
    })
}
