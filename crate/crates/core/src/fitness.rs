//! Fitness regimes: the weighted algebraic objective, its two-phase adaptive
//! variant, and the fuzzy plan-quality ranking.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::{FuzzyError, FuzzySystem};
use crate::plan::{metrics, PlanChromosome, PlanMetrics};
use crate::product::ProductModel;

#[derive(Debug, Error, PartialEq)]
pub enum FitnessError {
    #[error("weights must be finite and non-negative with a positive sum, got {0:?}")]
    Weights([f64; 3]),
    #[error("unknown mode `{0}`, expected one of A, B, C, D")]
    Mode(String),
    #[error("ranking system needs 3 inputs and 1 output")]
    RankingShape,
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
}

/// Weights of the feasible-length, orientation and gripper terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Weights {
    w: [f64; 3],
}

impl Weights {
    pub fn new(w1: f64, w2: f64, w3: f64) -> Result<Self, FitnessError> {
        let w = [w1, w2, w3];
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w1 + w2 + w3 <= 0.0 {
            return Err(FitnessError::Weights(w));
        }
        Ok(Weights { w })
    }

    pub fn length(&self) -> f64 {
        self.w[0]
    }

    pub fn orientation(&self) -> f64 {
        self.w[1]
    }

    pub fn gripper(&self) -> f64 {
        self.w[2]
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.w
    }
}

/// `(2, 1, 1)`: one more feasible part is worth exactly the two changes it
/// can introduce at most, so extending the feasible prefix never lowers the score.
impl Default for Weights {
    fn default() -> Self {
        Weights { w: [2.0, 1.0, 1.0] }
    }
}

impl TryFrom<[f64; 3]> for Weights {
    type Error = FitnessError;

    fn try_from(w: [f64; 3]) -> Result<Self, Self::Error> {
        Weights::new(w[0], w[1], w[2])
    }
}

impl From<Weights> for [f64; 3] {
    fn from(w: Weights) -> Self {
        w.w
    }
}

impl FromStr for Weights {
    type Err = FitnessError;

    /// Parses `w1,w2,w3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| FitnessError::Weights([f64::NAN; 3]))?;
        match parts.as_slice() {
            [a, b, c] => Weights::new(*a, *b, *c),
            _ => Err(FitnessError::Weights([f64::NAN; 3])),
        }
    }
}

/// The four run configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FitnessMode {
    /// A: plain GA, fixed weighted objective.
    #[serde(rename = "A")]
    AlgebraicFixed,
    /// B: plain GA, fuzzy plan-quality ranking.
    #[serde(rename = "B")]
    FuzzyRanking,
    /// C: plain GA, two-phase adaptive objective.
    #[serde(rename = "C")]
    AlgebraicAdaptive,
    /// D: two-phase adaptive objective with fuzzy control of the operator rates.
    #[serde(rename = "D")]
    AdaptiveFuzzyControl,
}

impl FitnessMode {
    pub const ALL: [FitnessMode; 4] = [
        FitnessMode::AlgebraicFixed,
        FitnessMode::FuzzyRanking,
        FitnessMode::AlgebraicAdaptive,
        FitnessMode::AdaptiveFuzzyControl,
    ];

    pub fn letter(self) -> char {
        match self {
            FitnessMode::AlgebraicFixed => 'A',
            FitnessMode::FuzzyRanking => 'B',
            FitnessMode::AlgebraicAdaptive => 'C',
            FitnessMode::AdaptiveFuzzyControl => 'D',
        }
    }

    pub fn is_adaptive(self) -> bool {
        matches!(self, FitnessMode::AlgebraicAdaptive | FitnessMode::AdaptiveFuzzyControl)
    }

    pub fn is_controlled(self) -> bool {
        self == FitnessMode::AdaptiveFuzzyControl
    }
}

impl fmt::Display for FitnessMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for FitnessMode {
    type Err = FitnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(FitnessMode::AlgebraicFixed),
            "B" => Ok(FitnessMode::FuzzyRanking),
            "C" => Ok(FitnessMode::AlgebraicAdaptive),
            "D" => Ok(FitnessMode::AdaptiveFuzzyControl),
            _ => Err(FitnessError::Mode(s.to_string())),
        }
    }
}

/// `w1*l + w2*(N-1-o) + w3*(N-1-g)`.
pub fn algebraic_fitness(m: &PlanMetrics, w: &Weights) -> f64 {
    let n = m.n as f64;
    w.length() * m.l as f64 + w.orientation() * (n - 1.0 - m.o as f64) + w.gripper() * (n - 1.0 - m.g as f64)
}

/// The best value [`algebraic_fitness`] can take for `n` components.
pub fn algebraic_ceiling(n: usize, w: &Weights) -> f64 {
    algebraic_fitness(&PlanMetrics { l: n, o: 0, g: 0, n }, w)
}

/// Feasible length alone until the population is entirely feasible, the
/// weighted objective afterwards.
pub fn adaptive_fitness(m: &PlanMetrics, w: &Weights, population_all_feasible: bool) -> f64 {
    if population_all_feasible {
        algebraic_fitness(m, w)
    } else {
        m.l as f64
    }
}

/// Normalized ranking inputs: feasible fraction, and orientation/gripper
/// scores where 1 means no change inside the feasible prefix.
pub fn fuzzy_inputs(m: &PlanMetrics) -> [f64; 3] {
    let span = m.l.saturating_sub(1).max(1) as f64;
    let l = if m.n == 0 { 1.0 } else { m.l as f64 / m.n as f64 };
    [l, 1.0 - m.o as f64 / span, 1.0 - m.g as f64 / span]
}

pub fn fuzzy_fitness(m: &PlanMetrics, fs: &FuzzySystem) -> Result<f64, FitnessError> {
    if fs.inputs().len() != 3 || fs.outputs().len() != 1 {
        return Err(FitnessError::RankingShape);
    }
    Ok(fs.infer(&fuzzy_inputs(m))?[0])
}

/// Everything needed to score plans of one product. Fuzzy scores depend on
/// the metrics only and are memoized.
#[derive(Debug)]
pub struct RankContext<'a> {
    pub model: &'a ProductModel,
    pub weights: Weights,
    pub fuzzy: &'a FuzzySystem,
    pub population_all_feasible: bool,
    fuzzy_cache: HashMap<PlanMetrics, f64>,
}

impl<'a> RankContext<'a> {
    pub fn new(model: &'a ProductModel, weights: Weights, fuzzy: &'a FuzzySystem) -> Self {
        RankContext {
            model,
            weights,
            fuzzy,
            population_all_feasible: false,
            fuzzy_cache: HashMap::new(),
        }
    }

    pub fn fitness(&mut self, mode: FitnessMode, m: &PlanMetrics) -> Result<f64, FitnessError> {
        Ok(match mode {
            FitnessMode::AlgebraicFixed => algebraic_fitness(m, &self.weights),
            FitnessMode::AlgebraicAdaptive | FitnessMode::AdaptiveFuzzyControl => {
                adaptive_fitness(m, &self.weights, self.population_all_feasible)
            }
            FitnessMode::FuzzyRanking => match self.fuzzy_cache.get(m) {
                Some(&v) => v,
                None => {
                    let v = fuzzy_fitness(m, self.fuzzy)?;
                    self.fuzzy_cache.insert(*m, v);
                    v
                }
            },
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ranked<'p> {
    pub plan: &'p PlanChromosome,
    /// Position in the input population.
    pub index: usize,
    pub metrics: PlanMetrics,
    pub fitness: f64,
}

/// Best-first order: higher fitness, then fewer orientation changes, then
/// fewer gripper changes, then input order.
pub fn compare_ranked(a: &Ranked<'_>, b: &Ranked<'_>) -> Ordering {
    b.fitness
        .partial_cmp(&a.fitness)
        .unwrap_or(Ordering::Equal)
        .then(a.metrics.o.cmp(&b.metrics.o))
        .then(a.metrics.g.cmp(&b.metrics.g))
        .then(a.index.cmp(&b.index))
}

pub fn rank_population<'p>(
    pop: &'p [PlanChromosome],
    mode: FitnessMode,
    ctx: &mut RankContext<'_>,
) -> Result<Vec<Ranked<'p>>, FitnessError> {
    let all_metrics: Vec<PlanMetrics> = pop.iter().map(|c| metrics(ctx.model, c)).collect();
    rank_with_metrics(pop, &all_metrics, mode, ctx)
}

fn rank_with_metrics<'p>(
    pop: &'p [PlanChromosome],
    all_metrics: &[PlanMetrics],
    mode: FitnessMode,
    ctx: &mut RankContext<'_>,
) -> Result<Vec<Ranked<'p>>, FitnessError> {
    let mut ranked = pop
        .iter()
        .zip(all_metrics)
        .enumerate()
        .map(|(index, (plan, m))| {
            Ok(Ranked {
                plan,
                index,
                metrics: *m,
                fitness: ctx.fitness(mode, m)?,
            })
        })
        .collect::<Result<Vec<_>, FitnessError>>()?;
    ranked.sort_by(compare_ranked);
    Ok(ranked)
}
