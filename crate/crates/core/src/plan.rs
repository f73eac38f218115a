//! Three-section plan chromosome and the metrics extracted from it.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::product::{DirectionId, GripperId, PlanStep, ProductModel, RemovedSet, StepRecord};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("plan has {found} positions, product has {expected} components")]
    Length { expected: usize, found: usize },
    #[error("sequence is not a permutation: part {0} is out of range or repeated")]
    NotPermutation(usize),
    #[error("position {0} uses an unknown direction")]
    UnknownDirection(usize),
    #[error("position {pos}: gripper not allowed for part {part}")]
    GripperNotAllowed { pos: usize, part: usize },
}

/// A disassembly plan: removal order, direction per step and gripper per
/// step. The three sections are parallel and indexed by position.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PlanChromosome {
    pub sequence: Vec<usize>,
    pub dirs: Vec<DirectionId>,
    pub grips: Vec<GripperId>,
}

/// Feasible-prefix length `l`, orientation changes `o` and gripper changes
/// `g` inside that prefix, for a product of `n` components.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlanMetrics {
    pub l: usize,
    pub o: usize,
    pub g: usize,
    pub n: usize,
}

impl PlanMetrics {
    pub fn is_complete(&self) -> bool {
        self.l == self.n
    }
}

impl PlanChromosome {
    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    pub fn from_steps(steps: &[PlanStep]) -> Self {
        PlanChromosome {
            sequence: steps.iter().map(|s| s.part).collect(),
            dirs: steps.iter().map(|s| s.direction).collect(),
            grips: steps.iter().map(|s| s.gripper).collect(),
        }
    }

    pub fn step(&self, pos: usize) -> PlanStep {
        PlanStep {
            part: self.sequence[pos],
            direction: self.dirs[pos],
            gripper: self.grips[pos],
        }
    }

    pub fn steps(&self) -> impl DoubleEndedIterator<Item = PlanStep> + '_ {
        (0..self.len()).map(|k| self.step(k))
    }

    /// Checks the permutation, direction and gripper invariants.
    pub fn validate(&self, model: &ProductModel) -> Result<(), PlanError> {
        let n = model.n();
        for found in [self.sequence.len(), self.dirs.len(), self.grips.len()] {
            if found != n {
                return Err(PlanError::Length { expected: n, found });
            }
        }
        let mut seen = vec![false; n];
        for &p in &self.sequence {
            if p >= n || seen[p] {
                return Err(PlanError::NotPermutation(p));
            }
            seen[p] = true;
        }
        for (pos, step) in self.steps().enumerate() {
            if step.direction.0 >= model.direction_count() {
                return Err(PlanError::UnknownDirection(pos));
            }
            if !model.allowed_grippers(step.part).contains(&step.gripper) {
                return Err(PlanError::GripperNotAllowed { pos, part: step.part });
            }
        }
        Ok(())
    }

    /// Reverse of the disassembly order, each part inserted against its
    /// removal direction. Only meaningful for complete plans.
    pub fn assembly_order(&self, model: &ProductModel) -> Vec<PlanStep> {
        self.steps()
            .rev()
            .map(|s| PlanStep {
                direction: model.direction(s.direction).opposite.unwrap_or(s.direction),
                ..s
            })
            .collect()
    }
}

/// Uniformly random plan: random permutation, uniform direction per
/// position, uniform allowed gripper per position.
pub fn random_chromosome<R: Rng + ?Sized>(model: &ProductModel, rng: &mut R) -> PlanChromosome {
    let n = model.n();
    let mut sequence: Vec<usize> = (0..n).collect();
    sequence.shuffle(rng);
    let dirs = (0..n)
        .map(|_| DirectionId(rng.gen_range(0..model.direction_count())))
        .collect();
    let grips = sequence
        .iter()
        .map(|&p| *model.allowed_grippers(p).choose(rng).expect("components have grippers"))
        .collect();
    PlanChromosome { sequence, dirs, grips }
}

pub fn metrics(model: &ProductModel, c: &PlanChromosome) -> PlanMetrics {
    let n = model.n();
    let mut removed = RemovedSet::new(n);
    let mut l = 0;
    for (&part, &dir) in c.sequence.iter().zip(&c.dirs) {
        if !model.removable(part, dir, &removed) {
            break;
        }
        removed.insert(part);
        l += 1;
    }
    let changes = |genes: &dyn Fn(usize) -> usize| (1..l).filter(|&j| genes(j) != genes(j - 1)).count();
    PlanMetrics {
        l,
        o: changes(&|j| c.dirs[j].0),
        g: changes(&|j| c.grips[j].0),
        n,
    }
}

/// Order crossover (OX1) with cut points `lo < hi` on `0..=n`. Child one keeps
/// `a[lo..hi]` and fills the remaining positions, starting at `hi` and
/// wrapping, with the other parts in the order they appear in `b` from `hi`.
/// Direction and gripper genes travel with their part.
pub fn crossover_at(a: &PlanChromosome, b: &PlanChromosome, lo: usize, hi: usize) -> (PlanChromosome, PlanChromosome) {
    (order_child(a, b, lo, hi), order_child(b, a, lo, hi))
}

fn order_child(keep: &PlanChromosome, fill: &PlanChromosome, lo: usize, hi: usize) -> PlanChromosome {
    let n = keep.len();
    assert!(lo < hi && hi <= n, "invalid cut points ({lo}, {hi}) for length {n}");
    let mut in_segment = vec![false; n];
    for &p in &keep.sequence[lo..hi] {
        in_segment[p] = true;
    }
    let mut child = keep.clone();
    let donors = (0..n)
        .map(|k| (hi + k) % n)
        .filter(|&k| !in_segment[fill.sequence[k]]);
    let slots = (0..n).map(|k| (hi + k) % n).filter(|&k| k < lo || k >= hi);
    for (slot, donor) in slots.zip(donors) {
        child.sequence[slot] = fill.sequence[donor];
        child.dirs[slot] = fill.dirs[donor];
        child.grips[slot] = fill.grips[donor];
    }
    child
}

/// Order crossover with uniformly drawn cut points.
pub fn crossover<R: Rng + ?Sized>(a: &PlanChromosome, b: &PlanChromosome, rng: &mut R) -> (PlanChromosome, PlanChromosome) {
    let n = a.len();
    if n < 2 {
        return (a.clone(), b.clone());
    }
    let mut lo = rng.gen_range(0..=n);
    let mut hi = rng.gen_range(0..n);
    if hi >= lo {
        hi += 1;
    }
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    crossover_at(a, b, lo, hi)
}

/// One swap of two positions (genes move as a unit), then one direction
/// reset and one gripper reset at independently drawn positions.
pub fn mutate<R: Rng + ?Sized>(c: &PlanChromosome, model: &ProductModel, rng: &mut R) -> PlanChromosome {
    let mut out = c.clone();
    let n = out.len();
    if n == 0 {
        return out;
    }
    if n >= 2 {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        out.sequence.swap(i, j);
        out.dirs.swap(i, j);
        out.grips.swap(i, j);
    }
    let k = rng.gen_range(0..n);
    out.dirs[k] = DirectionId(rng.gen_range(0..model.direction_count()));
    let k = rng.gen_range(0..n);
    out.grips[k] = *model
        .allowed_grippers(out.sequence[k])
        .choose(rng)
        .expect("components have grippers");
    out
}

/// Serializable view of a plan, with the assembly order alongside the
/// disassembly order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub disassembly: Vec<StepRecord>,
    /// Present only when the whole sequence is feasible.
    pub assembly: Option<Vec<StepRecord>>,
    pub metrics: PlanMetrics,
    pub fitness: BTreeMap<String, f64>,
}

impl PlanRecord {
    pub fn new(model: &ProductModel, c: &PlanChromosome, fitness: BTreeMap<String, f64>) -> Self {
        let m = metrics(model, c);
        PlanRecord {
            disassembly: c.steps().map(|s| model.step_record(&s)).collect(),
            assembly: m
                .is_complete()
                .then(|| c.assembly_order(model).iter().map(|s| model.step_record(s)).collect()),
            metrics: m,
            fitness,
        }
    }
}
