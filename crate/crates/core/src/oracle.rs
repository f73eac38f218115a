//! Exhaustive search for the exact optimum of the weighted objective on
//! small products.
//!
//! The search walks (part, direction, gripper) choices depth first. With
//! pruning on it never extends an infeasible prefix and drops any branch
//! whose optimistic bound (all remaining parts feasible, no further changes)
//! falls below the incumbent. A plan whose feasible prefix stops at length
//! `k` is represented by the prefix plus one blocked (part, direction) pair,
//! so prefixes are only scored as final when such a pair exists.

use serde::Serialize;
use thiserror::Error;

use crate::fitness::{algebraic_fitness, Weights};
use crate::plan::{metrics, PlanChromosome, PlanMetrics};
use crate::product::{DirectionId, GripperId, ProductModel, RemovedSet};

const EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("exhaustive search refused: product has {n} components, cap is {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("product has no components")]
    Empty,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleOptions {
    pub cap: usize,
    pub prune: bool,
    /// Maximizers kept in the result; the count covers all of them.
    pub max_reported: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            cap: 7,
            prune: true,
            max_reported: 256,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleResult {
    pub optimal_fitness: f64,
    pub optimal_metrics: PlanMetrics,
    #[serde(skip)]
    pub optimal_plans: Vec<PlanChromosome>,
    /// Number of maximizers found; pruned search may merge equivalent tails.
    pub plan_count: u64,
    pub states_explored: u64,
}

pub fn brute_force_optimal(model: &ProductModel, w: &Weights) -> Result<OracleResult, OracleError> {
    brute_force_with(model, w, OracleOptions::default())
}

pub fn brute_force_with(model: &ProductModel, w: &Weights, opts: OracleOptions) -> Result<OracleResult, OracleError> {
    let n = model.n();
    if n == 0 {
        return Err(OracleError::Empty);
    }
    if n > opts.cap {
        return Err(OracleError::TooLarge { n, cap: opts.cap });
    }
    let mut search = Search {
        model,
        w,
        opts,
        prefix: PlanChromosome {
            sequence: Vec::with_capacity(n),
            dirs: Vec::with_capacity(n),
            grips: Vec::with_capacity(n),
        },
        removed: RemovedSet::new(n),
        best: f64::NEG_INFINITY,
        best_metrics: PlanMetrics { l: 0, o: 0, g: 0, n },
        plans: Vec::new(),
        count: 0,
        states: 0,
    };
    if opts.prune {
        search.pruned(0, 0);
    } else {
        search.full();
    }
    Ok(OracleResult {
        optimal_fitness: search.best,
        optimal_metrics: search.best_metrics,
        optimal_plans: search.plans,
        plan_count: search.count,
        states_explored: search.states,
    })
}

struct Search<'a> {
    model: &'a ProductModel,
    w: &'a Weights,
    opts: OracleOptions,
    prefix: PlanChromosome,
    removed: RemovedSet,
    best: f64,
    best_metrics: PlanMetrics,
    plans: Vec<PlanChromosome>,
    count: u64,
    states: u64,
}

impl Search<'_> {
    fn offer(&mut self, value: f64, m: PlanMetrics, plan: impl FnOnce(&Self) -> PlanChromosome) {
        if value > self.best + EPS {
            self.best = value;
            self.best_metrics = m;
            self.plans.clear();
            self.count = 0;
        }
        if (value - self.best).abs() <= EPS {
            self.count += 1;
            if self.plans.len() < self.opts.max_reported {
                let p = plan(self);
                self.plans.push(p);
            }
        }
    }

    fn push(&mut self, part: usize, dir: DirectionId, grip: GripperId) {
        self.prefix.sequence.push(part);
        self.prefix.dirs.push(dir);
        self.prefix.grips.push(grip);
    }

    fn pop(&mut self) {
        self.prefix.sequence.pop();
        self.prefix.dirs.pop();
        self.prefix.grips.pop();
    }

    /// Prefix followed by the given blocked step and the remaining parts in
    /// index order.
    fn complete_with(&self, blocked: (usize, DirectionId)) -> PlanChromosome {
        let mut plan = self.prefix.clone();
        let (part, dir) = blocked;
        plan.sequence.push(part);
        plan.dirs.push(dir);
        plan.grips.push(self.model.allowed_grippers(part)[0]);
        for p in 0..self.model.n() {
            if !self.removed.contains(p) && p != part {
                plan.sequence.push(p);
                plan.dirs.push(DirectionId(0));
                plan.grips.push(self.model.allowed_grippers(p)[0]);
            }
        }
        plan
    }

    fn pruned(&mut self, o: usize, g: usize) {
        let model = self.model;
        let n = model.n();
        let k = self.prefix.len();
        let m = PlanMetrics { l: k, o, g, n };
        let value = algebraic_fitness(&m, self.w);
        if k == n {
            self.offer(value, m, |s| s.prefix.clone());
            return;
        }
        let blocked = (0..n)
            .filter(|&p| !self.removed.contains(p))
            .find_map(|p| {
                (0..model.direction_count())
                    .map(DirectionId)
                    .find(|&d| !model.removable(p, d, &self.removed))
                    .map(|d| (p, d))
            });
        if let Some(b) = blocked {
            self.offer(value, m, |s| s.complete_with(b));
        }
        let bound = algebraic_fitness(&PlanMetrics { l: n, o, g, n }, self.w);
        if bound < self.best - EPS {
            return;
        }

        let last = (k > 0).then(|| (self.prefix.dirs[k - 1], self.prefix.grips[k - 1]));
        let dcount = model.direction_count();
        // continue the current direction and gripper first to find good incumbents early
        let start = last.map_or(0, |(d, _)| d.0);
        for part in 0..n {
            if self.removed.contains(part) {
                continue;
            }
            for step in 0..dcount {
                let dir = DirectionId((start + step) % dcount);
                if !model.removable(part, dir, &self.removed) {
                    continue;
                }
                let allowed = model.allowed_grippers(part);
                let preferred = last.and_then(|(_, lg)| allowed.iter().position(|&x| x == lg)).unwrap_or(0);
                for gi in (0..allowed.len()).map(|i| (preferred + i) % allowed.len()) {
                    let grip = allowed[gi];
                    self.states += 1;
                    let (no, ng) = match last {
                        Some((ld, lg)) => (o + usize::from(ld != dir), g + usize::from(lg != grip)),
                        None => (0, 0),
                    };
                    self.push(part, dir, grip);
                    self.removed.insert(part);
                    self.pruned(no, ng);
                    self.removed.remove(part);
                    self.pop();
                }
            }
        }
    }

    /// Every complete plan, scored through [`metrics`].
    fn full(&mut self) {
        let model = self.model;
        let n = model.n();
        if self.prefix.len() == n {
            let m = metrics(model, &self.prefix);
            let value = algebraic_fitness(&m, self.w);
            self.offer(value, m, |s| s.prefix.clone());
            return;
        }
        for part in 0..n {
            if self.removed.contains(part) {
                continue;
            }
            for d in 0..model.direction_count() {
                for &grip in model.allowed_grippers(part) {
                    self.states += 1;
                    self.push(part, DirectionId(d), grip);
                    self.removed.insert(part);
                    self.full();
                    self.removed.remove(part);
                    self.pop();
                }
            }
        }
    }
}
