//! Mamdani inference over triangular membership functions.
//!
//! Conjunction and implication are `min`, aggregation is `max`, and the
//! aggregated output set is defuzzified by its centroid over a uniform
//! 201-point grid spanning the output universe.
//!
//! Both shipped systems (plan ranking and operator control) are defined in
//! `data/fuzzy_systems.json` and can be replaced by any file in the same
//! layout via [`FuzzySystem::from_json`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Points used to discretize an output universe.
pub const CENTROID_POINTS: usize = 201;

const SHIPPED_SYSTEMS: &str = include_str!("../data/fuzzy_systems.json");

#[derive(Debug, Error, PartialEq)]
pub enum FuzzyError {
    #[error("malformed fuzzy system: {0}")]
    Parse(String),
    #[error("invalid fuzzy system: {0}")]
    Invalid(String),
    #[error("expected {expected} inputs, got {found}")]
    InputCount { expected: usize, found: usize },
    #[error("missing input `{0}`")]
    MissingInput(String),
    #[error("no rule fired for output `{0}`; the rule base does not cover these inputs")]
    NoRuleFired(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangularMf {
    pub label: String,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl TriangularMf {
    pub fn new(label: &str, a: f64, b: f64, c: f64) -> Self {
        TriangularMf {
            label: label.to_string(),
            a,
            b,
            c,
        }
    }

    pub fn membership(&self, x: f64) -> f64 {
        if x < self.a || x > self.c {
            0.0
        } else if x == self.b {
            1.0
        } else if x < self.b {
            (x - self.a) / (self.b - self.a)
        } else {
            (self.c - x) / (self.c - self.b)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinguisticVariable {
    pub name: String,
    pub universe: [f64; 2],
    pub terms: Vec<TriangularMf>,
}

impl LinguisticVariable {
    fn term_index(&self, label: &str) -> Option<usize> {
        self.terms.iter().position(|t| t.label == label)
    }

    fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.universe[0], self.universe[1])
    }

    fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        let [lo, hi] = self.universe;
        (0..CENTROID_POINTS).map(move |k| (lo + (hi - lo) * k as f64 / (CENTROID_POINTS - 1) as f64).min(hi))
    }

    fn check(&self) -> Result<(), FuzzyError> {
        let [lo, hi] = self.universe;
        if !(hi > lo) {
            return Err(FuzzyError::Invalid(format!("variable `{}` has an empty universe", self.name)));
        }
        if self.terms.is_empty() {
            return Err(FuzzyError::Invalid(format!("variable `{}` has no terms", self.name)));
        }
        for (i, t) in self.terms.iter().enumerate() {
            if !(t.a <= t.b && t.b <= t.c) || t.a == t.c {
                return Err(FuzzyError::Invalid(format!(
                    "term `{}` of `{}` needs a <= b <= c with a < c",
                    t.label, self.name
                )));
            }
            if self.terms[..i].iter().any(|u| u.label == t.label) {
                return Err(FuzzyError::Invalid(format!("duplicate term `{}` in `{}`", t.label, self.name)));
            }
        }
        if let Some(x) = self.grid().find(|&x| self.terms.iter().all(|t| t.membership(x) <= 0.0)) {
            return Err(FuzzyError::Invalid(format!("variable `{}` leaves {x} uncovered", self.name)));
        }
        Ok(())
    }
}

/// Conjunctive rule: every `(variable, term)` in `when` must hold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzyRule {
    pub when: Vec<(String, String)>,
    pub then: (String, String),
}

/// Serialized form of a system. Convert with [`FuzzySystem::new`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzySystemDef {
    pub name: String,
    pub inputs: Vec<LinguisticVariable>,
    pub outputs: Vec<LinguisticVariable>,
    pub rules: Vec<FuzzyRule>,
}

#[derive(Clone, Debug, PartialEq)]
struct CompiledRule {
    when: Vec<(usize, usize)>,
    output: usize,
    term: usize,
}

/// A validated Mamdani system with its output sets pre-sampled.
#[derive(Clone, Debug, PartialEq)]
pub struct FuzzySystem {
    def: FuzzySystemDef,
    rules: Vec<CompiledRule>,
    // per output: grid abscissae and per-term membership samples
    grids: Vec<Vec<f64>>,
    samples: Vec<Vec<Vec<f64>>>,
}

impl FuzzySystem {
    pub fn new(def: FuzzySystemDef) -> Result<Self, FuzzyError> {
        if def.rules.is_empty() {
            return Err(FuzzyError::Invalid("rule base is empty".into()));
        }
        if def.outputs.is_empty() {
            return Err(FuzzyError::Invalid("system has no outputs".into()));
        }
        for v in def.inputs.iter().chain(&def.outputs) {
            v.check()?;
        }
        let resolve = |vars: &[LinguisticVariable], (var, term): &(String, String)| {
            let vi = vars
                .iter()
                .position(|v| v.name == *var)
                .ok_or_else(|| FuzzyError::Invalid(format!("unknown variable `{var}`")))?;
            let ti = vars[vi]
                .term_index(term)
                .ok_or_else(|| FuzzyError::Invalid(format!("unknown term `{term}` of `{var}`")))?;
            Ok::<_, FuzzyError>((vi, ti))
        };
        let rules = def
            .rules
            .iter()
            .map(|r| {
                let when = r
                    .when
                    .iter()
                    .map(|c| resolve(&def.inputs, c))
                    .collect::<Result<Vec<_>, _>>()?;
                if when.is_empty() {
                    return Err(FuzzyError::Invalid("rule without antecedents".into()));
                }
                let (output, term) = resolve(&def.outputs, &r.then)?;
                Ok(CompiledRule { when, output, term })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let grids: Vec<Vec<f64>> = def.outputs.iter().map(|v| v.grid().collect()).collect();
        let samples = def
            .outputs
            .iter()
            .zip(&grids)
            .map(|(v, grid)| {
                v.terms
                    .iter()
                    .map(|t| grid.iter().map(|&x| t.membership(x)).collect())
                    .collect()
            })
            .collect();
        Ok(FuzzySystem {
            def,
            rules,
            grids,
            samples,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, FuzzyError> {
        let def: FuzzySystemDef = serde_json::from_str(text).map_err(|e| FuzzyError::Parse(e.to_string()))?;
        FuzzySystem::new(def)
    }

    pub fn definition(&self) -> &FuzzySystemDef {
        &self.def
    }

    pub fn inputs(&self) -> &[LinguisticVariable] {
        &self.def.inputs
    }

    pub fn outputs(&self) -> &[LinguisticVariable] {
        &self.def.outputs
    }

    /// Runs inference on positional inputs (same order as [`Self::inputs`])
    /// and returns one crisp value per output. Inputs outside their universe
    /// are clamped.
    pub fn infer(&self, inputs: &[f64]) -> Result<Vec<f64>, FuzzyError> {
        let vars = &self.def.inputs;
        if inputs.len() != vars.len() {
            return Err(FuzzyError::InputCount {
                expected: vars.len(),
                found: inputs.len(),
            });
        }
        let degrees: Vec<Vec<f64>> = vars
            .iter()
            .zip(inputs)
            .map(|(v, &x)| {
                let x = v.clamp(x);
                v.terms.iter().map(|t| t.membership(x)).collect()
            })
            .collect();

        let mut clip: Vec<Vec<f64>> = self.def.outputs.iter().map(|v| vec![0.0; v.terms.len()]).collect();
        for rule in &self.rules {
            let strength = rule
                .when
                .iter()
                .map(|&(v, t)| degrees[v][t])
                .fold(f64::INFINITY, f64::min);
            let slot = &mut clip[rule.output][rule.term];
            *slot = slot.max(strength);
        }

        self.def
            .outputs
            .iter()
            .enumerate()
            .map(|(o, var)| {
                let (mut num, mut den) = (0.0, 0.0);
                for (k, &x) in self.grids[o].iter().enumerate() {
                    let mu = clip[o]
                        .iter()
                        .zip(&self.samples[o])
                        .map(|(&c, s)| c.min(s[k]))
                        .fold(0.0, f64::max);
                    num += x * mu;
                    den += mu;
                }
                if den > 0.0 {
                    Ok(num / den)
                } else {
                    Err(FuzzyError::NoRuleFired(var.name.clone()))
                }
            })
            .collect()
    }

    /// Name-keyed variant of [`Self::infer`].
    pub fn infer_named(&self, inputs: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>, FuzzyError> {
        let values = self
            .def
            .inputs
            .iter()
            .map(|v| inputs.get(&v.name).copied().ok_or_else(|| FuzzyError::MissingInput(v.name.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let out = self.infer(&values)?;
        Ok(self.def.outputs.iter().map(|v| v.name.clone()).zip(out).collect())
    }
}

#[derive(Deserialize)]
struct ShippedSystems {
    ranking: FuzzySystemDef,
    controller: FuzzySystemDef,
}

fn shipped() -> ShippedSystems {
    serde_json::from_str(SHIPPED_SYSTEMS).expect("shipped fuzzy systems parse")
}

/// Plan-quality system: inputs `length`, `orientation`, `gripper` on
/// `[0, 1]` with bad/medium/good terms, output `quality` on `[0, 1]` with
/// five terms from very_bad to very_good.
pub fn build_ranking_system() -> FuzzySystem {
    FuzzySystem::new(shipped().ranking).expect("shipped ranking system is valid")
}

/// Operator controller: inputs `stagnation` and `diversity` on `[0, 1]`,
/// outputs `mutation` and `crossover` multipliers on `[0.5, 2]`.
pub fn build_controller_system() -> FuzzySystem {
    FuzzySystem::new(shipped().controller).expect("shipped controller system is valid")
}
