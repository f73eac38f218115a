//! Product geometry: per-direction interference, contact and connection
//! matrices plus the gripper catalog.
//!
//! Row `i` of the interference matrix for direction `d` marks the components
//! that stop component `i` from being pulled out along `d`. Contact and
//! connection matrices are carried along and validated, but only the
//! interference matrices decide removability.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitset::PartSet;

/// Components already taken out of the product.
pub type RemovedSet = PartSet;

/// The six axis directions used when a product does not declare its own.
pub const CANONICAL_DIRECTIONS: [&str; 6] = ["+x", "-x", "+y", "-y", "+z", "-z"];

#[derive(Debug, Error)]
pub enum ProductError {
    #[error("malformed product file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("failed to read product: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid product field `{field}`: {reason}")]
    Validation { field: String, reason: String },
    #[error("component {part} does not exist (product has {n} components)")]
    UnknownPart { part: usize, n: usize },
}

impl ProductError {
    fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ProductError::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DirectionId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GripperId(pub usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Direction {
    pub label: String,
    /// Reverse direction, when the label set contains one (`+x` <-> `-x`).
    pub opposite: Option<DirectionId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub name: String,
    pub grippers: Vec<GripperId>,
}

/// Square boolean matrix stored as one bitset per row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoolMatrix {
    rows: Vec<PartSet>,
}

impl BoolMatrix {
    pub fn empty(n: usize) -> Self {
        BoolMatrix {
            rows: vec![PartSet::new(n); n],
        }
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Self {
        let n = rows.len();
        BoolMatrix {
            rows: rows
                .iter()
                .map(|r| PartSet::from_parts(n, r.iter().enumerate().filter(|(_, &b)| b).map(|(j, _)| j)))
                .collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].contains(j)
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        if value {
            self.rows[i].insert(j);
        } else {
            self.rows[i].remove(j);
        }
    }

    pub fn row(&self, i: usize) -> &PartSet {
        &self.rows[i]
    }

    fn to_rows(&self) -> Vec<Vec<u8>> {
        let n = self.size();
        (0..n)
            .map(|i| (0..n).map(|j| u8::from(self.get(i, j))).collect())
            .collect()
    }

    fn without(&self, part: usize) -> Self {
        let n = self.size();
        let keep: Vec<usize> = (0..n).filter(|&i| i != part).collect();
        let mut out = BoolMatrix::empty(n - 1);
        for (ni, &i) in keep.iter().enumerate() {
            for (nj, &j) in keep.iter().enumerate() {
                out.set(ni, nj, self.get(i, j));
            }
        }
        out
    }
}

/// One step of a disassembly plan: which part, along which direction, with
/// which gripper.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PlanStep {
    pub part: usize,
    pub direction: DirectionId,
    pub gripper: GripperId,
}

/// A validated product. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductModel {
    name: String,
    components: Vec<Component>,
    directions: Vec<Direction>,
    grippers: Vec<String>,
    interference: Vec<BoolMatrix>,
    contact: Vec<BoolMatrix>,
    connection: Vec<BoolMatrix>,
    reference_plan: Option<Vec<PlanStep>>,
}

impl ProductModel {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Component count.
    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn direction_count(&self) -> usize {
        self.directions.len()
    }

    pub fn direction(&self, id: DirectionId) -> &Direction {
        &self.directions[id.0]
    }

    pub fn direction_by_label(&self, label: &str) -> Option<DirectionId> {
        self.directions.iter().position(|d| d.label == label).map(DirectionId)
    }

    pub fn gripper_catalog(&self) -> &[String] {
        &self.grippers
    }

    pub fn gripper_label(&self, id: GripperId) -> &str {
        &self.grippers[id.0]
    }

    pub fn gripper_by_label(&self, label: &str) -> Option<GripperId> {
        self.grippers.iter().position(|g| g == label).map(GripperId)
    }

    pub fn allowed_grippers(&self, part: usize) -> &[GripperId] {
        &self.components[part].grippers
    }

    pub fn interference(&self, dir: DirectionId) -> &BoolMatrix {
        &self.interference[dir.0]
    }

    pub fn contact(&self, dir: DirectionId) -> &BoolMatrix {
        &self.contact[dir.0]
    }

    pub fn connection(&self, dir: DirectionId) -> &BoolMatrix {
        &self.connection[dir.0]
    }

    /// Plan the fixture author declares optimal, if any. Used as the success
    /// target for products too large for exhaustive search.
    pub fn reference_plan(&self) -> Option<&[PlanStep]> {
        self.reference_plan.as_deref()
    }

    /// True iff no remaining component blocks `part` along `dir`.
    pub fn removable(&self, part: usize, dir: DirectionId, removed: &RemovedSet) -> bool {
        self.interference[dir.0].row(part).is_subset(removed)
    }

    /// The model left after taking `part` out: its row and column vanish from
    /// every matrix and higher indices shift down by one. The reference plan
    /// does not survive reduction.
    pub fn reduce(&self, part: usize) -> Result<ProductModel, ProductError> {
        let n = self.n();
        if part >= n {
            return Err(ProductError::UnknownPart { part, n });
        }
        let mut components = self.components.clone();
        components.remove(part);
        Ok(ProductModel {
            name: self.name.clone(),
            components,
            directions: self.directions.clone(),
            grippers: self.grippers.clone(),
            interference: self.interference.iter().map(|m| m.without(part)).collect(),
            contact: self.contact.iter().map(|m| m.without(part)).collect(),
            connection: self.connection.iter().map(|m| m.without(part)).collect(),
            reference_plan: None,
        })
    }

    pub fn from_file(file: ProductFile) -> Result<ProductModel, ProductError> {
        let n = file.components.len();
        if file.directions.is_empty() {
            return Err(ProductError::invalid("directions", "at least one direction is required"));
        }
        for (i, label) in file.directions.iter().enumerate() {
            if file.directions[..i].contains(label) {
                return Err(ProductError::invalid("directions", format!("duplicate label {label:?}")));
            }
        }
        for (i, g) in file.grippers.iter().enumerate() {
            if file.grippers[..i].contains(g) {
                return Err(ProductError::invalid("grippers", format!("duplicate gripper {g:?}")));
            }
        }

        let directions = file
            .directions
            .iter()
            .map(|label| Direction {
                label: label.clone(),
                opposite: opposite_label(label)
                    .and_then(|o| file.directions.iter().position(|d| *d == o))
                    .map(DirectionId),
            })
            .collect::<Vec<_>>();

        let mut components = Vec::with_capacity(n);
        for (idx, c) in file.components.iter().enumerate() {
            let field = format!("components[{idx}]");
            if c.id != idx {
                return Err(ProductError::invalid(
                    format!("{field}.id"),
                    format!("expected id {idx}, found {}", c.id),
                ));
            }
            if c.grippers.is_empty() {
                return Err(ProductError::invalid(
                    format!("{field}.grippers"),
                    "every component needs at least one allowed gripper",
                ));
            }
            let mut grippers = Vec::with_capacity(c.grippers.len());
            for g in &c.grippers {
                let id = file.grippers.iter().position(|x| x == g).ok_or_else(|| {
                    ProductError::invalid(format!("{field}.grippers"), format!("gripper {g:?} is not in the catalog"))
                })?;
                if grippers.contains(&GripperId(id)) {
                    return Err(ProductError::invalid(format!("{field}.grippers"), format!("duplicate gripper {g:?}")));
                }
                grippers.push(GripperId(id));
            }
            components.push(Component {
                name: c.name.clone(),
                grippers,
            });
        }

        let interference = load_matrices("interference", &file.interference, &file.directions, n)?;
        let contact = load_matrices("contact", &file.contact, &file.directions, n)?;
        let connection = load_matrices("connection", &file.connection, &file.directions, n)?;

        let mut model = ProductModel {
            name: file.name,
            components,
            directions,
            grippers: file.grippers,
            interference,
            contact,
            connection,
            reference_plan: None,
        };
        if let Some(steps) = file.reference_plan {
            model.reference_plan = Some(model.resolve_steps(&steps, "reference_plan")?);
        }
        Ok(model)
    }

    /// Resolves labelled steps against this model and checks that they form a
    /// complete plan: a permutation of all parts with allowed grippers.
    pub fn resolve_steps(&self, steps: &[StepRecord], field: &str) -> Result<Vec<PlanStep>, ProductError> {
        let n = self.n();
        if steps.len() != n {
            return Err(ProductError::invalid(field, format!("expected {n} steps, found {}", steps.len())));
        }
        let mut seen = vec![false; n];
        let mut out = Vec::with_capacity(n);
        for (k, s) in steps.iter().enumerate() {
            let f = format!("{field}[{k}]");
            if s.part >= n || seen[s.part] {
                return Err(ProductError::invalid(f, format!("part {} is out of range or repeated", s.part)));
            }
            seen[s.part] = true;
            let direction = self
                .direction_by_label(&s.direction)
                .ok_or_else(|| ProductError::invalid(&f, format!("unknown direction {:?}", s.direction)))?;
            let gripper = self
                .gripper_by_label(&s.gripper)
                .filter(|g| self.allowed_grippers(s.part).contains(g))
                .ok_or_else(|| ProductError::invalid(&f, format!("gripper {:?} not allowed for part {}", s.gripper, s.part)))?;
            out.push(PlanStep {
                part: s.part,
                direction,
                gripper,
            });
        }
        Ok(out)
    }

    pub fn step_record(&self, step: &PlanStep) -> StepRecord {
        StepRecord {
            part: step.part,
            direction: self.direction(step.direction).label.clone(),
            gripper: self.gripper_label(step.gripper).to_string(),
        }
    }

    pub fn to_file(&self) -> ProductFile {
        let labels: Vec<String> = self.directions.iter().map(|d| d.label.clone()).collect();
        let dump = |ms: &[BoolMatrix]| -> BTreeMap<String, Vec<Vec<u8>>> {
            labels.iter().cloned().zip(ms.iter().map(BoolMatrix::to_rows)).collect()
        };
        ProductFile {
            name: self.name.clone(),
            components: self
                .components
                .iter()
                .enumerate()
                .map(|(id, c)| ComponentRecord {
                    id,
                    name: c.name.clone(),
                    grippers: c.grippers.iter().map(|g| self.grippers[g.0].clone()).collect(),
                })
                .collect(),
            directions: labels.clone(),
            grippers: self.grippers.clone(),
            interference: dump(&self.interference),
            contact: dump(&self.contact),
            connection: dump(&self.connection),
            reference_plan: self
                .reference_plan
                .as_ref()
                .map(|steps| steps.iter().map(|s| self.step_record(s)).collect()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("product serialization cannot fail")
    }
}

fn opposite_label(label: &str) -> Option<String> {
    if let Some(rest) = label.strip_prefix('+') {
        Some(format!("-{rest}"))
    } else {
        label.strip_prefix('-').map(|rest| format!("+{rest}"))
    }
}

fn load_matrices(
    kind: &str,
    maps: &BTreeMap<String, Vec<Vec<u8>>>,
    directions: &[String],
    n: usize,
) -> Result<Vec<BoolMatrix>, ProductError> {
    if let Some(extra) = maps.keys().find(|k| !directions.contains(k)) {
        return Err(ProductError::invalid(format!("{kind}.{extra}"), "direction is not declared"));
    }
    directions
        .iter()
        .map(|d| {
            let field = format!("{kind}.{d}");
            let rows = maps
                .get(d)
                .ok_or_else(|| ProductError::invalid(&field, "matrix missing for declared direction"))?;
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
                return Err(ProductError::invalid(
                    &field,
                    format!("expected {n}x{n} matrix, found {}x{cols}", rows.len()),
                ));
            }
            let mut m = BoolMatrix::empty(n);
            for (i, row) in rows.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    match v {
                        0 => {}
                        1 if i == j => {
                            return Err(ProductError::invalid(
                                &field,
                                format!("diagonal entry ({i},{i}) must be 0"),
                            ))
                        }
                        1 => m.set(i, j, true),
                        _ => {
                            return Err(ProductError::invalid(&field, format!("entry ({i},{j}) is {v}, expected 0 or 1")))
                        }
                    }
                }
            }
            Ok(m)
        })
        .collect()
}

/// Reads and validates a product from a JSON byte stream.
pub fn load_product(mut source: impl Read) -> Result<ProductModel, ProductError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let file: ProductFile = serde_json::from_str(&text)?;
    ProductModel::from_file(file)
}

/// On-disk product layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductFile {
    pub name: String,
    pub components: Vec<ComponentRecord>,
    pub directions: Vec<String>,
    pub grippers: Vec<String>,
    pub interference: BTreeMap<String, Vec<Vec<u8>>>,
    pub contact: BTreeMap<String, Vec<Vec<u8>>>,
    pub connection: BTreeMap<String, Vec<Vec<u8>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_plan: Option<Vec<StepRecord>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentRecord {
    pub id: usize,
    pub name: String,
    pub grippers: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub part: usize,
    pub direction: String,
    pub gripper: String,
}

/// Builds products in code. Matrices start all-zero.
#[derive(Clone, Debug)]
pub struct ProductBuilder {
    file: ProductFile,
}

impl ProductBuilder {
    pub fn new(name: &str, n: usize, directions: &[&str], grippers: &[&str]) -> Self {
        let zero = || {
            directions
                .iter()
                .map(|d| (d.to_string(), vec![vec![0u8; n]; n]))
                .collect::<BTreeMap<_, _>>()
        };
        ProductBuilder {
            file: ProductFile {
                name: name.to_string(),
                components: (0..n)
                    .map(|id| ComponentRecord {
                        id,
                        name: format!("part {id}"),
                        grippers: vec![grippers[0].to_string()],
                    })
                    .collect(),
                directions: directions.iter().map(|d| d.to_string()).collect(),
                grippers: grippers.iter().map(|g| g.to_string()).collect(),
                interference: zero(),
                contact: zero(),
                connection: zero(),
                reference_plan: None,
            },
        }
    }

    pub fn grippers(mut self, part: usize, allowed: &[&str]) -> Self {
        self.file.components[part].grippers = allowed.iter().map(|g| g.to_string()).collect();
        self
    }

    /// `blocker` stops `part` from moving along `dir`.
    pub fn block(mut self, part: usize, dir: &str, blocker: usize) -> Self {
        self.file.interference.get_mut(dir).expect("unknown direction")[part][blocker] = 1;
        self
    }

    /// `blocker` stops `part` along every declared direction.
    pub fn block_all(mut self, part: usize, blocker: usize) -> Self {
        for m in self.file.interference.values_mut() {
            m[part][blocker] = 1;
        }
        self
    }

    pub fn contact(mut self, a: usize, dir: &str, b: usize) -> Self {
        self.file.contact.get_mut(dir).expect("unknown direction")[a][b] = 1;
        self
    }

    pub fn connect(mut self, a: usize, dir: &str, b: usize) -> Self {
        self.file.connection.get_mut(dir).expect("unknown direction")[a][b] = 1;
        self
    }

    pub fn into_file(self) -> ProductFile {
        self.file
    }

    pub fn build(self) -> Result<ProductModel, ProductError> {
        ProductModel::from_file(self.file)
    }
}
