//! Domain types: task specifications, attributed features, variable-length
//! sub-chromosomes and the multi-task chromosome.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// Kind of one attribute element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttrKind {
    Integer,
    Real,
}

/// A single attribute value. Integer-kind elements are stored exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Attr {
    Int(i64),
    Real(f64),
}

impl Attr {
    pub fn as_f64(self) -> f64 {
        match self {
            Attr::Int(v) => v as f64,
            Attr::Real(v) => v,
        }
    }

    /// Converts a real produced by the blend operator into an attribute of
    /// the given kind. Integer-kind values are rounded half away from zero.
    pub fn from_f64(kind: AttrKind, value: f64) -> Self {
        match kind {
            AttrKind::Integer => Attr::Int(value.round() as i64),
            AttrKind::Real => Attr::Real(value),
        }
    }

    pub fn kind(self) -> AttrKind {
        match self {
            Attr::Int(_) => AttrKind::Integer,
            Attr::Real(_) => AttrKind::Real,
        }
    }
}

/// Per-element bounds and kinds of a task's attribute vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSchema {
    max_values: Vec<f64>,
    min_values: Vec<f64>,
    kinds: Vec<AttrKind>,
}

impl AttributeSchema {
    pub fn new(max_values: Vec<f64>, min_values: Vec<f64>, kinds: Vec<AttrKind>) -> Result<Self> {
        if max_values.len() != min_values.len() || max_values.len() != kinds.len() {
            return Err(Error::InvalidTask(format!(
                "attribute schema lists differ in length ({}, {}, {})",
                max_values.len(),
                min_values.len(),
                kinds.len()
            )));
        }
        for (k, (&hi, &lo)) in max_values.iter().zip(&min_values).enumerate() {
            if hi.is_nan() || lo.is_nan() || hi < lo {
                return Err(Error::InvalidTask(format!(
                    "attribute {k}: max {hi} below min {lo}"
                )));
            }
            if kinds[k] == AttrKind::Integer && (hi.fract() != 0.0 || lo.fract() != 0.0) {
                return Err(Error::InvalidTask(format!(
                    "attribute {k}: integer bounds must be whole numbers"
                )));
            }
        }
        Ok(Self {
            max_values,
            min_values,
            kinds,
        })
    }

    /// Schema with no attributes.
    pub fn empty() -> Self {
        Self {
            max_values: Vec::new(),
            min_values: Vec::new(),
            kinds: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn max_values(&self) -> &[f64] {
        &self.max_values
    }

    pub fn min_values(&self) -> &[f64] {
        &self.min_values
    }

    pub fn kinds(&self) -> &[AttrKind] {
        &self.kinds
    }

    /// Does `attributes` match this schema in length, kind and bounds?
    pub fn admits(&self, attributes: &[Attr]) -> bool {
        attributes.len() == self.len()
            && attributes.iter().enumerate().all(|(k, a)| {
                let v = a.as_f64();
                a.kind() == self.kinds[k]
                    && v.is_finite()
                    && v >= self.min_values[k]
                    && v <= self.max_values[k]
            })
    }

    /// Builds typed attributes from blended reals.
    pub fn typed(&self, values: &[f64]) -> Vec<Attr> {
        values
            .iter()
            .zip(&self.kinds)
            .map(|(&v, &kind)| Attr::from_f64(kind, v))
            .collect()
    }
}

/// Bounds for one subset-selection task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    feature_max: u32,
    feature_min: u32,
    subset_max: usize,
    subset_min: usize,
    schema: AttributeSchema,
}

impl TaskSpec {
    pub fn new(
        feature_min: u32,
        feature_max: u32,
        subset_min: usize,
        subset_max: usize,
        schema: AttributeSchema,
    ) -> Result<Self> {
        if feature_max < feature_min {
            return Err(Error::InvalidTask(format!(
                "feature_max {feature_max} below feature_min {feature_min}"
            )));
        }
        let universe = (feature_max - feature_min) as usize + 1;
        if !(universe > subset_max && subset_max >= subset_min && subset_min > 0) {
            return Err(Error::InvalidTask(format!(
                "need universe ({universe}) > subset_max ({subset_max}) >= subset_min ({subset_min}) > 0"
            )));
        }
        Ok(Self {
            feature_max,
            feature_min,
            subset_max,
            subset_min,
            schema,
        })
    }

    pub fn feature_min(&self) -> u32 {
        self.feature_min
    }

    pub fn feature_max(&self) -> u32 {
        self.feature_max
    }

    pub fn subset_min(&self) -> usize {
        self.subset_min
    }

    pub fn subset_max(&self) -> usize {
        self.subset_max
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn universe(&self) -> impl Iterator<Item = u32> {
        self.feature_min..=self.feature_max
    }

    pub fn universe_size(&self) -> usize {
        (self.feature_max - self.feature_min) as usize + 1
    }

    pub fn contains_id(&self, id: u32) -> bool {
        (self.feature_min..=self.feature_max).contains(&id)
    }
}

/// A selected feature and its attribute vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub id: u32,
    pub attributes: Vec<Attr>,
}

impl Feature {
    pub fn new(id: u32, attributes: Vec<Attr>) -> Self {
        Self { id, attributes }
    }

    pub fn attribute_values(&self) -> Vec<f64> {
        self.attributes.iter().map(|a| a.as_f64()).collect()
    }
}

/// The subset chosen for one task. Stored order carries no meaning.
#[derive(Debug, Clone, PartialEq)]
pub struct SubChromosome {
    pub task_index: usize,
    pub features: Vec<Feature>,
}

impl SubChromosome {
    pub fn new(task_index: usize, features: Vec<Feature>) -> Self {
        Self {
            task_index,
            features,
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.features.iter().map(|f| f.id)
    }

    pub fn get(&self, id: u32) -> Option<&Feature> {
        self.features.iter().find(|f| f.id == id)
    }

    /// Features sorted by id; convenient for set-style comparisons.
    pub fn sorted(&self) -> Vec<Feature> {
        let mut v = self.features.clone();
        v.sort_by_key(|f| f.id);
        v
    }
}

/// N sub-chromosomes plus a cached penalty.
///
/// The cache is cleared by every mutable access to the contents.
#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome {
    subs: Vec<SubChromosome>,
    penalty: Option<f64>,
}

impl Chromosome {
    pub fn new(subs: Vec<SubChromosome>) -> Self {
        Self {
            subs,
            penalty: None,
        }
    }

    pub fn subs(&self) -> &[SubChromosome] {
        &self.subs
    }

    pub fn sub(&self, task: usize) -> &SubChromosome {
        &self.subs[task]
    }

    /// Mutable access; invalidates the cached penalty.
    pub fn subs_mut(&mut self) -> &mut Vec<SubChromosome> {
        self.penalty = None;
        &mut self.subs
    }

    pub fn penalty(&self) -> Option<f64> {
        self.penalty
    }

    pub fn set_penalty(&mut self, penalty: f64) {
        self.penalty = Some(penalty);
    }

    pub fn with_penalty(mut self, penalty: f64) -> Self {
        self.penalty = Some(penalty);
        self
    }

    /// Same genotype, ignoring stored feature order and the penalty cache.
    pub fn same_genotype(&self, other: &Chromosome) -> bool {
        self.subs.len() == other.subs.len()
            && self
                .subs
                .iter()
                .zip(&other.subs)
                .all(|(a, b)| a.task_index == b.task_index && a.sorted() == b.sorted())
    }
}

/// Groups of task indices whose sub-chromosomes must share one length.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinkedGroups(Vec<Vec<usize>>);

impl LinkedGroups {
    pub fn none() -> Self {
        Self(Vec::new())
    }

    /// Each group is sorted; singleton and empty groups are dropped.
    pub fn new(groups: Vec<Vec<usize>>) -> Self {
        let groups = groups
            .into_iter()
            .map(|mut g| {
                g.sort_unstable();
                g.dedup();
                g
            })
            .filter(|g| g.len() > 1)
            .collect();
        Self(groups)
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.0
    }

    /// The task that supplies the shared length for `task`'s group: the
    /// lowest index in the group, or `task` itself when ungrouped.
    pub fn leader(&self, task: usize) -> usize {
        self.0
            .iter()
            .find(|g| g.contains(&task))
            .map_or(task, |g| g[0])
    }
}

/// Task specifications together with their linked-length groups.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    tasks: Vec<TaskSpec>,
    groups: LinkedGroups,
}

impl Problem {
    pub fn new(tasks: Vec<TaskSpec>, groups: LinkedGroups) -> Result<Self> {
        if tasks.is_empty() {
            return Err(Error::InvalidTask("at least one task is required".into()));
        }
        let mut seen = HashSet::new();
        for g in groups.groups() {
            for &t in g {
                if t >= tasks.len() {
                    return Err(Error::InvalidTask(format!(
                        "linked group refers to task {t}, only {} tasks",
                        tasks.len()
                    )));
                }
                if !seen.insert(t) {
                    return Err(Error::InvalidTask(format!(
                        "task {t} belongs to more than one linked group"
                    )));
                }
                let lead = &tasks[g[0]];
                if tasks[t].subset_min != lead.subset_min || tasks[t].subset_max != lead.subset_max
                {
                    return Err(Error::InvalidTask(format!(
                        "linked tasks {} and {t} have different subset bounds",
                        g[0]
                    )));
                }
            }
        }
        Ok(Self { tasks, groups })
    }

    pub fn tasks(&self) -> &[TaskSpec] {
        &self.tasks
    }

    pub fn task(&self, i: usize) -> &TaskSpec {
        &self.tasks[i]
    }

    pub fn groups(&self) -> &LinkedGroups {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }
}

/// One broken invariant found by [`validate_chromosome`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    TaskCount { expected: usize, found: usize },
    TaskIndex { position: usize, found: usize },
    Length { task: usize, len: usize, min: usize, max: usize },
    IdOutOfRange { task: usize, id: u32 },
    DuplicateId { task: usize, id: u32 },
    Attribute { task: usize, id: u32 },
    LinkedLengthsUnequal { group: Vec<usize>, lengths: Vec<usize> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TaskCount { expected, found } => {
                write!(f, "expected {expected} sub-chromosomes, found {found}")
            }
            Violation::TaskIndex { position, found } => {
                write!(f, "sub-chromosome at position {position} has task index {found}")
            }
            Violation::Length { task, len, min, max } => {
                write!(f, "task {task}: length {len} outside {min}..={max}")
            }
            Violation::IdOutOfRange { task, id } => write!(f, "task {task}: id {id} out of range"),
            Violation::DuplicateId { task, id } => write!(f, "task {task}: duplicate id {id}"),
            Violation::Attribute { task, id } => {
                write!(f, "task {task}: id {id} has attributes outside the schema")
            }
            Violation::LinkedLengthsUnequal { group, lengths } => {
                write!(f, "linked lengths unequal: tasks {group:?} have lengths {lengths:?}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            let msg: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
            Err(Error::InvalidChromosome(msg.join("; ")))
        }
    }
}

/// Checks every structural invariant of `c` against `problem`.
pub fn validate_chromosome(c: &Chromosome, problem: &Problem) -> ValidationReport {
    let mut violations = Vec::new();
    if c.subs.len() != problem.len() {
        violations.push(Violation::TaskCount {
            expected: problem.len(),
            found: c.subs.len(),
        });
        return ValidationReport { violations };
    }
    for (i, (sub, spec)) in c.subs.iter().zip(problem.tasks()).enumerate() {
        if sub.task_index != i {
            violations.push(Violation::TaskIndex {
                position: i,
                found: sub.task_index,
            });
        }
        if sub.len() < spec.subset_min || sub.len() > spec.subset_max {
            violations.push(Violation::Length {
                task: i,
                len: sub.len(),
                min: spec.subset_min,
                max: spec.subset_max,
            });
        }
        let mut seen = HashSet::new();
        for f in &sub.features {
            if !spec.contains_id(f.id) {
                violations.push(Violation::IdOutOfRange { task: i, id: f.id });
            }
            if !seen.insert(f.id) {
                violations.push(Violation::DuplicateId { task: i, id: f.id });
            }
            if !spec.schema.admits(&f.attributes) {
                violations.push(Violation::Attribute { task: i, id: f.id });
            }
        }
    }
    for g in problem.groups().groups() {
        let lengths: Vec<usize> = g.iter().map(|&t| c.subs[t].len()).collect();
        if lengths.windows(2).any(|w| w[0] != w[1]) {
            violations.push(Violation::LinkedLengthsUnequal {
                group: g.clone(),
                lengths,
            });
        }
    }
    ValidationReport { violations }
}
