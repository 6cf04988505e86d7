//! Mix-and-match blend crossover for chromosomes made of several
//! variable-length subsets of attributed features.
//!
//! For every task the two parents' features are split into three bags:
//! features both parents carry (common), features exactly one carries
//! (unique) and features neither carries (absent). Attributes in each bag
//! are modified before inheritance:
//!
//! * common: BLX-beta of the two parental vectors,
//! * unique: flat blend inside a window of `gamma` times the schema range,
//!   centred on the parental vector,
//! * absent: uniform over the schema bounds.
//!
//! The offspring length is a flat blend of the parental lengths widened by
//! `alpha`. Features are then drawn without replacement from the bags
//! following one of two procedures. [`Mode::Exploit`] empties the common bag
//! first, so the absent-draw (mutation) rate falls as the population
//! converges. [`Mode::Explore`] mixes common and absent draws at a fixed
//! ratio on every slot.

use std::collections::HashMap;
use std::iter::Sum;
use std::ops::{Add, AddAssign};

use crate::blx::{blend_scalar, blx, BlendBounds};
use crate::error::{Error, Result};
use crate::genome::{
    validate_chromosome, Attr, AttributeSchema, Chromosome, Feature, Problem,
    SubChromosome, TaskSpec,
};
use crate::rng::RandomSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Exploit,
    Explore,
}

/// Which bag `delta` is the probability of in a two-bag choice.
///
/// Every two-bag choice pairs a first bag (unique or common) with the
/// absent bag. `FirstBag` gives the first bag probability `delta`;
/// `AbsentBag` gives the absent bag probability `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DeltaSelects {
    #[default]
    FirstBag,
    AbsentBag,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossoverParams {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub gamma: f64,
    pub mode: Mode,
    pub delta_selects: DeltaSelects,
}

impl CrossoverParams {
    pub fn new(alpha: f64, beta: f64, delta: f64, gamma: f64, mode: Mode) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            delta,
            gamma,
            mode,
            delta_selects: DeltaSelects::FirstBag,
        };
        p.validate()?;
        Ok(p)
    }

    /// alpha = 1, beta = 1.4, delta = 0.85, gamma = 0.75.
    pub fn standard(mode: Mode) -> Self {
        Self {
            alpha: 1.0,
            beta: 1.4,
            delta: 0.85,
            gamma: 0.75,
            mode,
            delta_selects: DeltaSelects::FirstBag,
        }
    }

    pub fn with_delta_selects(mut self, selects: DeltaSelects) -> Self {
        self.delta_selects = selects;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: String| if ok { Ok(()) } else { Err(Error::InvalidParameter(msg)) };
        check(self.alpha >= 0.0, format!("alpha = {} must be >= 0", self.alpha))?;
        check(self.beta >= 0.0, format!("beta = {} must be >= 0", self.beta))?;
        check(self.gamma >= 0.0, format!("gamma = {} must be >= 0", self.gamma))?;
        check(
            (0.0..=1.0).contains(&self.delta),
            format!("delta = {} must lie in [0, 1]", self.delta),
        )
    }
}

/// How many offspring features came from each bag.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct DrawTally {
    pub from_common: usize,
    pub from_unique: usize,
    pub from_absent: usize,
}

impl DrawTally {
    pub fn total(&self) -> usize {
        self.from_common + self.from_unique + self.from_absent
    }
}

impl Add for DrawTally {
    type Output = DrawTally;

    fn add(self, o: DrawTally) -> DrawTally {
        DrawTally {
            from_common: self.from_common + o.from_common,
            from_unique: self.from_unique + o.from_unique,
            from_absent: self.from_absent + o.from_absent,
        }
    }
}

impl AddAssign for DrawTally {
    fn add_assign(&mut self, o: DrawTally) {
        *self = *self + o;
    }
}

impl Sum for DrawTally {
    fn sum<I: Iterator<Item = DrawTally>>(iter: I) -> DrawTally {
        iter.fold(DrawTally::default(), Add::add)
    }
}

/// Id-wise split of two parents before any attribute modification.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPartition {
    /// `(id, parent-1 attributes, parent-2 attributes)`
    pub common: Vec<(u32, Vec<Attr>, Vec<Attr>)>,
    /// Copies of the owning parent's feature.
    pub unique: Vec<Feature>,
    pub absent: Vec<u32>,
}

/// The three bags with modified attributes, ready for inheritance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureBags {
    pub common: Vec<Feature>,
    pub unique: Vec<Feature>,
    pub absent: Vec<Feature>,
}

impl FeatureBags {
    pub fn len(&self) -> usize {
        self.common.len() + self.unique.len() + self.absent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Length of an offspring sub-chromosome: a flat blend over the parental
/// lengths widened by `alpha`, clamped to the task's subset bounds and
/// rounded.
pub fn offspring_length(
    len1: usize,
    len2: usize,
    spec: &TaskSpec,
    alpha: f64,
    rng: &mut RandomSource,
) -> Result<usize> {
    let (l1, l2) = (len1 as f64, len2 as f64);
    let lo = (l1 - alpha).min(l2 - alpha);
    let hi = (l1 + alpha).max(l2 + alpha);
    let raw = blend_scalar(
        lo,
        hi,
        spec.subset_max() as f64,
        spec.subset_min() as f64,
        0.0,
        rng,
    )?;
    let len = raw.round() as usize;
    Ok(len.clamp(spec.subset_min(), spec.subset_max()))
}

/// Splits the task universe into common, unique and absent ids. The parents
/// are only read.
pub fn partition(p1: &SubChromosome, p2: &SubChromosome, spec: &TaskSpec) -> RawPartition {
    let m1: HashMap<u32, &Feature> = p1.features.iter().map(|f| (f.id, f)).collect();
    let m2: HashMap<u32, &Feature> = p2.features.iter().map(|f| (f.id, f)).collect();
    let mut out = RawPartition {
        common: Vec::new(),
        unique: Vec::new(),
        absent: Vec::new(),
    };
    for id in spec.universe() {
        match (m1.get(&id), m2.get(&id)) {
            (Some(a), Some(b)) => out
                .common
                .push((id, a.attributes.clone(), b.attributes.clone())),
            (Some(f), None) | (None, Some(f)) => out.unique.push((*f).clone()),
            (None, None) => out.absent.push(id),
        }
    }
    out
}

fn values(att: &[Attr]) -> Vec<f64> {
    att.iter().map(|a| a.as_f64()).collect()
}

/// BLX-beta of a common feature's two parental attribute vectors.
pub fn blend_common(
    att1: &[Attr],
    att2: &[Attr],
    schema: &AttributeSchema,
    beta: f64,
    rng: &mut RandomSource,
) -> Result<Vec<Attr>> {
    let out = blx(&values(att1), &values(att2), &BlendBounds::from(schema), beta, rng)?;
    Ok(schema.typed(&out))
}

/// Flat blend inside `att ± range·gamma/2`, clamped to the schema.
pub fn perturb_unique(
    att: &[Attr],
    schema: &AttributeSchema,
    gamma: f64,
    rng: &mut RandomSource,
) -> Result<Vec<Attr>> {
    let centre = values(att);
    if centre.len() != schema.len() {
        return Err(Error::LengthMismatch {
            what: "attributes/schema",
            left: centre.len(),
            right: schema.len(),
        });
    }
    let half: Vec<f64> = schema
        .max_values()
        .iter()
        .zip(schema.min_values())
        .map(|(hi, lo)| (hi - lo) * gamma / 2.0)
        .collect();
    let upper: Vec<f64> = centre.iter().zip(&half).map(|(c, h)| c + h).collect();
    let lower: Vec<f64> = centre.iter().zip(&half).map(|(c, h)| c - h).collect();
    let out = blx(&upper, &lower, &BlendBounds::from(schema), 0.0, rng)?;
    Ok(schema.typed(&out))
}

/// Fresh attributes drawn uniformly over the schema bounds.
pub fn sample_absent(schema: &AttributeSchema, rng: &mut RandomSource) -> Vec<Attr> {
    let bounds = BlendBounds::from(schema);
    let out = blx(&bounds.vmax, &bounds.vmin, &bounds, 0.0, rng)
        .expect("schema bounds have matching lengths");
    schema.typed(&out)
}

/// Partitions the parents and modifies the attributes in every bag.
pub fn build_bags(
    p1: &SubChromosome,
    p2: &SubChromosome,
    spec: &TaskSpec,
    params: &CrossoverParams,
    rng: &mut RandomSource,
) -> Result<FeatureBags> {
    let raw = partition(p1, p2, spec);
    let schema = spec.schema();
    let mut bags = FeatureBags::default();
    for (id, a1, a2) in &raw.common {
        bags.common
            .push(Feature::new(*id, blend_common(a1, a2, schema, params.beta, rng)?));
    }
    for f in &raw.unique {
        bags.unique
            .push(Feature::new(f.id, perturb_unique(&f.attributes, schema, params.gamma, rng)?));
    }
    for &id in &raw.absent {
        bags.absent.push(Feature::new(id, sample_absent(schema, rng)));
    }
    Ok(bags)
}

fn take(bag: &mut Vec<Feature>, rng: &mut RandomSource) -> Feature {
    let i = rng.index(bag.len());
    bag.swap_remove(i)
}

/// True when the first bag of a (first, absent) pair is chosen.
fn first_bag(delta: f64, selects: DeltaSelects, rng: &mut RandomSource) -> bool {
    match selects {
        DeltaSelects::FirstBag => rng.bernoulli(delta),
        DeltaSelects::AbsentBag => !rng.bernoulli(delta),
    }
}

fn check_target(bags: &FeatureBags, target_len: usize) -> Result<()> {
    if bags.len() < target_len {
        return Err(Error::InvalidParameter(format!(
            "target length {target_len} exceeds the {} features in the bags",
            bags.len()
        )));
    }
    Ok(())
}

/// Exploit inheritance: common features first, then unique or absent.
pub fn inherit_exploit(
    mut bags: FeatureBags,
    target_len: usize,
    delta: f64,
    selects: DeltaSelects,
    rng: &mut RandomSource,
) -> Result<(Vec<Feature>, DrawTally)> {
    check_target(&bags, target_len)?;
    let mut out = Vec::with_capacity(target_len);
    let mut tally = DrawTally::default();
    while out.len() < target_len && !bags.common.is_empty() {
        out.push(take(&mut bags.common, rng));
        tally.from_common += 1;
    }
    while out.len() < target_len {
        let from_unique = match (bags.unique.is_empty(), bags.absent.is_empty()) {
            (false, false) => first_bag(delta, selects, rng),
            (false, true) => true,
            (true, false) => false,
            (true, true) => unreachable!("bag sizes checked against target length"),
        };
        if from_unique {
            out.push(take(&mut bags.unique, rng));
            tally.from_unique += 1;
        } else {
            out.push(take(&mut bags.absent, rng));
            tally.from_absent += 1;
        }
    }
    Ok((out, tally))
}

#[derive(Clone, Copy)]
enum Bag {
    Common,
    Unique,
    Absent,
}

/// Explore inheritance: every slot chooses between common and absent
/// features, falling back to the unique bag when one side is exhausted.
pub fn inherit_explore(
    mut bags: FeatureBags,
    target_len: usize,
    delta: f64,
    selects: DeltaSelects,
    rng: &mut RandomSource,
) -> Result<(Vec<Feature>, DrawTally)> {
    check_target(&bags, target_len)?;
    let mut out = Vec::with_capacity(target_len);
    let mut tally = DrawTally::default();
    while out.len() < target_len {
        let bag = match (bags.common.is_empty(), bags.absent.is_empty()) {
            (false, false) => {
                if first_bag(delta, selects, rng) {
                    Bag::Common
                } else {
                    Bag::Absent
                }
            }
            (true, false) => {
                if bags.unique.is_empty() || !first_bag(delta, selects, rng) {
                    Bag::Absent
                } else {
                    Bag::Unique
                }
            }
            (false, true) => Bag::Common,
            (true, true) => Bag::Unique,
        };
        match bag {
            Bag::Common => {
                out.push(take(&mut bags.common, rng));
                tally.from_common += 1;
            }
            Bag::Unique => {
                out.push(take(&mut bags.unique, rng));
                tally.from_unique += 1;
            }
            Bag::Absent => {
                out.push(take(&mut bags.absent, rng));
                tally.from_absent += 1;
            }
        }
    }
    Ok((out, tally))
}

/// Produces one offspring of `p1` and `p2`, with a draw tally per task.
///
/// Tasks sharing a linked group reuse the length drawn for the group's
/// lowest-indexed task.
pub fn crossover_chromosome(
    p1: &Chromosome,
    p2: &Chromosome,
    problem: &Problem,
    params: &CrossoverParams,
    rng: &mut RandomSource,
) -> Result<(Chromosome, Vec<DrawTally>)> {
    params.validate()?;
    validate_chromosome(p1, problem).into_result()?;
    validate_chromosome(p2, problem).into_result()?;

    let n = problem.len();
    let mut lengths: Vec<usize> = Vec::with_capacity(n);
    let mut subs = Vec::with_capacity(n);
    let mut tallies = Vec::with_capacity(n);
    for (i, spec) in problem.tasks().iter().enumerate() {
        let (a, b) = (p1.sub(i), p2.sub(i));
        let leader = problem.groups().leader(i);
        let len = if leader == i {
            offspring_length(a.len(), b.len(), spec, params.alpha, rng)?
        } else {
            lengths[leader]
        };
        lengths.push(len);
        let bags = build_bags(a, b, spec, params, rng)?;
        let (features, tally) = match params.mode {
            Mode::Exploit => inherit_exploit(bags, len, params.delta, params.delta_selects, rng)?,
            Mode::Explore => inherit_explore(bags, len, params.delta, params.delta_selects, rng)?,
        };
        subs.push(SubChromosome::new(i, features));
        tallies.push(tally);
    }
    Ok((Chromosome::new(subs), tallies))
}

/// A uniformly random valid sub-chromosome of the given length.
pub fn random_sub(task: usize, spec: &TaskSpec, len: usize, rng: &mut RandomSource) -> SubChromosome {
    let picks = rng.sample_indices(spec.universe_size(), len);
    let features = picks
        .into_iter()
        .map(|k| Feature::new(spec.feature_min() + k as u32, sample_absent(spec.schema(), rng)))
        .collect();
    SubChromosome::new(task, features)
}

/// A uniformly random valid chromosome: per task, length uniform on the
/// subset bounds (one draw per linked group), ids without replacement and
/// attributes uniform over the schema.
pub fn random_chromosome(problem: &Problem, rng: &mut RandomSource) -> Chromosome {
    let mut lengths: Vec<usize> = Vec::with_capacity(problem.len());
    let mut subs = Vec::with_capacity(problem.len());
    for (i, spec) in problem.tasks().iter().enumerate() {
        let leader = problem.groups().leader(i);
        let len = if leader == i {
            rng.uniform_int(spec.subset_min() as i64, spec.subset_max() as i64) as usize
        } else {
            lengths[leader]
        };
        lengths.push(len);
        subs.push(random_sub(i, spec, len, rng));
    }
    Chromosome::new(subs)
}
