//! Evoked-response classification task.
//!
//! A chromosome carries four sub-chromosomes:
//!
//! | task | feature ids            | attributes                                   | size |
//! |------|------------------------|----------------------------------------------|------|
//! | 0    | sensor 1..=62          | weight, real [-4, 4]                          | 1..=5 |
//! | 1    | teacher 1..=47         | none                                          | 1..=2 |
//! | 2    | reference ptr 97..=250 | skip length, int [1, 12]                      | 1..=2 |
//! | 3    | qualification 1..=255  | cutoff real [0.1, 20], order int [1, 15], amplitude real [0, 1] | 1..=2 |
//!
//! Tasks 1, 2 and 3 are length-linked; slot `k` of each describes the k-th
//! detector. Sensors and weights form a composite signal per subject; each
//! detector reads its supports off a teacher's composite signal and scores
//! every subject. The penalty is one minus the AUC of the alcoholic scores
//! against the control scores.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::genome::{
    validate_chromosome, Attr, AttrKind, AttributeSchema, Chromosome, Feature, LinkedGroups,
    Problem, SubChromosome, TaskSpec,
};
use crate::tpd::{scan_phi, Signal, ToleranceSpec};

pub const LEADS: usize = 62;
pub const SAMPLES: usize = 256;

pub const SENSOR_TASK: usize = 0;
pub const TEACHER_TASK: usize = 1;
pub const REFERENCE_TASK: usize = 2;
pub const QUALIFICATION_TASK: usize = 3;

/// Largest lag multiplier encoded by a qualification id.
pub const MAX_PHI: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Alcoholic,
    Control,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Alcoholic => "alcoholic",
            Label::Control => "control",
        })
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "alcoholic" => Ok(Label::Alcoholic),
            "control" => Ok(Label::Control),
            other => Err(format!("unknown label `{other}` (expected alcoholic or control)")),
        }
    }
}

/// One subject's averaged 62 × 256 recording.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    subject_id: String,
    label: Label,
    signals: Vec<f64>,
}

impl SubjectRecord {
    /// `signals` is row-major, one row of 256 samples per lead.
    pub fn new(subject_id: impl Into<String>, label: Label, signals: Vec<f64>) -> Result<Self> {
        let subject_id = subject_id.into();
        if signals.len() != LEADS * SAMPLES {
            return Err(Error::InvalidParameter(format!(
                "subject {subject_id}: expected {LEADS}x{SAMPLES} samples, got {}",
                signals.len()
            )));
        }
        Ok(Self {
            subject_id,
            label,
            signals,
        })
    }

    pub fn from_rows(subject_id: impl Into<String>, label: Label, rows: Vec<Vec<f64>>) -> Result<Self> {
        let subject_id = subject_id.into();
        if rows.len() != LEADS {
            return Err(Error::InvalidParameter(format!(
                "subject {subject_id}: expected {LEADS} leads, got {}",
                rows.len()
            )));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != SAMPLES) {
            return Err(Error::InvalidParameter(format!(
                "subject {subject_id}: lead {} has {} samples, expected {SAMPLES}",
                i + 1,
                r.len()
            )));
        }
        Self::new(subject_id, label, rows.concat())
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn label(&self) -> Label {
        self.label
    }

    /// Samples of the 1-based lead `lead`.
    pub fn lead(&self, lead: u32) -> &[f64] {
        let i = lead as usize - 1;
        &self.signals[i * SAMPLES..(i + 1) * SAMPLES]
    }

    pub fn signals(&self) -> &[f64] {
        &self.signals
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = label;
        self
    }
}

/// Bounds of the four encoded tasks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodingSpec {
    /// Number of alcoholic training subjects usable as teachers.
    pub n_teachers: u32,
    pub max_sensors: usize,
    pub max_detectors: usize,
}

impl Default for EncodingSpec {
    fn default() -> Self {
        Self {
            n_teachers: 47,
            max_sensors: 5,
            max_detectors: 2,
        }
    }
}

impl EncodingSpec {
    pub fn with_teachers(n_teachers: u32) -> Self {
        Self {
            n_teachers,
            ..Self::default()
        }
    }

    pub fn problem(&self) -> Result<Problem> {
        use AttrKind::{Integer, Real};
        let sensors = TaskSpec::new(
            1,
            LEADS as u32,
            1,
            self.max_sensors,
            AttributeSchema::new(vec![4.0], vec![-4.0], vec![Real])?,
        )?;
        let teachers = TaskSpec::new(1, self.n_teachers, 1, self.max_detectors, AttributeSchema::empty())?;
        let references = TaskSpec::new(
            97,
            250,
            1,
            self.max_detectors,
            AttributeSchema::new(vec![12.0], vec![1.0], vec![Integer])?,
        )?;
        let qualification = TaskSpec::new(
            1,
            255,
            1,
            self.max_detectors,
            AttributeSchema::new(
                vec![20.0, 15.0, 1.0],
                vec![0.1, 1.0, 0.0],
                vec![Real, Integer, Real],
            )?,
        )?;
        Problem::new(
            vec![sensors, teachers, references, qualification],
            LinkedGroups::new(vec![vec![TEACHER_TASK, REFERENCE_TASK, QUALIFICATION_TASK]]),
        )
    }
}

/// Weighted sum of the selected leads.
pub fn composite_signal(subject: &SubjectRecord, sensors: &SubChromosome) -> Signal {
    let mut out = vec![0.0; SAMPLES];
    for f in &sensors.features {
        let w = f.attributes[0].as_f64();
        for (o, &x) in out.iter_mut().zip(subject.lead(f.id)) {
            *o += w * x;
        }
    }
    Signal::new(out).expect("composite has SAMPLES samples")
}

/// Lag multipliers selected by the set bits of `q`; bit 1 is the least
/// significant.
pub fn decode_qualification(q: u32) -> Result<Vec<u32>> {
    if !(1..=255).contains(&q) {
        return Err(Error::InvalidParameter(format!("qualification id {q} outside 1..=255")));
    }
    Ok((1..=MAX_PHI).filter(|j| q >> (j - 1) & 1 == 1).collect())
}

/// Detector whose supports are the teacher's amplitude differences between
/// the reference pointer `rp` and the positions `rp - phi·skip`.
pub fn build_tpd(
    teacher: &Signal,
    rp: usize,
    skip: usize,
    phis: &[u32],
    cutoff: f64,
    order: u32,
    amplitude: f64,
) -> Result<ToleranceSpec> {
    let gammas: Vec<usize> = phis.iter().map(|&p| p as usize * skip).collect();
    if let Some(&g) = gammas.iter().find(|&&g| g >= rp) {
        return Err(Error::OutOfDomain {
            index: rp,
            min: g + 1,
            max: teacher.len(),
        });
    }
    if rp > teacher.len() {
        return Err(Error::OutOfDomain {
            index: rp,
            min: 1,
            max: teacher.len(),
        });
    }
    let head = teacher.at(rp);
    let supports = gammas.iter().map(|&g| head - teacher.at(rp - g)).collect();
    ToleranceSpec::new(gammas, supports, amplitude, cutoff, order)
}

/// Mann-Whitney estimate of P(pos > neg), ties counted one half.
pub fn auc(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.is_empty() {
        return Err(Error::EmptySample("positive scores"));
    }
    if neg.is_empty() {
        return Err(Error::EmptySample("negative scores"));
    }
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&x| (x, true))
        .chain(neg.iter().map(|&x| (x, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Sum of midranks of the positives, doubled to stay in integers.
    let mut twice_rank_sum: u64 = 0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        // ranks i+1 ..= j+1, midrank (i + j + 2) / 2
        let twice_mid = (i + j + 2) as u64;
        let n_pos = all[i..=j].iter().filter(|e| e.1).count() as u64;
        twice_rank_sum += twice_mid * n_pos;
        i = j + 1;
    }
    let (np, nn) = (pos.len() as u64, neg.len() as u64);
    let twice_u = twice_rank_sum - np * (np + 1);
    Ok(twice_u as f64 / 2.0 / (np * nn) as f64)
}

/// One decoded detector slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorGene {
    pub teacher: u32,
    pub reference: u32,
    pub skip: i64,
    pub qualification: u32,
    pub cutoff: f64,
    pub order: i64,
    pub amplitude: f64,
}

/// Phenotype-level view of a chromosome.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub sensors: Vec<(u32, f64)>,
    pub detectors: Vec<DetectorGene>,
}

impl Decoded {
    pub fn from_chromosome(c: &Chromosome) -> Result<Self> {
        if c.subs().len() != 4 {
            return Err(Error::InvalidChromosome(format!(
                "expected 4 sub-chromosomes, found {}",
                c.subs().len()
            )));
        }
        let sensors = c
            .sub(SENSOR_TASK)
            .features
            .iter()
            .map(|f| (f.id, f.attributes.first().map_or(f64::NAN, |a| a.as_f64())))
            .collect();
        let (t, r, q) = (c.sub(TEACHER_TASK), c.sub(REFERENCE_TASK), c.sub(QUALIFICATION_TASK));
        if t.len() != r.len() || t.len() != q.len() {
            return Err(Error::InvalidChromosome("detector sub-chromosomes differ in length".into()));
        }
        let int = |a: Option<&Attr>| match a {
            Some(Attr::Int(v)) => Ok(*v),
            _ => Err(Error::InvalidChromosome("expected an integer attribute".into())),
        };
        let real = |a: Option<&Attr>| match a {
            Some(Attr::Real(v)) => Ok(*v),
            _ => Err(Error::InvalidChromosome("expected a real attribute".into())),
        };
        let mut detectors = Vec::with_capacity(t.len());
        for k in 0..t.len() {
            let (rf, qf) = (&r.features[k], &q.features[k]);
            detectors.push(DetectorGene {
                teacher: t.features[k].id,
                reference: rf.id,
                skip: int(rf.attributes.first())?,
                qualification: qf.id,
                cutoff: real(qf.attributes.first())?,
                order: int(qf.attributes.get(1))?,
                amplitude: real(qf.attributes.get(2))?,
            });
        }
        Ok(Self { sensors, detectors })
    }

    pub fn to_chromosome(&self) -> Chromosome {
        let sensors = self
            .sensors
            .iter()
            .map(|&(id, w)| Feature::new(id, vec![Attr::Real(w)]))
            .collect();
        let mut teachers = Vec::new();
        let mut refs = Vec::new();
        let mut quals = Vec::new();
        for d in &self.detectors {
            teachers.push(Feature::new(d.teacher, vec![]));
            refs.push(Feature::new(d.reference, vec![Attr::Int(d.skip)]));
            quals.push(Feature::new(
                d.qualification,
                vec![Attr::Real(d.cutoff), Attr::Int(d.order), Attr::Real(d.amplitude)],
            ));
        }
        Chromosome::new(vec![
            SubChromosome::new(SENSOR_TASK, sensors),
            SubChromosome::new(TEACHER_TASK, teachers),
            SubChromosome::new(REFERENCE_TASK, refs),
            SubChromosome::new(QUALIFICATION_TASK, quals),
        ])
    }
}

/// Scores chromosomes against a subject set, with teachers drawn from the
/// alcoholic training subjects (teacher id `k` is the k-th of them).
#[derive(Debug, Clone)]
pub struct AlcoholTask {
    problem: Problem,
    teachers: Vec<SubjectRecord>,
}

impl AlcoholTask {
    /// `training` supplies the teachers: its alcoholic subjects, in order.
    pub fn new(training: &[SubjectRecord], encoding: EncodingSpec) -> Result<Self> {
        let teachers: Vec<SubjectRecord> = training
            .iter()
            .filter(|s| s.label == Label::Alcoholic)
            .cloned()
            .collect();
        if teachers.len() != encoding.n_teachers as usize {
            return Err(Error::InvalidParameter(format!(
                "encoding expects {} teachers, training set has {} alcoholic subjects",
                encoding.n_teachers,
                teachers.len()
            )));
        }
        Ok(Self {
            problem: encoding.problem()?,
            teachers,
        })
    }

    /// Encoding sized to the training set.
    pub fn from_training(training: &[SubjectRecord]) -> Result<Self> {
        let n = training.iter().filter(|s| s.label == Label::Alcoholic).count();
        Self::new(training, EncodingSpec::with_teachers(n as u32))
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn teachers(&self) -> &[SubjectRecord] {
        &self.teachers
    }

    /// Detectors encoded by `chrom`, one per linked slot.
    pub fn detectors(&self, chrom: &Chromosome) -> Result<Vec<ToleranceSpec>> {
        validate_chromosome(chrom, &self.problem).into_result()?;
        let decoded = Decoded::from_chromosome(chrom)?;
        let sensors = chrom.sub(SENSOR_TASK);
        // composite per teacher id, built once per evaluation
        let mut cache: Vec<(u32, Signal)> = Vec::new();
        let mut out = Vec::with_capacity(decoded.detectors.len());
        for d in &decoded.detectors {
            let teacher = match cache.iter().find(|(id, _)| *id == d.teacher) {
                Some((_, s)) => s.clone(),
                None => {
                    let s = composite_signal(&self.teachers[d.teacher as usize - 1], sensors);
                    cache.push((d.teacher, s.clone()));
                    s
                }
            };
            let phis = decode_qualification(d.qualification)?;
            out.push(build_tpd(
                &teacher,
                d.reference as usize,
                d.skip as usize,
                &phis,
                d.cutoff,
                d.order as u32,
                d.amplitude,
            )?);
        }
        Ok(out)
    }

    /// Summed detector score of every subject, in input order.
    pub fn phi_totals(&self, chrom: &Chromosome, subjects: &[SubjectRecord]) -> Result<Vec<f64>> {
        let tpds = self.detectors(chrom)?;
        let sensors = chrom.sub(SENSOR_TASK);
        subjects
            .iter()
            .map(|s| {
                let comp = composite_signal(s, sensors);
                tpds.iter().map(|t| scan_phi(&comp, t)).sum::<Result<f64>>()
            })
            .collect()
    }

    /// `1 - AUC` of alcoholic against control scores on `subjects`.
    pub fn evaluate(&self, chrom: &Chromosome, subjects: &[SubjectRecord]) -> Result<f64> {
        let phis = self.phi_totals(chrom, subjects)?;
        let (mut pos, mut neg) = (Vec::new(), Vec::new());
        for (s, phi) in subjects.iter().zip(phis) {
            match s.label {
                Label::Alcoholic => pos.push(phi),
                Label::Control => neg.push(phi),
            }
        }
        Ok(1.0 - auc(&pos, &neg)?)
    }
}
