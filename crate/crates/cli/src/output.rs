//! Run artifacts: `history.csv`, `sensors.csv` and `best.txt`.

use std::path::Path;

use mmx_blx::alcotask::{decode_qualification, Decoded, DetectorGene, SubjectRecord, LEADS};
use mmx_blx::evolution::GenerationStats;
use mmx_blx::genome::Chromosome;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, CliError, Result};

pub const HISTORY_HEADER: [&str; 6] = [
    "generation",
    "best_penalty",
    "mean_penalty",
    "draws_common",
    "draws_unique",
    "draws_absent",
];

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => CliError::Usage(format!("{}: {other:?}", path.display())),
    }
}

/// One row per generation; draws are summed over all tasks.
pub fn write_history(path: &Path, history: &[GenerationStats]) -> Result<()> {
    let err = csv_err(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    w.write_record(HISTORY_HEADER).map_err(&err)?;
    for s in history {
        let (c, u, a) = s.tallies.iter().fold((0, 0, 0), |(c, u, a), t| {
            (c + t.from_common, u + t.from_unique, a + t.from_absent)
        });
        w.write_record([
            s.generation.to_string(),
            s.best_penalty.to_string(),
            s.mean_penalty.to_string(),
            c.to_string(),
            u.to_string(),
            a.to_string(),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(io_err(path))
}

/// Per generation, how many survivors carry each sensor `s1..s62`.
pub fn write_sensors(path: &Path, history: &[GenerationStats]) -> Result<()> {
    let err = csv_err(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    let header = std::iter::once("generation".to_string()).chain((1..=LEADS).map(|l| format!("s{l}")));
    w.write_record(header).map_err(&err)?;
    for s in history {
        let row = std::iter::once(s.generation.to_string()).chain(
            (1..=LEADS as u32).map(|l| s.sensor_histogram.get(&l).copied().unwrap_or(0).to_string()),
        );
        w.write_record(row).map_err(&err)?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorEntry {
    pub id: u32,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorEntry {
    pub teacher: u32,
    /// Informational; ignored when read back.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub teacher_subject: Option<String>,
    pub reference: u32,
    pub skip: i64,
    pub qualification: u32,
    /// Informational; ignored when read back.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phis: Option<Vec<u32>>,
    pub cutoff: f64,
    pub order: i64,
    pub amplitude: f64,
}

/// The decoded best chromosome of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BestFile {
    pub training_penalty: f64,
    #[serde(default)]
    pub sensor: Vec<SensorEntry>,
    #[serde(default)]
    pub detector: Vec<DetectorEntry>,
}

impl BestFile {
    pub fn from_chromosome(c: &Chromosome, teachers: &[SubjectRecord]) -> Result<Self> {
        let training_penalty = c
            .penalty()
            .ok_or_else(|| CliError::Usage("best chromosome was never evaluated".into()))?;
        let d = Decoded::from_chromosome(c)?;
        let sensor = d.sensors.iter().map(|&(id, weight)| SensorEntry { id, weight }).collect();
        let detector = d
            .detectors
            .iter()
            .map(|g| DetectorEntry {
                teacher: g.teacher,
                teacher_subject: teachers.get(g.teacher as usize - 1).map(|s| s.subject_id().to_string()),
                reference: g.reference,
                skip: g.skip,
                qualification: g.qualification,
                phis: decode_qualification(g.qualification).ok(),
                cutoff: g.cutoff,
                order: g.order,
                amplitude: g.amplitude,
            })
            .collect();
        Ok(Self {
            training_penalty,
            sensor,
            detector,
        })
    }

    pub fn to_chromosome(&self) -> Chromosome {
        Decoded {
            sensors: self.sensor.iter().map(|s| (s.id, s.weight)).collect(),
            detectors: self
                .detector
                .iter()
                .map(|d| DetectorGene {
                    teacher: d.teacher,
                    reference: d.reference,
                    skip: d.skip,
                    qualification: d.qualification,
                    cutoff: d.cutoff,
                    order: d.order,
                    amplitude: d.amplitude,
                })
                .collect(),
        }
        .to_chromosome()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| CliError::BestFile {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        std::fs::write(path, text).map_err(io_err(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        toml::from_str(&text).map_err(|e| CliError::BestFile {
            path: path.to_path_buf(),
            message: e.message().to_string(),
        })
    }
}
