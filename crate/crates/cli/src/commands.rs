//! Subcommand implementations; `main` only parses flags and prints.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mmx_blx::alcotask::{AlcoholTask, Label, SubjectRecord};
use mmx_blx::data::{self, build_subject, generate_synthetic, load_dataset, load_trial, read_manifest, reject_artifacts, Trial};
use mmx_blx::evolution::{run, GenerationStats};
use mmx_blx::genome::Chromosome;
use mmx_blx::RandomSource;

use crate::config::RunConfig;
use crate::error::{io_err, CliError, Result};
use crate::output::{write_history, write_sensors, BestFile};

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl Overrides {
    fn out_dir(&self, cfg: &RunConfig) -> PathBuf {
        self.out.clone().unwrap_or_else(|| cfg.output.dir.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetReport {
    pub train_manifest: PathBuf,
    pub test_manifest: PathBuf,
    pub train_subjects: usize,
    pub test_subjects: usize,
}

pub fn cmd_synth(cfg: &RunConfig, ov: &Overrides) -> Result<DatasetReport> {
    let section = cfg
        .synth
        .as_ref()
        .ok_or_else(|| CliError::Usage("config has no [synth] section".into()))?;
    let mut synth = section.to_synthetic();
    if let Some(seed) = ov.seed {
        synth.seed = seed;
    }
    let (train, test) = generate_synthetic(&synth)?;
    save_split(&ov.out_dir(cfg), &train, &test)
}

fn save_split(dir: &Path, train: &[SubjectRecord], test: &[SubjectRecord]) -> Result<DatasetReport> {
    Ok(DatasetReport {
        train_manifest: data::save_dataset(&dir.join("train"), train)?,
        test_manifest: data::save_dataset(&dir.join("test"), test)?,
        train_subjects: train.len(),
        test_subjects: test.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessReport {
    pub dataset: DatasetReport,
    /// Subjects left with too few clean trials, with their usable count.
    pub excluded: Vec<(String, usize)>,
}

pub fn cmd_preprocess(cfg: &RunConfig, ov: &Overrides) -> Result<PreprocessReport> {
    let p = cfg
        .preprocess
        .as_ref()
        .ok_or_else(|| CliError::Usage("config has no [preprocess] section".into()))?;
    let seed = ov.seed.unwrap_or(p.seed);
    let (mut train, mut test, mut excluded) = (Vec::new(), Vec::new(), Vec::new());
    for (class, label, manifest) in [
        (0, Label::Alcoholic, &p.alcoholic_trials),
        (1, Label::Control, &p.control_trials),
    ] {
        let mut by_subject: BTreeMap<String, Vec<Trial>> = BTreeMap::new();
        for path in read_manifest(manifest)? {
            let t = load_trial(&path)?;
            by_subject.entry(t.subject_id.clone()).or_default().push(t);
        }
        for (index, (id, trials)) in by_subject.into_iter().enumerate() {
            let clean = reject_artifacts(trials);
            let mut rng = RandomSource::derive(seed, &[class, index as u64]);
            match build_subject(&id, label, &clean, p.n_average, &mut rng)? {
                Some((a, b)) => {
                    train.push(a);
                    test.push(b);
                }
                None => excluded.push((id, clean.len())),
            }
        }
    }
    Ok(PreprocessReport {
        dataset: save_split(&ov.out_dir(cfg), &train, &test)?,
        excluded,
    })
}

fn training_task(cfg: &RunConfig) -> Result<(AlcoholTask, Vec<SubjectRecord>)> {
    let train = load_dataset(&cfg.data()?.train_manifest)?;
    let alcoholics = train.iter().filter(|s| s.label() == Label::Alcoholic).count();
    let task = AlcoholTask::new(&train, cfg.encoding.spec(alcoholics as u32))?;
    Ok((task, train))
}

#[derive(Debug, Clone)]
pub struct EvolveReport {
    pub best: Chromosome,
    pub history: Vec<GenerationStats>,
    pub out_dir: PathBuf,
}

/// Runs the GA on the training set and writes `history.csv`,
/// `sensors.csv` and `best.txt` into the output directory.
pub fn cmd_evolve(cfg: &RunConfig, ov: &Overrides) -> Result<EvolveReport> {
    let (task, train) = training_task(cfg)?;
    let mut ga = cfg.ga_config()?;
    if let Some(seed) = ov.seed {
        ga.seed = seed;
    }
    if let Some(threads) = ov.threads {
        ga.threads = threads;
    }
    let fitness = |c: &Chromosome| task.evaluate(c, &train);
    let mut history = Vec::new();
    let outcome = run(&ga, &fitness, task.problem(), &mut history)?;
    let out_dir = ov.out_dir(cfg);
    std::fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
    write_history(&out_dir.join("history.csv"), &history)?;
    write_sensors(&out_dir.join("sensors.csv"), &history)?;
    let best = outcome.best().clone();
    BestFile::from_chromosome(&best, task.teachers())?.save(&out_dir.join("best.txt"))?;
    Ok(EvolveReport { best, history, out_dir })
}

/// Penalty of a saved best chromosome on `manifest`, or on the configured
/// test set. Teachers always come from the configured training set.
pub fn cmd_evaluate(cfg: &RunConfig, best: &Path, manifest: Option<&Path>) -> Result<f64> {
    let chrom = BestFile::load(best)?.to_chromosome();
    let (task, _) = training_task(cfg)?;
    let manifest = match manifest {
        Some(m) => m.to_path_buf(),
        None => cfg.data()?.test_manifest.clone(),
    };
    let subjects = load_dataset(&manifest)?;
    task.evaluate(&chrom, &subjects).map_err(|e| match e {
        mmx_blx::Error::InvalidChromosome(m) => CliError::BestFile {
            path: best.to_path_buf(),
            message: m,
        },
        other => other.into(),
    })
}
