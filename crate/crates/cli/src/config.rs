//! Run configuration file.
//!
//! A TOML document with the sections below. Relative paths are resolved
//! against the directory holding the config file.
//!
//! ```toml
//! [synth]            # required by `synth`; every key is mandatory
//! n_alcoholic = 47
//! n_control = 31
//! planted_leads = [[12, 1.0], [30, -0.7], [51, 0.5]]   # (lead, weight)
//! pattern = [[0, 4.0], [8, -6.0], [16, 3.0]]           # (lag, step)
//! noise_sd = 0.5
//! insertion_position = 140
//! seed = 7
//!
//! [data]             # required by `evolve` and `evaluate`
//! train_manifest = "out/train/manifest.txt"
//! test_manifest = "out/test/manifest.txt"
//!
//! [preprocess]       # required by `preprocess`
//! alcoholic_trials = "trials/alcoholic.txt"
//! control_trials = "trials/control.txt"
//! n_average = 36
//! seed = 1
//!
//! [ga]
//! population_size = 50
//! generations = 5000
//! seed = 1
//! threads = 1
//!
//! [crossover]
//! alpha = 1.0
//! beta = 1.4
//! delta = 0.85
//! gamma = 0.75
//! mode = "explore"             # or "exploit"
//! delta_selects = "first_bag"  # or "absent_bag"
//!
//! [encoding]
//! max_sensors = 5
//! max_detectors = 2
//! # n_teachers defaults to the number of alcoholic training subjects
//!
//! [output]
//! dir = "out"
//! ```

use std::path::{Path, PathBuf};

use mmx_blx::alcotask::EncodingSpec;
use mmx_blx::crossover::{CrossoverParams, DeltaSelects, Mode};
use mmx_blx::data::SyntheticConfig;
use mmx_blx::evolution::GaConfig;
use serde::Deserialize;

use crate::error::{io_err, CliError, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub synth: Option<SynthSection>,
    pub data: Option<DataSection>,
    pub preprocess: Option<PreprocessSection>,
    #[serde(default)]
    pub ga: GaSection,
    #[serde(default)]
    pub crossover: CrossoverSection,
    #[serde(default)]
    pub encoding: EncodingSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub n_alcoholic: usize,
    pub n_control: usize,
    pub planted_leads: Vec<(u32, f64)>,
    pub pattern: Vec<(usize, f64)>,
    pub noise_sd: f64,
    pub insertion_position: usize,
    pub seed: u64,
}

impl SynthSection {
    pub fn to_synthetic(&self) -> SyntheticConfig {
        SyntheticConfig {
            n_alcoholic: self.n_alcoholic,
            n_control: self.n_control,
            planted_leads: self.planted_leads.clone(),
            pattern: self.pattern.clone(),
            noise_sd: self.noise_sd,
            insertion_position: self.insertion_position,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub train_manifest: PathBuf,
    pub test_manifest: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessSection {
    pub alcoholic_trials: PathBuf,
    pub control_trials: PathBuf,
    #[serde(default = "default_n_average")]
    pub n_average: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_n_average() -> usize {
    mmx_blx::data::TRIALS_PER_AVERAGE
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaSection {
    pub population_size: usize,
    pub generations: usize,
    pub seed: u64,
    pub threads: usize,
}

impl Default for GaSection {
    fn default() -> Self {
        Self {
            population_size: 50,
            generations: 5000,
            seed: 1,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Exploit,
    Explore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaSelectsName {
    FirstBag,
    AbsentBag,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrossoverSection {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub gamma: f64,
    pub mode: ModeName,
    pub delta_selects: DeltaSelectsName,
}

impl Default for CrossoverSection {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.4,
            delta: 0.85,
            gamma: 0.75,
            mode: ModeName::Explore,
            delta_selects: DeltaSelectsName::FirstBag,
        }
    }
}

impl CrossoverSection {
    pub fn params(&self) -> mmx_blx::Result<CrossoverParams> {
        let mode = match self.mode {
            ModeName::Exploit => Mode::Exploit,
            ModeName::Explore => Mode::Explore,
        };
        let selects = match self.delta_selects {
            DeltaSelectsName::FirstBag => DeltaSelects::FirstBag,
            DeltaSelectsName::AbsentBag => DeltaSelects::AbsentBag,
        };
        Ok(CrossoverParams::new(self.alpha, self.beta, self.delta, self.gamma, mode)?.with_delta_selects(selects))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncodingSection {
    pub max_sensors: usize,
    pub max_detectors: usize,
    pub n_teachers: Option<u32>,
}

impl Default for EncodingSection {
    fn default() -> Self {
        let d = EncodingSpec::default();
        Self {
            max_sensors: d.max_sensors,
            max_detectors: d.max_detectors,
            n_teachers: None,
        }
    }
}

impl EncodingSection {
    /// Encoding for a training set with `alcoholics` alcoholic subjects.
    pub fn spec(&self, alcoholics: u32) -> EncodingSpec {
        EncodingSpec {
            n_teachers: self.n_teachers.unwrap_or(alcoholics),
            max_sensors: self.max_sensors,
            max_detectors: self.max_detectors,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

impl RunConfig {
    /// Parses `text`; relative paths are resolved against `base`.
    pub fn parse(path: &Path, text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
            let message = match line {
                Some(l) => format!("line {l}: {}", e.message()),
                None => e.message().to_string(),
            };
            CliError::Config {
                path: path.to_path_buf(),
                message,
            }
        })?;
        cfg.resolve(base);
        cfg.validate().map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(path, &text, base)
    }

    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(d) = &mut self.data {
            join(&mut d.train_manifest);
            join(&mut d.test_manifest);
        }
        if let Some(p) = &mut self.preprocess {
            join(&mut p.alcoholic_trials);
            join(&mut p.control_trials);
        }
        join(&mut self.output.dir);
    }

    /// Re-checks every bound that does not depend on the dataset.
    pub fn validate(&self) -> mmx_blx::Result<()> {
        self.ga_config()?.validate()?;
        if let Some(s) = &self.synth {
            s.to_synthetic().validate()?;
        }
        if let Some(p) = &self.preprocess {
            if p.n_average == 0 || p.n_average > mmx_blx::data::MIN_TRIALS {
                return Err(mmx_blx::Error::InvalidParameter(format!(
                    "n_average = {} must lie in 1..={}",
                    p.n_average,
                    mmx_blx::data::MIN_TRIALS
                )));
            }
        }
        // any teacher count above max_detectors exercises the other bounds
        let probe = self.encoding.n_teachers.unwrap_or(self.encoding.max_detectors as u32 + 1);
        self.encoding.spec(probe).problem()?;
        Ok(())
    }

    pub fn ga_config(&self) -> mmx_blx::Result<GaConfig> {
        let mut ga = GaConfig::new(
            self.ga.population_size,
            self.ga.generations,
            self.crossover.params()?,
            self.ga.seed,
        );
        ga.threads = self.ga.threads;
        Ok(ga)
    }

    pub fn data(&self) -> mmx_blx::Result<&DataSection> {
        self.data
            .as_ref()
            .ok_or_else(|| mmx_blx::Error::InvalidParameter("config has no [data] section".into()))
    }
}
