//! Trial preprocessing, synthetic datasets and the text file formats.
//!
//! Subject file:
//!
//! ```text
//! subject <id> <alcoholic|control>
//! <256 space-separated reals>      # lead 1
//! ...                              # 62 lead rows in total
//! ```
//!
//! Trial files use the same body with a `trial <subject_id> <trial_index>`
//! header. A manifest lists one file path per line, relative paths being
//! resolved against the manifest's directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::alcotask::{Label, SubjectRecord, LEADS, SAMPLES};
use crate::error::{Error, Result};
use crate::rng::RandomSource;

/// Samples with absolute value above this are blink artifacts (µV).
pub const ARTIFACT_THRESHOLD: f64 = 100.0;
/// Subjects with fewer usable trials are excluded.
pub const MIN_TRIALS: usize = 40;
/// Trials averaged per subject record.
pub const TRIALS_PER_AVERAGE: usize = 36;

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub subject_id: String,
    pub trial_index: u32,
    matrix: Vec<f64>,
}

impl Trial {
    /// `matrix` is row-major, 62 leads × 256 samples.
    pub fn new(subject_id: impl Into<String>, trial_index: u32, matrix: Vec<f64>) -> Result<Self> {
        let subject_id = subject_id.into();
        if matrix.len() != LEADS * SAMPLES {
            return Err(Error::InvalidParameter(format!(
                "trial {subject_id}/{trial_index}: expected {LEADS}x{SAMPLES} samples, got {}",
                matrix.len()
            )));
        }
        Ok(Self {
            subject_id,
            trial_index,
            matrix,
        })
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    fn is_clean(&self) -> bool {
        self.matrix.iter().all(|x| x.abs() <= ARTIFACT_THRESHOLD)
    }
}

/// Keeps trials in which no sample exceeds the artifact threshold.
pub fn reject_artifacts(trials: Vec<Trial>) -> Vec<Trial> {
    trials.into_iter().filter(Trial::is_clean).collect()
}

fn average(trials: &[&Trial]) -> Vec<f64> {
    // Offsets from the first trial, so identical trials average exactly.
    let base = trials[0].matrix();
    let k = trials.len() as f64;
    let mut acc = vec![0.0; base.len()];
    for t in &trials[1..] {
        for ((a, &x), &b) in acc.iter_mut().zip(t.matrix()).zip(base) {
            *a += x - b;
        }
    }
    base.iter().zip(acc).map(|(&b, a)| b + a / k).collect()
}

/// Builds the training and test averages of one subject, or `None` when it
/// has fewer than [`MIN_TRIALS`] usable trials. The two draws are
/// independent, so they may share trials.
pub fn build_subject(
    subject_id: &str,
    label: Label,
    trials: &[Trial],
    n_average: usize,
    rng: &mut RandomSource,
) -> Result<Option<(SubjectRecord, SubjectRecord)>> {
    if trials.len() < MIN_TRIALS {
        return Ok(None);
    }
    if n_average == 0 || n_average > trials.len() {
        return Err(Error::InvalidParameter(format!(
            "cannot average {n_average} of {} trials",
            trials.len()
        )));
    }
    let draw = |rng: &mut RandomSource| {
        let picked: Vec<&Trial> = rng
            .sample_indices(trials.len(), n_average)
            .into_iter()
            .map(|i| &trials[i])
            .collect();
        SubjectRecord::new(subject_id, label, average(&picked))
    };
    let train = draw(rng)?;
    let test = draw(rng)?;
    Ok(Some((train, test)))
}

/// Parameters of a synthetic two-class dataset.
///
/// Alcoholic subjects carry a staircase on the planted leads: starting at
/// `insertion_position + lag` the level rises by `step`, for every
/// `(lag, step)` of `pattern`. Lead `l` receives the staircase scaled by
/// `w_l / Σ w²`, so the composite built with the planted weights shows the
/// staircase at unit scale.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_alcoholic: usize,
    pub n_control: usize,
    pub planted_leads: Vec<(u32, f64)>,
    pub pattern: Vec<(usize, f64)>,
    pub noise_sd: f64,
    pub insertion_position: usize,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n_alcoholic == 0 || self.n_control == 0 {
            return bad("both classes need at least one subject".into());
        }
        if self.planted_leads.is_empty() {
            return bad("at least one planted lead is required".into());
        }
        if let Some((l, _)) = self.planted_leads.iter().find(|(l, _)| !(1..=LEADS as u32).contains(l)) {
            return bad(format!("planted lead {l} outside 1..={LEADS}"));
        }
        if self.planted_leads.iter().all(|(_, w)| *w == 0.0) {
            return bad("planted weights are all zero".into());
        }
        if self.pattern.is_empty() {
            return bad("pattern is empty".into());
        }
        let max_lag = self.pattern.iter().map(|p| p.0).max().unwrap_or(0);
        if self.insertion_position < 1 || self.insertion_position + max_lag > SAMPLES {
            return bad(format!(
                "insertion position {} + max lag {max_lag} must lie in 1..={SAMPLES}",
                self.insertion_position
            ));
        }
        if self.noise_sd.is_nan() || self.noise_sd < 0.0 {
            return bad(format!("noise_sd = {} must be >= 0", self.noise_sd));
        }
        Ok(())
    }

    /// The planted staircase, 0-based sample index.
    pub fn waveform(&self) -> Vec<f64> {
        (1..=SAMPLES)
            .map(|t| {
                self.pattern
                    .iter()
                    .filter(|(lag, _)| t >= self.insertion_position + lag)
                    .map(|(_, step)| step)
                    .sum()
            })
            .collect()
    }

    fn subject(&self, split: u64, index: usize, label: Label) -> Result<SubjectRecord> {
        let class = match label {
            Label::Alcoholic => 0,
            Label::Control => 1,
        };
        let mut rng = RandomSource::derive(self.seed, &[split, class, index as u64]);
        let mut signals: Vec<f64> = (0..LEADS * SAMPLES)
            .map(|_| rng.normal(0.0, self.noise_sd))
            .collect();
        if label == Label::Alcoholic {
            let wave = self.waveform();
            let norm: f64 = self.planted_leads.iter().map(|(_, w)| w * w).sum();
            for &(lead, w) in &self.planted_leads {
                let row = &mut signals[(lead as usize - 1) * SAMPLES..lead as usize * SAMPLES];
                for (x, p) in row.iter_mut().zip(&wave) {
                    *x += w / norm * p;
                }
            }
        }
        let prefix = match label {
            Label::Alcoholic => 'a',
            Label::Control => 'c',
        };
        SubjectRecord::new(format!("{prefix}{:03}", index + 1), label, signals)
    }

    fn split(&self, split: u64) -> Result<Vec<SubjectRecord>> {
        let alc = (0..self.n_alcoholic).map(|i| self.subject(split, i, Label::Alcoholic));
        let ctl = (0..self.n_control).map(|i| self.subject(split, i, Label::Control));
        alc.chain(ctl).collect()
    }
}

/// Training and test sets with independent noise and identical plants.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<(Vec<SubjectRecord>, Vec<SubjectRecord>)> {
    cfg.validate()?;
    Ok((cfg.split(0)?, cfg.split(1)?))
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn write_matrix(out: &mut String, matrix: &[f64]) {
    for row in matrix.chunks(SAMPLES) {
        let mut first = true;
        for x in row {
            if !first {
                out.push(' ');
            }
            first = false;
            // Display prints the shortest string that parses back exactly.
            write!(out, "{x}").unwrap();
        }
        out.push('\n');
    }
}

fn parse_matrix(path: &Path, owner: &str, body: &[(usize, &str)]) -> Result<Vec<f64>> {
    if body.len() != LEADS {
        let line = body.last().map_or(1, |(n, _)| *n);
        return Err(parse_err(
            path,
            line,
            format!("{owner}: expected {LEADS} lead rows, found {}", body.len()),
        ));
    }
    let mut out = Vec::with_capacity(LEADS * SAMPLES);
    for &(n, line) in body {
        let before = out.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(path, n, format!("{owner}: unparsable number `{tok}`")))?;
            out.push(v);
        }
        let count = out.len() - before;
        if count != SAMPLES {
            return Err(parse_err(
                path,
                n,
                format!("{owner}: expected {SAMPLES} samples, found {count}"),
            ));
        }
    }
    Ok(out)
}

/// Non-empty lines with their 1-based line numbers.
fn numbered_lines(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect()
}

pub fn format_subject(record: &SubjectRecord) -> String {
    let mut s = format!("subject {} {}\n", record.subject_id(), record.label());
    write_matrix(&mut s, record.signals());
    s
}

pub fn parse_subject(path: &Path, text: &str) -> Result<SubjectRecord> {
    let lines = numbered_lines(text);
    let (n, header) = *lines.first().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 || parts[0] != "subject" {
        return Err(parse_err(path, n, "expected header `subject <id> <label>`"));
    }
    let label: Label = parts[2].parse().map_err(|m: String| parse_err(path, n, m))?;
    let owner = format!("subject {}", parts[1]);
    let matrix = parse_matrix(path, &owner, &lines[1..])?;
    SubjectRecord::new(parts[1], label, matrix)
}

pub fn save_subject(path: &Path, record: &SubjectRecord) -> Result<()> {
    fs::write(path, format_subject(record)).map_err(|e| io_err(path, e))
}

pub fn load_subject(path: &Path) -> Result<SubjectRecord> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_subject(path, &text)
}

pub fn format_trial(trial: &Trial) -> String {
    let mut s = format!("trial {} {}\n", trial.subject_id, trial.trial_index);
    write_matrix(&mut s, trial.matrix());
    s
}

pub fn parse_trial(path: &Path, text: &str) -> Result<Trial> {
    let lines = numbered_lines(text);
    let (n, header) = *lines.first().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 || parts[0] != "trial" {
        return Err(parse_err(path, n, "expected header `trial <subject_id> <trial_index>`"));
    }
    let index: u32 = parts[2]
        .parse()
        .map_err(|_| parse_err(path, n, format!("bad trial index `{}`", parts[2])))?;
    let owner = format!("trial {}/{}", parts[1], index);
    let matrix = parse_matrix(path, &owner, &lines[1..])?;
    Trial::new(parts[1], index, matrix)
}

pub fn save_trial(path: &Path, trial: &Trial) -> Result<()> {
    fs::write(path, format_trial(trial)).map_err(|e| io_err(path, e))
}

pub fn load_trial(path: &Path) -> Result<Trial> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_trial(path, &text)
}

/// File paths listed in a manifest; `#` starts a comment line.
pub fn read_manifest(path: &Path) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let p = Path::new(l);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                dir.join(p)
            }
        })
        .collect())
}

/// Subjects listed in a manifest, in manifest order.
pub fn load_dataset(manifest: &Path) -> Result<Vec<SubjectRecord>> {
    read_manifest(manifest)?.iter().map(|p| load_subject(p)).collect()
}

/// Writes one `<subject_id>.txt` per record into `dir` plus a
/// `manifest.txt` listing them; returns the manifest path.
pub fn save_dataset(dir: &Path, records: &[SubjectRecord]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut manifest = String::new();
    for r in records {
        let name = format!("{}.txt", r.subject_id());
        save_subject(&dir.join(&name), r)?;
        manifest.push_str(&name);
        manifest.push('\n');
    }
    let path = dir.join("manifest.txt");
    fs::write(&path, manifest).map_err(|e| io_err(&path, e))?;
    Ok(path)
}
