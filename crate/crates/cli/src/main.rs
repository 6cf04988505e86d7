use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mmx_blx_cli::{cmd_evaluate, cmd_evolve, cmd_preprocess, cmd_synth, CliError, Overrides, RunConfig};

const CONFIG_HELP: &str = "\
Config keys (TOML; relative paths resolve against the config's directory):
  [synth]      n_alcoholic, n_control, planted_leads = [[lead, weight], ..],
               pattern = [[lag, step], ..], noise_sd, insertion_position, seed
               (all required)
  [data]       train_manifest, test_manifest
  [preprocess] alcoholic_trials, control_trials (trial-file manifests),
               n_average = 36, seed = 1
  [ga]         population_size = 50, generations = 5000, seed = 1, threads = 1
  [crossover]  alpha = 1.0, beta = 1.4, delta = 0.85, gamma = 0.75,
               mode = \"explore\" | \"exploit\",
               delta_selects = \"first_bag\" | \"absent_bag\"
  [encoding]   max_sensors = 5, max_detectors = 2,
               n_teachers (default: alcoholic training subjects)
  [output]     dir = \"out\"";

#[derive(Parser)]
#[command(version, about = "Evolve temporal pattern detectors with MMX-BLX crossover", after_help = CONFIG_HELP)]
struct Cli {
    /// Run configuration file
    #[arg(long, global = true, default_value = "mmxblx.toml")]
    config: PathBuf,
    /// Seed overriding the one of the active config section
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory overriding [output] dir
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Fitness evaluation threads; never changes results
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic train/test datasets from [synth]
    Synth,
    /// Average trial files from [preprocess] into train/test datasets
    Preprocess,
    /// Run the GA on the [data] training set
    Evolve,
    /// Print the penalty of a saved best chromosome
    Evaluate {
        /// best.txt written by `evolve`
        #[arg(long)]
        best: PathBuf,
        /// Subjects to score; defaults to [data] test_manifest
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let cfg = RunConfig::load(&cli.config)?;
    let ov = Overrides {
        seed: cli.seed,
        out: cli.out,
        threads: cli.threads,
    };
    match cli.command {
        Command::Synth => {
            let r = cmd_synth(&cfg, &ov)?;
            println!("train: {} subjects -> {}", r.train_subjects, r.train_manifest.display());
            println!("test: {} subjects -> {}", r.test_subjects, r.test_manifest.display());
        }
        Command::Preprocess => {
            let r = cmd_preprocess(&cfg, &ov)?;
            for (id, n) in &r.excluded {
                println!("excluded {id}: {n} usable trials");
            }
            println!("train: {} subjects -> {}", r.dataset.train_subjects, r.dataset.train_manifest.display());
            println!("test: {} subjects -> {}", r.dataset.test_subjects, r.dataset.test_manifest.display());
        }
        Command::Evolve => {
            let r = cmd_evolve(&cfg, &ov)?;
            let best = r.best.penalty().unwrap_or(f64::NAN);
            println!("generations: {}", r.history.len());
            println!("training penalty: {best}");
            println!("outputs: {}", r.out_dir.display());
        }
        Command::Evaluate { best, manifest } => {
            println!("{}", cmd_evaluate(&cfg, &best, manifest.as_deref())?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = e.to_string().replace('\n', " ");
            eprintln!("error: {line}");
            ExitCode::FAILURE
        }
    }
}
