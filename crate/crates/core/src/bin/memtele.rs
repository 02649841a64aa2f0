use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use memtele_core::cli::{emit_results, load_config, run_experiment, ConfigError, Experiment, OutputFormat, RunConfig};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

/// Simulate teleportation of a photonic polarization qubit into an
/// atomic-ensemble memory.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Args {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// table1, fig3, visibility, budget or bell-check.
    #[arg(long)]
    experiment: Option<Experiment>,
    #[arg(long)]
    seed: Option<u64>,
    /// Effective heralded trials per Monte Carlo estimate.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Override a configuration key, e.g. --set zeta=0.8. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn build_config(args: &Args) -> Result<RunConfig, ConfigError> {
    let mut config = match &args.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(e) = args.experiment {
        config.experiment = e;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(t) = args.trials {
        config.trials = t;
    }
    if let Some(w) = args.workers {
        config.workers = w;
    }
    if let Some(o) = &args.output {
        config.output_path = Some(o.clone());
    }
    if let Some(f) = args.format {
        config.format = f;
    }
    for assignment in &args.overrides {
        config.apply_override(assignment)?;
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let config = match build_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("memtele: configuration error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let table = match run_experiment(&config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("memtele: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    if let Err(e) = emit_results(&table, config.output_path.as_deref(), config.format) {
        eprintln!("memtele: cannot write results: {e}");
        return ExitCode::from(EXIT_RUNTIME);
    }
    if config.experiment == Experiment::BellCheck && table.rows.iter().any(|r| r.input_state == "failed") {
        eprintln!("memtele: teleportation identity check failed");
        return ExitCode::from(EXIT_RUNTIME);
    }
    ExitCode::SUCCESS
}
