use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use cubeshadow_exp::{emit, run, ExpError, Experiment, ExperimentConfig, Format};

/// Run a cube-shadow experiment described by a JSON config file.
#[derive(Debug, Parser)]
#[command(name = "shadow", version)]
struct Cli {
    /// scaling_cUn, scaling_sandwich, rare_event, concentration, nets_audit or
    /// section_diameter; must agree with the config's `experiment` field.
    experiment: String,

    #[arg(long)]
    config: PathBuf,

    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Overrides the config's output path. Without either, records go to
    /// stdout and the summary to stderr.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Overrides the config's format.
    #[arg(long)]
    format: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("shadow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: Cli) -> Result<(), ExpError> {
    let experiment: Experiment = cli.experiment.parse()?;
    let mut cfg = ExperimentConfig::load(&cli.config)?;
    if cfg.experiment != experiment {
        return Err(ExpError::Config(format!(
            "command line asks for {experiment} but the config describes {}",
            cfg.experiment
        )));
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.output_path = Some(out);
    }
    if let Some(format) = cli.format {
        cfg.format = format.parse::<Format>()?;
    }

    let output = run(&cfg)?;
    let summary = serde_json::to_string_pretty(&output.summary)
        .map_err(|e| ExpError::Parse(e.to_string()))?;
    match &cfg.output_path {
        Some(path) => {
            cubeshadow_exp::record::emit_to_path(&output.records, cfg.format, path)?;
            println!("{summary}");
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            emit(&output.records, cfg.format, &mut lock)?;
            lock.flush()?;
            eprintln!("{summary}");
        }
    }
    Ok(())
}
