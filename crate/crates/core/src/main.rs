use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cavity_stirap::scenarios::{load_config, preset_catalog, run_scenario, run_sweep, RunOptions, ScenarioConfig};
use cavity_stirap::{Error, Result};

/// Adiabatic transfer of cavity field states.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// Output directory; each run writes into `<out>/<scenario>/`.
    #[arg(long, global = true, env = "CAVITY_STIRAP_OUT", default_value = "out")]
    out: PathBuf,
    /// Local error tolerance of the integrator.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Number of output samples per stage.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Seed for drawing one measurement outcome.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a preset or a JSON config and write its trajectory and summary.
    Run {
        /// Preset name or path to a JSON config.
        scenario: String,
        /// Override a preset parameter (`G=50`) or a config field
        /// (`system.detunings.0=0.5`).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Run the sweep axes of a JSON config.
    Sweep { config: PathBuf },
    /// List the presets and their parameters.
    List,
}

fn apply_set(mut config: ScenarioConfig, assignment: &str) -> Result<ScenarioConfig> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("`--set {assignment}` is not KEY=VALUE")))?;
    let value: f64 = value.trim().parse().map_err(|_| Error::Config(format!("`{value}` is not a number")))?;
    let key = key.trim();
    if key.contains('.') {
        config = config.with_value(key, value)?;
    } else {
        config.params.insert(key.to_string(), value);
    }
    Ok(config)
}

/// Writes to stdout; a closed pipe (`| head`) ends output quietly.
fn emit(text: &str) -> Result<()> {
    match writeln!(io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
        _ => Ok(()),
    }
}

fn execute(cli: Cli) -> Result<()> {
    let options = RunOptions {
        out_dir: Some(cli.out),
        tolerance: cli.tol,
        samples: cli.samples,
        seed: cli.seed,
        workers: cli.workers,
        write_files: true,
    };
    match cli.command {
        Command::Run { scenario, set } => {
            let config = set.iter().try_fold(load_config(&scenario)?, |c, s| apply_set(c, s))?;
            let result = run_scenario(&config, &options)?;
            emit(&serde_json::to_string_pretty(&result)?)?;
        }
        Command::Sweep { config } => {
            let config = ScenarioConfig::load(&config)?;
            let table = run_sweep(&config, &options)?;
            emit(&serde_json::to_string_pretty(&table)?)?;
        }
        Command::List => {
            let mut text = String::new();
            for p in preset_catalog() {
                text += &format!("{}\n  {}\n  reference: {}\n", p.name, p.about, p.reference);
                for param in &p.params {
                    text += &format!("    {:<15} {:>10}  {}\n", param.name, param.default, param.about);
                }
            }
            emit(text.trim_end())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
