use std::path::{Path, PathBuf};
use std::process::ExitCode;

use beamloc_cli::commands::{self, Report};
use beamloc_cli::{CliError, ScenarioFile, Strategy};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

/// Beam damage localization from synthetic modal data.
///
/// Exit codes: 0 success, 2 input or schema error, 3 strategy failure,
/// 4 numeric error, 1 output error. Set BEAMLOC_LOG (error, warn, info,
/// debug, trace) for diagnostics on stderr.
#[derive(Parser)]
#[command(name = "beamloc", version, about, long_about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write healthy and damaged modal measurements.
    Synthesize(Common),
    /// Fuse damage features into per-element beliefs.
    Fuse {
        #[command(flatten)]
        common: Common,
        /// Read measurements from a `synthesize` output directory.
        #[arg(long)]
        measured: Option<PathBuf>,
    },
    /// Update element stiffnesses against the damaged measurement.
    Localize {
        #[command(flatten)]
        common: Common,
        /// Overrides the scenario's strategy.
        #[arg(long, value_enum)]
        strategy: Option<Strategy>,
        /// Read measurements from a `synthesize` output directory.
        #[arg(long)]
        measured: Option<PathBuf>,
    },
    /// Repeat localization over several penalty weights.
    SweepGamma {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        strategy: Option<Strategy>,
        /// Comma-separated penalty weights.
        #[arg(long, value_delimiter = ',', default_values_t = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1])]
        gammas: Vec<f64>,
    },
    /// Re-render the SVG plots of a results directory from its CSV tables.
    Plot { dir: PathBuf },
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file; repeat for a batch.
    #[arg(long, required = true)]
    scenario: Vec<PathBuf>,
    /// Output directory. Batches write one subdirectory per scenario.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario's noise seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Scenario files processed in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn load(path: &Path, seed: Option<u64>) -> Result<ScenarioFile, CliError> {
    let mut file = ScenarioFile::load(path)?;
    if let Some(s) = seed {
        file.scenario.seed = s;
    }
    Ok(file)
}

fn run_batch<F>(common: &Common, run: F) -> u8
where
    F: Fn(&ScenarioFile, &Path) -> Result<Report, CliError> + Sync,
{
    let batch = common.scenario.len() > 1;
    let one = |path: &PathBuf| -> (String, Result<Report, CliError>) {
        let stem = path
            .file_stem()
            .map_or("scenario".into(), |s| s.to_string_lossy().into_owned());
        let out = if batch {
            common.out.join(&stem)
        } else {
            common.out.clone()
        };
        (stem, load(path, common.seed).and_then(|f| run(&f, &out)))
    };
    let results: Vec<_> = match rayon::ThreadPoolBuilder::new()
        .num_threads(common.jobs.max(1))
        .build()
    {
        Ok(pool) => pool.install(|| common.scenario.par_iter().map(one).collect()),
        Err(e) => {
            eprintln!("cannot start worker pool: {e}");
            return 1;
        }
    };
    let mut code = 0;
    for (stem, result) in results {
        let prefix = if batch {
            format!("[{stem}] ")
        } else {
            String::new()
        };
        let failure = match result {
            Ok(report) => {
                for line in &report.lines {
                    println!("{prefix}{line}");
                }
                report.failure
            }
            Err(e) => Some(e),
        };
        if let Some(e) = failure {
            eprintln!("{prefix}{e}");
            code = code.max(e.exit_code());
        }
    }
    code
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BEAMLOC_LOG", "warn")).init();
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Synthesize(common) => run_batch(common, commands::synthesize),
        Command::Fuse { common, measured } => {
            run_batch(common, |f, out| commands::fuse(f, out, measured.as_deref()))
        }
        Command::Localize {
            common,
            strategy,
            measured,
        } => run_batch(common, |f, out| {
            commands::localize(f, out, strategy.unwrap_or(f.strategy), measured.as_deref())
        }),
        Command::SweepGamma {
            common,
            strategy,
            gammas,
        } => run_batch(common, |f, out| {
            commands::sweep_gamma(f, out, strategy.unwrap_or(f.strategy), gammas)
        }),
        Command::Plot { dir } => match commands::replot(dir) {
            Ok(files) => {
                for f in files {
                    println!("wrote {}", f.display());
                }
                0
            }
            Err(e) => {
                eprintln!("{e}");
                e.exit_code()
            }
        },
    };
    ExitCode::from(code)
}
