use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qpt_core::calibration::ProtocolModel;
use qpt_core::selection::DEFAULT_ALPHA;
use qpt_core::SolverOptions;
use tomo::commands::{self, RankChoice, ReconstructSettings};
use tomo::config::ExperimentConfig;
use tomo::files::{expand_inputs, read_calibration};
use tomo::report::{self, ReportFormat};
use tomo::{CliError, Result};

#[derive(Parser)]
#[command(name = "tomo", version, about = "Process tomography with calibrated SPAM errors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate count files for an experiment config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Estimate the SPAM channel from empty-gate counts.
    Calibrate {
        #[arg(long)]
        counts: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Solver options and alpha are taken from here when given.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Reconstruct the gate from count files or directories of them.
    Reconstruct {
        #[arg(long, required = true, num_args = 1..)]
        counts: Vec<PathBuf>,
        /// Defaults to the config's protocol_model, else standard.
        #[arg(long, value_parser = parse_model)]
        model: Option<ProtocolModel>,
        #[arg(long)]
        calibration: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "auto")]
        rank: RankChoice,
        #[arg(long)]
        alpha: Option<f64>,
        /// Solver seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate result files into tables.
    Report {
        #[arg(required = true)]
        results: Vec<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_model(s: &str) -> std::result::Result<ProtocolModel, String> {
    s.parse().map_err(|e: qpt_core::Error| e.to_string())
}

fn solver_and_alpha(config: Option<&ExperimentConfig>, alpha: Option<f64>, seed: Option<u64>) -> (SolverOptions, f64) {
    let mut solver = config.map(|c| c.solver.clone()).unwrap_or_default();
    if let Some(seed) = seed {
        solver.seed = seed;
    }
    let alpha = alpha.or(config.map(|c| c.alpha)).unwrap_or(DEFAULT_ALPHA);
    (solver, alpha)
}

fn load_config(path: Option<&Path>) -> Result<Option<ExperimentConfig>> {
    path.map(ExperimentConfig::load).transpose()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out, seed } => {
            let mut config = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let files = commands::simulate(&config, &out)?;
            println!("wrote {} count files to {}", files.len(), out.join("counts").display());
        }
        Command::Calibrate {
            counts,
            out,
            config,
            alpha,
            seed,
        } => {
            let config = load_config(config.as_deref())?;
            let (solver, alpha) = solver_and_alpha(config.as_ref(), alpha, seed);
            let cal = commands::calibrate(&counts, alpha, &solver, &out)?;
            println!(
                "rank {}{}, identity fidelity {:.6}",
                cal.rank,
                if cal.estimable { "" } else { " (not estimable)" },
                cal.identity_fidelity
            );
        }
        Command::Reconstruct {
            counts,
            model,
            calibration,
            config,
            rank,
            alpha,
            seed,
            out,
        } => {
            let config = load_config(config.as_deref())?;
            let (solver, alpha) = solver_and_alpha(config.as_ref(), alpha, seed);
            let calibration = calibration.as_deref().map(read_calibration).transpose()?;
            let model = model
                .or(config.as_ref().map(|c| c.protocol_model))
                .unwrap_or(ProtocolModel::Standard);
            let settings = ReconstructSettings {
                model,
                calibration,
                config,
                rank,
                alpha,
                solver,
            };
            let files = expand_inputs(&counts, "csv")?;
            let results = commands::reconstruct(&files, &settings, &out)?;
            for r in &results {
                match r.fidelity {
                    Some(f) => println!("{}: rank {} fidelity {:.6}", r.counts, r.rank, f),
                    None => println!("{}: rank {}", r.counts, r.rank),
                }
            }
        }
        Command::Report { results, format, out } => {
            let loaded = report::load_results(&results)?;
            let built = report::build_report(&loaded)?;
            for path in report::write_report(&built, format, &out)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &CliError) -> u8 {
    e.exit_code() as u8
}
