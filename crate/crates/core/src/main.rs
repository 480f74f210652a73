//! Command-line harness.
//!
//! Exit codes: 0 success, 1 config error, 2 runtime or numerical error,
//! 3 acceptance (property-suite) failure.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use bamld::harness::{
    plot_csv, run_experiment, CliOverrides, ConfigFile, Experiment, ExperimentConfig, FigureKind,
    Profile,
};
use bamld::Error;

#[derive(Parser)]
#[command(
    name = "bamld",
    about = "Active meta-learning experiments for deep-kernel GPs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config file.
    Run {
        /// Path to the config file (flat JSON keys; missing keys take
        /// profile defaults).
        #[arg(long)]
        config: PathBuf,
        /// Experiment to run, overriding the file:
        /// rmse_fig2|rmse_fig3|clusters_fig4|bo_fig5|property_suite.
        #[arg(long)]
        experiment: Option<String>,
        /// Comma-separated seed list, overriding the file.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Output directory (falls back to the file, then $BAMLD_OUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Scale profile: desk or paper.
        #[arg(long)]
        profile: Option<String>,
        /// Worker threads for the seed x method queue.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Render an SVG figure from a results.csv.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        /// Figure kind: rmse, clusters, or regret.
        #[arg(long)]
        kind: String,
        /// Output SVG path (defaults next to the CSV).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the property suite.
    Verify {
        /// Which suite to run; only "all" exists.
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::CsvParse { .. } | Error::Json(_) => 1,
        _ => 2,
    }
}

fn run() -> Result<u8, Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            experiment,
            seeds,
            out,
            profile,
            workers,
        } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| Error::io(config.display().to_string(), e))?;
            let file = ConfigFile::from_json(&text)?;
            let overrides = CliOverrides {
                experiment: experiment.as_deref().map(Experiment::parse).transpose()?,
                seeds,
                output_dir: out,
                profile: profile.as_deref().map(Profile::parse).transpose()?,
                workers,
            };
            let cfg = ExperimentConfig::resolve(file, overrides)?;
            let artifacts = run_experiment(&cfg)?;
            println!("config echo: {}", artifacts.config_path.display());
            if let Some(p) = &artifacts.csv_path {
                println!("results: {}", p.display());
            }
            if let Some(p) = &artifacts.reports_path {
                println!("reports: {}", p.display());
            }
            if let Some(p) = &artifacts.plot_path {
                println!("figure: {}", p.display());
            }
            match artifacts.property_suite_passed {
                Some(false) => Ok(3),
                _ => Ok(0),
            }
        }
        Command::Plot { csv, kind, out } => {
            let kind = FigureKind::parse(&kind)?;
            let out = out.unwrap_or_else(|| csv.with_extension("svg"));
            plot_csv(&csv, kind, &out)?;
            println!("figure: {}", out.display());
            Ok(0)
        }
        Command::Verify { suite } => {
            if suite != "all" {
                return Err(Error::config(format!("suite: unknown '{suite}'")));
            }
            if bamld::harness::verify::run_and_print() {
                Ok(0)
            } else {
                Ok(3)
            }
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
