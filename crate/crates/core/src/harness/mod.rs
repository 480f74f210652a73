//! Configuration-driven experiment harness: config resolution, the work
//! queue over seeds and methods, CSV results, SVG plots, and the runnable
//! property suite.

pub mod config;
pub mod csv;
pub mod plot;
pub mod runner;
pub mod verify;

pub use config::{CliOverrides, ConfigFile, Experiment, ExperimentConfig, Profile};
pub use csv::{read_csv, write_csv, ResultRow, CSV_HEADER};
pub use plot::{plot_curves, render_svg, FigureKind};
pub use runner::{plot_csv, rmse_curve_values, run_experiment, RunArtifacts};
