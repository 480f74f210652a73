//! Active meta-learning for deep-kernel Gaussian processes.
//!
//! A pool of tasks arrives unlabeled; labeling one is expensive. The
//! library keeps a particle ensemble over the networks that parameterize a
//! GP's mean and kernel, scores every remaining task by how much the
//! particles' predictive distributions disagree on it, labels the winner,
//! and refits the ensemble by Stein variational gradient descent. Baseline
//! selection rules (predictive uncertainty, diversity, uniform), synthetic
//! regression and black-box-optimization environments, a UCB Bayesian
//! optimization meta-test, and a CSV/SVG experiment harness round out the
//! crate.
//!
//! The `bamld` binary drives the harness:
//!
//! ```text
//! bamld run --config experiment.json --experiment rmse_fig2 --out results/
//! bamld plot --csv results/results.csv --kind rmse
//! bamld verify --suite all
//! ```

pub mod acquisition;
pub mod active_loop;
pub mod bayes_opt;
pub mod envs;
pub mod error;
pub mod gp;
pub mod harness;
pub mod posterior;
pub mod rng;
pub mod tensor;

pub use acquisition::{AcquisitionConfig, AcquisitionReport, Method};
pub use active_loop::{ActiveLoopConfig, MetaTestConfig, RunState};
pub use bayes_opt::{BoRunConfig, BoTrace, Surrogate};
pub use envs::{BoTaskParams, SinusoidEnvConfig, SinusoidTaskParams, TaskPool};
pub use error::{Error, Result};
pub use gp::{GpConfig, GpPredictive, TaskDataset, ThetaPair};
pub use harness::{Experiment, ExperimentConfig, Profile};
pub use posterior::{ParticleEnsemble, PosteriorScoreConfig, SvgdConfig};
pub use tensor::{FlatParams, Matrix, MlpSpec};
