//! Particle approximation of the hyperparameter posterior.
//!
//! The target is a generalized posterior over both networks,
//!
//! ```text
//! log p(theta | D) = log p(theta) + gamma * (1/|T|) sum_t l_t(theta) / N_t + const
//! ```
//!
//! with an isotropic Gaussian prior and `l_t` the GP log marginal
//! likelihood of task `t` (the per-task normalization is a flag). The
//! ensemble moves by Stein variational gradient descent with an RBF kernel
//! and a median-heuristic bandwidth, so a single particle degenerates to
//! plain gradient ascent and larger ensembles retain spread.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::gp::{
    log_marginal_likelihood, log_marginal_likelihood_grad, GpConfig, TaskDataset, ThetaGrad,
    ThetaPair,
};

/// Floor for the median-heuristic bandwidth when all particles coincide.
pub const BANDWIDTH_FLOOR: f64 = 1e-6;

const CHECKPOINT_VERSION: u32 = 1;

const LN_2PI: f64 = 1.8378770664093453;

/// The SVGD particle set plus the GP configuration its scores refer to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleEnsemble {
    pub particles: Vec<ThetaPair>,
    pub gp_config: GpConfig,
}

impl ParticleEnsemble {
    /// Draws `p` particles i.i.d. from the prior N(0, prior_variance I).
    pub fn from_prior<R: Rng + ?Sized>(
        p: usize,
        gp_config: GpConfig,
        prior_variance: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if p == 0 {
            return Err(Error::config("particles: must be >= 1"));
        }
        gp_config.validate()?;
        let particles = (0..p)
            .map(|_| ThetaPair::from_prior(&gp_config, prior_variance, rng))
            .collect();
        Ok(ParticleEnsemble {
            particles,
            gp_config,
        })
    }

    pub fn p(&self) -> usize {
        self.particles.len()
    }

    pub fn is_finite(&self) -> bool {
        self.particles.iter().all(|t| t.is_finite())
    }
}

/// Prior and loss weighting of the generalized posterior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorScoreConfig {
    pub prior_variance: f64,
    /// Generalized-posterior temperature on the data term.
    pub gamma: f64,
    /// Divide each task's log marginal likelihood by its sample count.
    pub per_task_normalize: bool,
}

impl Default for PosteriorScoreConfig {
    fn default() -> Self {
        PosteriorScoreConfig {
            prior_variance: 1.0,
            gamma: 1.0,
            per_task_normalize: true,
        }
    }
}

impl PosteriorScoreConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.prior_variance > 0.0) {
            return Err(Error::config("prior_variance: must be > 0"));
        }
        if !(self.gamma > 0.0) && self.gamma != 0.0 {
            return Err(Error::config("gamma: must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SvgdKernel {
    RbfMedianHeuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvgdConfig {
    pub step_size: f64,
    pub n_steps: usize,
    pub kernel: SvgdKernel,
    /// Tasks per stochastic gradient; the full set is used when it is
    /// at least the number of tasks.
    pub task_minibatch: usize,
}

impl SvgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) {
            return Err(Error::config("step_size: must be > 0"));
        }
        if self.task_minibatch == 0 {
            return Err(Error::config("task_minibatch: must be >= 1"));
        }
        Ok(())
    }

    pub fn with_steps(mut self, n_steps: usize) -> Self {
        self.n_steps = n_steps;
        self
    }
}

fn log_prior(theta: &ThetaPair, prior_variance: f64) -> f64 {
    let d = theta.dim() as f64;
    let sq: f64 = theta
        .mean
        .values()
        .iter()
        .chain(theta.feature.values())
        .map(|v| v * v)
        .sum();
    -0.5 * d * (LN_2PI + prior_variance.ln()) - 0.5 * sq / prior_variance
}

fn log_prior_grad(theta: &ThetaPair, prior_variance: f64) -> ThetaGrad {
    ThetaGrad {
        mean: theta.mean.values().iter().map(|v| -v / prior_variance).collect(),
        feature: theta
            .feature
            .values()
            .iter()
            .map(|v| -v / prior_variance)
            .collect(),
    }
}

/// Unnormalized log posterior density at `theta`. Empty data reduces to the
/// log prior.
pub fn log_posterior_score(
    theta: &ThetaPair,
    data: &[TaskDataset],
    score_cfg: &PosteriorScoreConfig,
    gp_cfg: &GpConfig,
) -> Result<f64> {
    let mut score = log_prior(theta, score_cfg.prior_variance);
    if !data.is_empty() && score_cfg.gamma != 0.0 {
        let mut acc = 0.0;
        for task in data {
            let ell = log_marginal_likelihood(theta, task, gp_cfg)?;
            acc += if score_cfg.per_task_normalize {
                ell / task.n() as f64
            } else {
                ell
            };
        }
        score += score_cfg.gamma * acc / data.len() as f64;
    }
    Ok(score)
}

/// Gradient of the score restricted to the tasks in `batch`. The data term
/// is the mean over the batch, which makes the minibatch gradient an
/// unbiased estimate of the full-batch one.
fn log_posterior_grad_over(
    theta: &ThetaPair,
    batch: &[&TaskDataset],
    score_cfg: &PosteriorScoreConfig,
    gp_cfg: &GpConfig,
) -> Result<ThetaGrad> {
    let mut grad = log_prior_grad(theta, score_cfg.prior_variance);
    if !batch.is_empty() && score_cfg.gamma != 0.0 {
        for task in batch {
            let mut g = log_marginal_likelihood_grad(theta, task, gp_cfg)?;
            if score_cfg.per_task_normalize {
                g.scale(1.0 / task.n() as f64);
            }
            grad.add_scaled(&g, score_cfg.gamma / batch.len() as f64);
        }
    }
    Ok(grad)
}

/// Exact full-batch gradient of [`log_posterior_score`].
pub fn log_posterior_grad(
    theta: &ThetaPair,
    data: &[TaskDataset],
    score_cfg: &PosteriorScoreConfig,
    gp_cfg: &GpConfig,
) -> Result<ThetaGrad> {
    let refs: Vec<&TaskDataset> = data.iter().collect();
    log_posterior_grad_over(theta, &refs, score_cfg, gp_cfg)
}

fn median(sorted: &mut [f64]) -> f64 {
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// RBF bandwidth from the median pairwise squared distance; floored so the
/// kernel stays defined when the ensemble collapses.
fn median_bandwidth(thetas: &[Vec<f64>]) -> f64 {
    let p = thetas.len();
    if p < 2 {
        return BANDWIDTH_FLOOR;
    }
    let mut dists = Vec::with_capacity(p * (p - 1) / 2);
    for i in 0..p {
        for j in i + 1..p {
            let d2: f64 = thetas[i]
                .iter()
                .zip(&thetas[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            dists.push(d2);
        }
    }
    let med = median(&mut dists);
    (med / ((p as f64) + 1.0).ln()).max(BANDWIDTH_FLOOR)
}

/// One SVGD update. Each particle moves by
/// `(1/P) sum_j [k(th_j, th_i) grad_j + grad_{th_j} k(th_j, th_i)]`
/// scaled by the step size; `k` is the RBF kernel with the median-heuristic
/// bandwidth over pairwise particle distances.
pub fn svgd_step<R: Rng + ?Sized>(
    ensemble: &ParticleEnsemble,
    data: &[TaskDataset],
    score_cfg: &PosteriorScoreConfig,
    svgd_cfg: &SvgdConfig,
    rng: &mut R,
) -> Result<ParticleEnsemble> {
    svgd_cfg.validate()?;
    score_cfg.validate()?;
    let p = ensemble.p();

    let batch_refs: Vec<&TaskDataset> = if data.len() > svgd_cfg.task_minibatch {
        let mut idx: Vec<usize> = (0..data.len()).collect();
        idx.shuffle(rng);
        idx.truncate(svgd_cfg.task_minibatch);
        idx.sort_unstable();
        idx.into_iter().map(|i| &data[i]).collect()
    } else {
        data.iter().collect()
    };

    let grads: Vec<Vec<f64>> = ensemble
        .particles
        .par_iter()
        .map(|theta| {
            log_posterior_grad_over(theta, &batch_refs, score_cfg, &ensemble.gp_config)
                .map(|g| g.flat())
        })
        .collect::<Result<_>>()?;

    let thetas: Vec<Vec<f64>> = ensemble.particles.iter().map(|t| t.flat()).collect();
    let h = median_bandwidth(&thetas);
    let dim = thetas[0].len();

    let mut next = ensemble.clone();
    for i in 0..p {
        let mut phi = vec![0.0; dim];
        for j in 0..p {
            let d2: f64 = thetas[j]
                .iter()
                .zip(&thetas[i])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let k = (-d2 / h).exp();
            for c in 0..dim {
                phi[c] += k * (grads[j][c] - 2.0 / h * (thetas[j][c] - thetas[i][c]));
            }
        }
        let scale = svgd_cfg.step_size / p as f64;
        let mut updated = thetas[i].clone();
        for c in 0..dim {
            updated[c] += scale * phi[c];
        }
        if updated.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "svgd update for particle {i} (bandwidth {h:e}, step {:e})",
                svgd_cfg.step_size
            )));
        }
        next.particles[i].set_from_flat(&updated)?;
    }
    Ok(next)
}

/// Runs `n_steps` SVGD updates with task minibatching.
pub fn fit_posterior<R: Rng + ?Sized>(
    ensemble: ParticleEnsemble,
    data: &[TaskDataset],
    score_cfg: &PosteriorScoreConfig,
    svgd_cfg: &SvgdConfig,
    rng: &mut R,
) -> Result<ParticleEnsemble> {
    let mut ens = ensemble;
    for _ in 0..svgd_cfg.n_steps {
        ens = svgd_step(&ens, data, score_cfg, svgd_cfg, rng)?;
    }
    Ok(ens)
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    ensemble: ParticleEnsemble,
}

/// Serializes the ensemble to versioned JSON; 64-bit values round-trip
/// exactly.
pub fn checkpoint_to_json(ensemble: &ParticleEnsemble) -> Result<String> {
    Ok(serde_json::to_string(&Checkpoint {
        version: CHECKPOINT_VERSION,
        ensemble: ensemble.clone(),
    })?)
}

pub fn checkpoint_from_json(json: &str) -> Result<ParticleEnsemble> {
    let ckpt: Checkpoint = serde_json::from_str(json)?;
    if ckpt.version != CHECKPOINT_VERSION {
        return Err(Error::config(format!(
            "checkpoint version {} unsupported (expected {CHECKPOINT_VERSION})",
            ckpt.version
        )));
    }
    Ok(ckpt.ensemble)
}

pub fn save_checkpoint(ensemble: &ParticleEnsemble, path: &Path) -> Result<()> {
    let json = checkpoint_to_json(ensemble)?;
    std::fs::write(path, json).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_checkpoint(path: &Path) -> Result<ParticleEnsemble> {
    let json =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    checkpoint_from_json(&json)
}
