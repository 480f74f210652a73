//! Meta-testing by Bayesian optimization with a UCB acquisition.
//!
//! The surrogate is either the meta-trained particle ensemble, refit on the
//! accumulated query set after every observation, or the fixed zero-mean
//! squared-exponential prior used by the vanilla baseline. Predictive
//! moments of the ensemble are moment-matched over particles: the mixture
//! variance is the mean of per-particle variances plus the variance of
//! per-particle means.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::envs::{eval_g_bo, BoTaskParams};
use crate::error::{Error, Result};
use crate::gp::{condition_marginals, TaskDataset};
use crate::posterior::{fit_posterior, ParticleEnsemble, PosteriorScoreConfig, SvgdConfig};
use crate::rng::{substream, RunRng};
use crate::tensor::{solve_cholesky, Matrix};

/// Grid resolution used to locate the true maximum of the objective.
const TRUE_MAX_GRID: usize = 10_001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoRunConfig {
    pub n_iterations: usize,
    /// Number of evenly spaced candidate points on [-10, 10].
    pub candidate_grid: usize,
    pub ucb_beta: f64,
    /// SVGD steps on the accumulated query set after each observation.
    pub surrogate_update_steps: usize,
    pub observation_noise_var: f64,
}

impl Default for BoRunConfig {
    fn default() -> Self {
        BoRunConfig {
            n_iterations: 40,
            candidate_grid: 200,
            ucb_beta: 2.0,
            surrogate_update_steps: 100,
            observation_noise_var: 0.01,
        }
    }
}

impl BoRunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_iterations == 0 {
            return Err(Error::config("bo n_iterations: must be >= 1"));
        }
        if self.candidate_grid < 2 {
            return Err(Error::config("bo candidate_grid: must be >= 2"));
        }
        if !(self.ucb_beta >= 0.0) {
            return Err(Error::config("ucb_beta: must be >= 0"));
        }
        if !(self.observation_noise_var >= 0.0) {
            return Err(Error::config("bo observation_noise_var: must be >= 0"));
        }
        Ok(())
    }
}

/// One BO run's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoTrace {
    pub queries: Vec<(f64, f64)>,
    pub best_so_far: Vec<f64>,
    pub regret: Vec<f64>,
    pub true_max: f64,
}

/// The surrogate model a BO run queries and updates.
#[derive(Debug, Clone)]
pub enum Surrogate {
    /// Meta-trained deep-kernel GP mixture, refit within the run.
    Ensemble {
        ensemble: ParticleEnsemble,
        svgd: SvgdConfig,
        score: PosteriorScoreConfig,
    },
    /// Zero mean with k(x,x') = s^2 exp(-(x-x')^2 / (2 l^2)); never updated.
    FixedSquaredExponential { signal_variance: f64, lengthscale: f64 },
}

impl Surrogate {
    pub fn vanilla() -> Self {
        Surrogate::FixedSquaredExponential {
            signal_variance: 1.0,
            lengthscale: 1.0,
        }
    }

    /// Predictive mean and variance of the observable at each point in
    /// `xs`, conditioned on the queries so far.
    fn predictive(
        &self,
        queries: &[(f64, f64)],
        xs: &[f64],
        noise_var: f64,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        match self {
            Surrogate::Ensemble { ensemble, .. } => {
                let x_star = Matrix::from_fn(xs.len(), 1, |i, _| xs[i]);
                let train = queries_to_dataset(queries)?;
                let mut cfg = ensemble.gp_config.clone();
                cfg.noise_variance = noise_var.max(1e-12);
                let p = ensemble.p() as f64;
                let mut means = vec![0.0; xs.len()];
                let mut mean_sq = vec![0.0; xs.len()];
                let mut vars = vec![0.0; xs.len()];
                for theta in &ensemble.particles {
                    let (m, v) = condition_marginals(theta, train.as_ref(), &x_star, &cfg)?;
                    for i in 0..xs.len() {
                        means[i] += m[i] / p;
                        mean_sq[i] += m[i] * m[i] / p;
                        vars[i] += v[i] / p;
                    }
                }
                for i in 0..xs.len() {
                    // moment matching: add the spread of per-particle means
                    vars[i] += (mean_sq[i] - means[i] * means[i]).max(0.0);
                }
                Ok((means, vars))
            }
            Surrogate::FixedSquaredExponential {
                signal_variance,
                lengthscale,
            } => {
                let k = |a: f64, b: f64| {
                    let d = a - b;
                    signal_variance * (-d * d / (2.0 * lengthscale * lengthscale)).exp()
                };
                if queries.is_empty() {
                    let means = vec![0.0; xs.len()];
                    let vars = vec![signal_variance + noise_var; xs.len()];
                    return Ok((means, vars));
                }
                let n = queries.len();
                let ktt = Matrix::from_fn(n, n, |i, j| k(queries[i].0, queries[j].0))
                    .add_diagonal(noise_var);
                let (l, _) = ktt.cholesky_jittered()?;
                let y = Matrix::column(&queries.iter().map(|q| q.1).collect::<Vec<_>>());
                let alpha = solve_cholesky(&l, &y)?;
                let kts = Matrix::from_fn(n, xs.len(), |i, j| k(queries[i].0, xs[j]));
                let a = solve_cholesky(&l, &kts)?;
                let mut means = vec![0.0; xs.len()];
                let mut vars = vec![0.0; xs.len()];
                for j in 0..xs.len() {
                    let mut m = 0.0;
                    let mut red = 0.0;
                    for i in 0..n {
                        m += kts.get(i, j) * alpha.get(i, 0);
                        red += kts.get(i, j) * a.get(i, j);
                    }
                    means[j] = m;
                    vars[j] = (signal_variance + noise_var - red).max(1e-12);
                }
                Ok((means, vars))
            }
        }
    }
}

fn queries_to_dataset(queries: &[(f64, f64)]) -> Result<Option<TaskDataset>> {
    if queries.is_empty() {
        return Ok(None);
    }
    let x = Matrix::from_fn(queries.len(), 1, |i, _| queries[i].0);
    let y = queries.iter().map(|q| q.1).collect();
    Ok(Some(TaskDataset::labeled(0, x, y)?))
}

/// Index of the UCB maximizer `m + beta s`, lowest index on ties.
pub fn ucb_choose(means: &[f64], stds: &[f64], beta: f64) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, (m, s)) in means.iter().zip(stds).enumerate() {
        let v = m + beta * s;
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    best
}

/// The candidate maximizing the UCB of the surrogate conditioned on the
/// queries so far.
pub fn ucb_select(
    surrogate: &Surrogate,
    queries: &[(f64, f64)],
    candidates: &[f64],
    beta: f64,
    noise_var: f64,
) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::config("candidates: must be non-empty"));
    }
    let (means, vars) = surrogate.predictive(queries, candidates, noise_var)?;
    let stds: Vec<f64> = vars.iter().map(|v| v.sqrt()).collect();
    Ok(candidates[ucb_choose(&means, &stds, beta)])
}

/// Dense-grid maximum of the objective on [-10, 10].
pub fn true_maximum(task: &BoTaskParams) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for i in 0..TRUE_MAX_GRID {
        let x = -10.0 + 20.0 * i as f64 / (TRUE_MAX_GRID - 1) as f64;
        best = best.max(eval_g_bo(task, x));
    }
    best
}

pub fn candidate_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| -10.0 + 20.0 * i as f64 / (n - 1) as f64)
        .collect()
}

/// Runs UCB Bayesian optimization against the task objective. Regret is
/// measured against the dense-grid true maximum using the noiseless
/// objective value at the queried points.
pub fn run_bo(
    task: &BoTaskParams,
    surrogate: Surrogate,
    cfg: &BoRunConfig,
    rng: &mut RunRng,
) -> Result<BoTrace> {
    cfg.validate()?;
    let base = rng.next_u64();
    let mut obs_rng = substream(base, &["observe"]);
    let true_max = true_maximum(task);
    let candidates = candidate_grid(cfg.candidate_grid);

    let mut surrogate = surrogate;
    let mut queries: Vec<(f64, f64)> = Vec::with_capacity(cfg.n_iterations);
    let mut best_so_far = Vec::with_capacity(cfg.n_iterations);
    let mut regret = Vec::with_capacity(cfg.n_iterations);
    let mut best = f64::NEG_INFINITY;

    for t in 1..=cfg.n_iterations {
        let x = ucb_select(
            &surrogate,
            &queries,
            &candidates,
            cfg.ucb_beta,
            cfg.observation_noise_var,
        )?;
        let g = eval_g_bo(task, x);
        let eps: f64 = StandardNormal.sample(&mut obs_rng);
        let y = g + cfg.observation_noise_var.sqrt() * eps;
        queries.push((x, y));
        best = best.max(g);
        best_so_far.push(best);
        regret.push(true_max - best);

        if let Surrogate::Ensemble {
            ensemble,
            svgd,
            score,
        } = &mut surrogate
        {
            if cfg.surrogate_update_steps > 0 {
                let data = vec![queries_to_dataset(&queries)?.expect("non-empty")];
                let refit = fit_posterior(
                    ensemble.clone(),
                    &data,
                    score,
                    &svgd.with_steps(cfg.surrogate_update_steps),
                    &mut substream(base, &["refit", &t.to_string()]),
                )?;
                *ensemble = refit;
            }
        }
    }

    Ok(BoTrace {
        queries,
        best_so_far,
        regret,
        true_max,
    })
}

/// The fixed-prior baseline: zero mean, squared-exponential kernel with
/// unit scale and lengthscale, no surrogate updates.
pub fn vanilla_bo_baseline(
    task: &BoTaskParams,
    cfg: &BoRunConfig,
    rng: &mut RunRng,
) -> Result<BoTrace> {
    run_bo(task, Surrogate::vanilla(), cfg, rng)
}
