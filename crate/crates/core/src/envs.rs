//! Synthetic task generators and the labeling oracle.
//!
//! Three task families: shifted-scaled sinusoids for regression, a
//! heterogeneous-cluster variant where each cluster draws its amplitude
//! from a widening interval, and a three-bump objective family for the
//! Bayesian-optimization experiments.
//!
//! Labels are generated eagerly when a pool is created and kept hidden
//! until the oracle reveals them. Every selection strategy run against the
//! same pool therefore sees identical label realizations.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::gp::TaskDataset;
use crate::tensor::Matrix;

const POOL_FORMAT_VERSION: u32 = 1;

/// Distribution descriptor. Normal parameters are (mean, variance).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Dist {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, var: f64 },
}

impl Dist {
    pub fn point(v: f64) -> Self {
        Dist::Uniform { lo: v, hi: v }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Dist::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(Error::config("uniform distribution needs lo <= hi"));
                }
            }
            Dist::Normal { mean, var } => {
                if !(mean.is_finite() && var.is_finite() && var >= 0.0) {
                    return Err(Error::config("normal distribution needs var >= 0"));
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Dist::Uniform { lo, hi } => {
                if lo == hi {
                    lo
                } else {
                    rng.gen_range(lo..hi)
                }
            }
            Dist::Normal { mean, var } => {
                if var == 0.0 {
                    mean
                } else {
                    Normal::new(mean, var.sqrt()).unwrap().sample(rng)
                }
            }
        }
    }
}

/// Parameters of one sinusoid task: `g(x) = alpha x + a sin(1.5 (x - b)) + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidTaskParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub alpha: f64,
}

impl SinusoidTaskParams {
    pub fn mean_at(&self, x: f64) -> f64 {
        self.alpha * x + self.a * (1.5 * (x - self.b)).sin() + self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidEnvConfig {
    pub a_dist: Dist,
    pub b_dist: Dist,
    pub c_dist: Dist,
    pub alpha_dist: Dist,
    pub x_range: (f64, f64),
    pub noise_var: f64,
    pub n_samples: usize,
}

impl SinusoidEnvConfig {
    /// Narrow task environment: a ~ U(0.9, 1.1), b ~ N(0, 0.06),
    /// c ~ N(5, 0.06), alpha ~ N(0.5, 0.11).
    pub fn narrow(n_samples: usize) -> Self {
        SinusoidEnvConfig {
            a_dist: Dist::Uniform { lo: 0.9, hi: 1.1 },
            b_dist: Dist::Normal { mean: 0.0, var: 0.06 },
            c_dist: Dist::Normal { mean: 5.0, var: 0.06 },
            alpha_dist: Dist::Normal { mean: 0.5, var: 0.11 },
            x_range: (-5.0, 5.0),
            noise_var: 0.12,
            n_samples,
        }
    }

    /// Wide task environment: a ~ U(0.7, 1.3), b ~ N(0, 0.12),
    /// c ~ N(5, 0.12), alpha ~ N(0.5, 0.22).
    pub fn wide(n_samples: usize) -> Self {
        SinusoidEnvConfig {
            a_dist: Dist::Uniform { lo: 0.7, hi: 1.3 },
            b_dist: Dist::Normal { mean: 0.0, var: 0.12 },
            c_dist: Dist::Normal { mean: 5.0, var: 0.12 },
            alpha_dist: Dist::Normal { mean: 0.5, var: 0.22 },
            x_range: (-5.0, 5.0),
            noise_var: 0.12,
            n_samples,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for d in [self.a_dist, self.b_dist, self.c_dist, self.alpha_dist] {
            d.validate()?;
        }
        if self.n_samples == 0 {
            return Err(Error::config("n_samples: must be >= 1"));
        }
        if !(self.noise_var >= 0.0) {
            return Err(Error::config("noise_var: must be >= 0"));
        }
        if self.x_range.0 >= self.x_range.1 {
            return Err(Error::config("x_range: lo must be < hi"));
        }
        Ok(())
    }

    fn sample_params<R: Rng + ?Sized>(&self, rng: &mut R) -> SinusoidTaskParams {
        SinusoidTaskParams {
            a: self.a_dist.sample(rng),
            b: self.b_dist.sample(rng),
            c: self.c_dist.sample(rng),
            alpha: self.alpha_dist.sample(rng),
        }
    }
}

/// Parameters of one BO objective task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoTaskParams {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
}

/// The BO objective: `2 w1 p1(x) + 1.5 w2 p2(x) + 1.8 w3 p3(x) + 1` with
/// two Cauchy bumps and one Gaussian bump.
pub fn eval_g_bo(params: &BoTaskParams, x: f64) -> f64 {
    let d1 = x - params.alpha1;
    let d2 = x - params.alpha2;
    let d3 = x - params.alpha3;
    let p1 = 1.0 / (PI * (1.0 + d1 * d1));
    let p2 = (1.0 / (2.0 * PI)) * (-d2 * d2 / 8.0).exp();
    let p3 = 1.0 / (PI * (1.0 + d3 * d3 / 4.0));
    2.0 * params.w1 * p1 + 1.5 * params.w2 * p2 + 1.8 * params.w3 * p3 + 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoEnvConfig {
    pub n_samples: usize,
    pub noise_var: f64,
    pub x_range: (f64, f64),
}

impl Default for BoEnvConfig {
    fn default() -> Self {
        BoEnvConfig {
            n_samples: 40,
            noise_var: 0.01,
            x_range: (-10.0, 10.0),
        }
    }
}

impl BoEnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::config("n_samples: must be >= 1"));
        }
        if !(self.noise_var >= 0.0) {
            return Err(Error::config("bo noise_var: must be >= 0"));
        }
        Ok(())
    }
}

/// Draws one task from the BO task distribution: w_i ~ U(0.6, 1.4),
/// alpha_1 ~ N(-2, 0.3^2), alpha_2 ~ N(3, 0.3^2), alpha_3 ~ N(-8, 0.3^2).
pub fn sample_bo_task<R: Rng + ?Sized>(rng: &mut R) -> BoTaskParams {
    let w = Dist::Uniform { lo: 0.6, hi: 1.4 };
    BoTaskParams {
        w1: w.sample(rng),
        w2: w.sample(rng),
        w3: w.sample(rng),
        alpha1: Dist::Normal { mean: -2.0, var: 0.09 }.sample(rng),
        alpha2: Dist::Normal { mean: 3.0, var: 0.09 }.sample(rng),
        alpha3: Dist::Normal { mean: -8.0, var: 0.09 }.sample(rng),
    }
}

/// Heterogeneous clusters: cluster j draws its amplitude from
/// [`cluster_amplitude_interval`]; all other parameters follow `base`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterEnvConfig {
    pub n_clusters: usize,
    pub base: SinusoidEnvConfig,
    pub pool_size: usize,
}

impl ClusterEnvConfig {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.n_clusters == 0 {
            return Err(Error::config("n_clusters: must be >= 1"));
        }
        if self.pool_size == 0 || self.pool_size % self.n_clusters != 0 {
            return Err(Error::config(
                "pool_size: must be a positive multiple of n_clusters",
            ));
        }
        Ok(())
    }
}

/// Amplitude interval of cluster `j` (0-based):
/// `U(1.1 + j(0.1 + (j-1) 0.05), 1.1 + (j+1)(0.1 + j 0.05))`.
pub fn cluster_amplitude_interval(j: usize) -> (f64, f64) {
    let j = j as f64;
    let lo = 1.1 + j * (0.1 + (j - 1.0) * 0.05);
    let hi = 1.1 + (j + 1.0) * (0.1 + j * 0.05);
    (lo, hi)
}

/// Task parameters of either family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum TaskParams {
    Sinusoid(SinusoidTaskParams),
    Bo(BoTaskParams),
}

impl TaskParams {
    pub fn mean_at(&self, x: f64) -> f64 {
        match self {
            TaskParams::Sinusoid(p) => p.mean_at(x),
            TaskParams::Bo(p) => eval_g_bo(p, x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PoolTask {
    params: TaskParams,
    data: TaskDataset,
    hidden_labels: Vec<f64>,
    labeled: bool,
}

/// A pool of tasks with draw-once hidden labels and a serialized oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskPool {
    version: u32,
    tasks: Vec<PoolTask>,
}

fn noisy_labels<R: Rng + ?Sized>(
    params: &TaskParams,
    xs: &[f64],
    noise_var: f64,
    rng: &mut R,
) -> Vec<f64> {
    let sd = noise_var.sqrt();
    xs.iter()
        .map(|&x| {
            let eps: f64 = StandardNormal.sample(rng);
            params.mean_at(x) + sd * eps
        })
        .collect()
}

fn uniform_xs<R: Rng + ?Sized>(range: (f64, f64), n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(range.0..range.1)).collect()
}

impl TaskPool {
    fn build<R: Rng + ?Sized>(
        specs: Vec<(TaskParams, (f64, f64), usize, f64)>,
        rng: &mut R,
    ) -> Self {
        let tasks = specs
            .into_iter()
            .enumerate()
            .map(|(id, (params, range, n, noise_var))| {
                let xs = uniform_xs(range, n, rng);
                let hidden = noisy_labels(&params, &xs, noise_var, rng);
                let x = Matrix::from_fn(n, 1, |i, _| xs[i]);
                PoolTask {
                    params,
                    data: TaskDataset::unlabeled(id, x).expect("n >= 1"),
                    hidden_labels: hidden,
                    labeled: false,
                }
            })
            .collect();
        TaskPool {
            version: POOL_FORMAT_VERSION,
            tasks,
        }
    }

    pub fn sample_sinusoid<R: Rng + ?Sized>(
        cfg: &SinusoidEnvConfig,
        pool_size: usize,
        rng: &mut R,
    ) -> Result<Self> {
        cfg.validate()?;
        if pool_size == 0 {
            return Err(Error::config("pool_size: must be >= 1"));
        }
        let specs = (0..pool_size)
            .map(|_| {
                (
                    TaskParams::Sinusoid(cfg.sample_params(rng)),
                    cfg.x_range,
                    cfg.n_samples,
                    cfg.noise_var,
                )
            })
            .collect();
        Ok(TaskPool::build(specs, rng))
    }

    pub fn sample_bo<R: Rng + ?Sized>(
        cfg: &BoEnvConfig,
        pool_size: usize,
        rng: &mut R,
    ) -> Result<Self> {
        cfg.validate()?;
        if pool_size == 0 {
            return Err(Error::config("pool_size: must be >= 1"));
        }
        let specs = (0..pool_size)
            .map(|_| {
                (
                    TaskParams::Bo(sample_bo_task(rng)),
                    cfg.x_range,
                    cfg.n_samples,
                    cfg.noise_var,
                )
            })
            .collect();
        Ok(TaskPool::build(specs, rng))
    }

    /// Cluster pool: tasks are assigned to clusters in contiguous blocks of
    /// `pool_size / n_clusters`.
    pub fn sample_cluster<R: Rng + ?Sized>(cfg: &ClusterEnvConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let per_cluster = cfg.pool_size / cfg.n_clusters;
        let specs = (0..cfg.pool_size)
            .map(|i| {
                let j = i / per_cluster;
                let (lo, hi) = cluster_amplitude_interval(j);
                let mut params = cfg.base.sample_params(rng);
                params.a = Dist::Uniform { lo, hi }.sample(rng);
                (
                    TaskParams::Sinusoid(params),
                    cfg.base.x_range,
                    cfg.base.n_samples,
                    cfg.base.noise_var,
                )
            })
            .collect();
        Ok(TaskPool::build(specs, rng))
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn task(&self, task_id: usize) -> Result<&TaskDataset> {
        self.tasks
            .get(task_id)
            .map(|t| &t.data)
            .ok_or(Error::UnknownTask(task_id))
    }

    pub fn params(&self, task_id: usize) -> Result<&TaskParams> {
        self.tasks
            .get(task_id)
            .map(|t| &t.params)
            .ok_or(Error::UnknownTask(task_id))
    }

    pub fn is_labeled(&self, task_id: usize) -> Result<bool> {
        self.tasks
            .get(task_id)
            .map(|t| t.labeled)
            .ok_or(Error::UnknownTask(task_id))
    }

    pub fn labeled_count(&self) -> usize {
        self.tasks.iter().filter(|t| t.labeled).count()
    }

    pub fn unlabeled_tasks(&self) -> Vec<&TaskDataset> {
        self.tasks
            .iter()
            .filter(|t| !t.labeled)
            .map(|t| &t.data)
            .collect()
    }

    pub fn labeled_tasks(&self) -> Vec<&TaskDataset> {
        self.tasks
            .iter()
            .filter(|t| t.labeled)
            .map(|t| &t.data)
            .collect()
    }

    /// Owned copies of the labeled datasets, in the given id order.
    pub fn datasets(&self, ids: &[usize]) -> Result<Vec<TaskDataset>> {
        ids.iter()
            .map(|&id| {
                let t = self.tasks.get(id).ok_or(Error::UnknownTask(id))?;
                if !t.labeled {
                    return Err(Error::config(format!("task {id} has not been labeled")));
                }
                Ok(t.data.clone())
            })
            .collect()
    }

    /// Reveals the labels of a task. Labels were drawn at pool creation;
    /// relabeling is a state error.
    pub fn oracle_label(&mut self, task_id: usize) -> Result<&[f64]> {
        let task = self
            .tasks
            .get_mut(task_id)
            .ok_or(Error::UnknownTask(task_id))?;
        if task.labeled {
            return Err(Error::AlreadyLabeled(task_id));
        }
        task.labeled = true;
        task.data.y = Some(task.hidden_labels.clone());
        Ok(task.data.y.as_deref().unwrap())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let pool: TaskPool = serde_json::from_str(json)?;
        if pool.version != POOL_FORMAT_VERSION {
            return Err(Error::config(format!(
                "pool format version {} unsupported (expected {POOL_FORMAT_VERSION})",
                pool.version
            )));
        }
        Ok(pool)
    }
}

/// One freshly sampled meta-test task: an adaptation set with revealed
/// labels and held-out evaluation points with their realized labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestTask {
    pub adapt: TaskDataset,
    pub x_eval: Matrix,
    pub y_eval: Vec<f64>,
}

fn split_test_task<R: Rng + ?Sized>(
    params: TaskParams,
    range: (f64, f64),
    noise_var: f64,
    n_adapt: usize,
    n_eval: usize,
    rng: &mut R,
) -> TestTask {
    let xs = uniform_xs(range, n_adapt + n_eval, rng);
    let ys = noisy_labels(&params, &xs, noise_var, rng);
    let x_adapt = Matrix::from_fn(n_adapt, 1, |i, _| xs[i]);
    let x_eval = Matrix::from_fn(n_eval, 1, |i, _| xs[n_adapt + i]);
    TestTask {
        adapt: TaskDataset::labeled(0, x_adapt, ys[..n_adapt].to_vec()).expect("n_adapt >= 1"),
        x_eval,
        y_eval: ys[n_adapt..].to_vec(),
    }
}

pub fn sample_sinusoid_test_tasks<R: Rng + ?Sized>(
    cfg: &SinusoidEnvConfig,
    n_tasks: usize,
    n_adapt: usize,
    n_eval: usize,
    rng: &mut R,
) -> Result<Vec<TestTask>> {
    cfg.validate()?;
    if n_adapt == 0 || n_eval == 0 {
        return Err(Error::config("n_adapt and n_eval must be >= 1"));
    }
    Ok((0..n_tasks)
        .map(|_| {
            let params = TaskParams::Sinusoid(cfg.sample_params(rng));
            split_test_task(params, cfg.x_range, cfg.noise_var, n_adapt, n_eval, rng)
        })
        .collect())
}

/// Cluster-environment test tasks; the cluster index is drawn uniformly.
pub fn sample_cluster_test_tasks<R: Rng + ?Sized>(
    cfg: &ClusterEnvConfig,
    n_tasks: usize,
    n_adapt: usize,
    n_eval: usize,
    rng: &mut R,
) -> Result<Vec<TestTask>> {
    cfg.validate()?;
    if n_adapt == 0 || n_eval == 0 {
        return Err(Error::config("n_adapt and n_eval must be >= 1"));
    }
    Ok((0..n_tasks)
        .map(|_| {
            let j = rng.gen_range(0..cfg.n_clusters);
            let (lo, hi) = cluster_amplitude_interval(j);
            let mut params = cfg.base.sample_params(rng);
            params.a = Dist::Uniform { lo, hi }.sample(rng);
            split_test_task(
                TaskParams::Sinusoid(params),
                cfg.base.x_range,
                cfg.base.noise_var,
                n_adapt,
                n_eval,
                rng,
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn point_mass_cfg(a: f64, b: f64, c: f64, alpha: f64, noise_var: f64) -> SinusoidEnvConfig {
        SinusoidEnvConfig {
            a_dist: Dist::point(a),
            b_dist: Dist::point(b),
            c_dist: Dist::point(c),
            alpha_dist: Dist::point(alpha),
            x_range: (-5.0, 5.0),
            noise_var,
            n_samples: 8,
        }
    }

    #[test]
    fn point_mass_tasks_have_sine_means() {
        let cfg = point_mass_cfg(1.0, 0.0, 0.0, 0.0, 0.0);
        let mut rng = substream(60, &["pm"]);
        let mut pool = TaskPool::sample_sinusoid(&cfg, 3, &mut rng).unwrap();
        for id in 0..3 {
            let y = pool.oracle_label(id).unwrap().to_vec();
            let x = pool.task(id).unwrap().x.clone();
            for (i, yi) in y.iter().enumerate() {
                let want = (1.5 * x.get(i, 0)).sin();
                assert!((yi - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_task_labels_equal_x() {
        let cfg = point_mass_cfg(0.0, 0.0, 0.0, 1.0, 0.0);
        let mut rng = substream(61, &["lin"]);
        let mut pool = TaskPool::sample_sinusoid(&cfg, 1, &mut rng).unwrap();
        let y = pool.oracle_label(0).unwrap().to_vec();
        let x = pool.task(0).unwrap().x.clone();
        for (i, yi) in y.iter().enumerate() {
            assert_eq!(*yi, x.get(i, 0));
        }
    }

    #[test]
    fn pools_are_seed_deterministic() {
        let cfg = SinusoidEnvConfig::narrow(10);
        let a = TaskPool::sample_sinusoid(&cfg, 5, &mut substream(62, &["p"])).unwrap();
        let b = TaskPool::sample_sinusoid(&cfg, 5, &mut substream(62, &["p"])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oracle_is_draw_once_and_rejects_relabeling() {
        let cfg = SinusoidEnvConfig::narrow(6);
        let mut rng = substream(63, &["oracle"]);
        let mut pool = TaskPool::sample_sinusoid(&cfg, 4, &mut rng).unwrap();
        assert_eq!(pool.labeled_count(), 0);
        let first = pool.oracle_label(2).unwrap().to_vec();
        assert_eq!(pool.labeled_count(), 1);
        assert!(matches!(
            pool.oracle_label(2),
            Err(Error::AlreadyLabeled(2))
        ));
        assert!(matches!(pool.oracle_label(99), Err(Error::UnknownTask(99))));

        // identical pool under the same seed reveals identical labels
        let mut pool2 =
            TaskPool::sample_sinusoid(&cfg, 4, &mut substream(63, &["oracle"])).unwrap();
        assert_eq!(pool2.oracle_label(2).unwrap(), &first[..]);
    }

    #[test]
    fn covariates_stay_in_range() {
        let cfg = SinusoidEnvConfig::narrow(50);
        let mut rng = substream(64, &["range"]);
        let pool = TaskPool::sample_sinusoid(&cfg, 10, &mut rng).unwrap();
        for id in 0..10 {
            let x = &pool.task(id).unwrap().x;
            for i in 0..x.rows() {
                assert!(x.get(i, 0) >= -5.0 && x.get(i, 0) < 5.0);
            }
        }
    }

    #[test]
    fn bo_objective_trivia() {
        let flat = BoTaskParams {
            w1: 0.0,
            w2: 0.0,
            w3: 0.0,
            alpha1: 0.0,
            alpha2: 0.0,
            alpha3: 0.0,
        };
        assert_eq!(eval_g_bo(&flat, -3.0), 1.0);
        assert_eq!(eval_g_bo(&flat, 7.0), 1.0);

        // p2 is symmetric around alpha2
        let p = BoTaskParams {
            w1: 0.0,
            w2: 1.0,
            w3: 0.0,
            alpha1: 0.0,
            alpha2: 3.0,
            alpha3: 0.0,
        };
        for h in [0.1, 1.0, 2.5] {
            assert!((eval_g_bo(&p, 3.0 + h) - eval_g_bo(&p, 3.0 - h)).abs() < 1e-12);
        }
    }

    #[test]
    fn bo_objective_far_field_value() {
        // alpha2 and alpha3 far away: g(alpha1) ~ 2/pi + 1
        let p = BoTaskParams {
            w1: 1.0,
            w2: 1.0,
            w3: 1.0,
            alpha1: 0.0,
            alpha2: 1e6,
            alpha3: -1e6,
        };
        let got = eval_g_bo(&p, 0.0);
        let want = 2.0 / PI + 1.0;
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    }

    #[test]
    fn bo_objective_is_bounded_by_bump_maxima() {
        let mut rng = substream(65, &["bound"]);
        for _ in 0..5 {
            let p = sample_bo_task(&mut rng);
            let bound = 1.0 + 2.0 * p.w1 / PI + 1.5 * p.w2 / (2.0 * PI) + 1.8 * p.w3 / PI;
            for i in 0..=2000 {
                let x = -10.0 + 20.0 * i as f64 / 2000.0;
                assert!(eval_g_bo(&p, x) <= bound + 1e-12);
            }
        }
    }

    #[test]
    fn bo_pool_mirrors_sinusoid_behavior() {
        let cfg = BoEnvConfig {
            noise_var: 0.0,
            ..Default::default()
        };
        let mut rng = substream(66, &["bo-pool"]);
        let mut pool = TaskPool::sample_bo(&cfg, 3, &mut rng).unwrap();
        let params = *pool.params(1).unwrap();
        let TaskParams::Bo(bp) = params else {
            panic!("expected bo params")
        };
        let y = pool.oracle_label(1).unwrap().to_vec();
        let x = pool.task(1).unwrap().x.clone();
        for (i, yi) in y.iter().enumerate() {
            assert_eq!(*yi, eval_g_bo(&bp, x.get(i, 0)));
        }

        let again = TaskPool::sample_bo(&cfg, 3, &mut substream(66, &["bo-pool"])).unwrap();
        assert_eq!(again.params(1).unwrap(), &params);
    }

    #[test]
    fn cluster_intervals_match_the_formula() {
        let (lo, hi) = cluster_amplitude_interval(0);
        assert!((lo - 1.1).abs() < 1e-12 && (hi - 1.2).abs() < 1e-12);
        let (lo, hi) = cluster_amplitude_interval(1);
        assert!((lo - 1.2).abs() < 1e-12 && (hi - 1.4).abs() < 1e-12);
    }

    #[test]
    fn cluster_pool_amplitudes_stay_in_their_intervals() {
        let cfg = ClusterEnvConfig {
            n_clusters: 4,
            base: SinusoidEnvConfig::narrow(5),
            pool_size: 20,
        };
        let mut rng = substream(67, &["cluster"]);
        let pool = TaskPool::sample_cluster(&cfg, &mut rng).unwrap();
        for id in 0..20 {
            let j = id / 5;
            let (lo, hi) = cluster_amplitude_interval(j);
            let TaskParams::Sinusoid(p) = pool.params(id).unwrap() else {
                panic!("expected sinusoid params")
            };
            assert!(p.a >= lo && p.a <= hi, "task {id}: a={} not in [{lo},{hi}]", p.a);
        }

        // C = 1 uses a single interval for every task
        let homog = ClusterEnvConfig {
            n_clusters: 1,
            base: SinusoidEnvConfig::narrow(5),
            pool_size: 6,
        };
        let pool = TaskPool::sample_cluster(&homog, &mut rng).unwrap();
        for id in 0..6 {
            let TaskParams::Sinusoid(p) = pool.params(id).unwrap() else {
                panic!("expected sinusoid params")
            };
            assert!(p.a >= 1.1 && p.a <= 1.2);
        }
    }

    #[test]
    fn pool_json_roundtrip() {
        let cfg = SinusoidEnvConfig::narrow(4);
        let mut rng = substream(68, &["json"]);
        let mut pool = TaskPool::sample_sinusoid(&cfg, 3, &mut rng).unwrap();
        pool.oracle_label(0).unwrap();
        let json = pool.to_json().unwrap();
        let back = TaskPool::from_json(&json).unwrap();
        assert_eq!(pool, back);
    }

    #[test]
    fn test_tasks_split_adapt_and_eval() {
        let cfg = SinusoidEnvConfig::narrow(40);
        let mut rng = substream(69, &["tt"]);
        let tasks = sample_sinusoid_test_tasks(&cfg, 3, 5, 35, &mut rng).unwrap();
        assert_eq!(tasks.len(), 3);
        for t in &tasks {
            assert_eq!(t.adapt.n(), 5);
            assert_eq!(t.x_eval.rows(), 35);
            assert_eq!(t.y_eval.len(), 35);
            assert!(t.adapt.y.is_some());
        }
    }

    proptest::proptest! {
        #[test]
        fn prop_sinusoid_mean_is_finite(a in -3.0f64..3.0, b in -3.0f64..3.0,
                                        c in -3.0f64..8.0, alpha in -2.0f64..2.0,
                                        x in -5.0f64..5.0) {
            let p = SinusoidTaskParams { a, b, c, alpha };
            proptest::prop_assert!(p.mean_at(x).is_finite());
        }
    }
}
