//! Deep-kernel Gaussian process regression for a fixed hyperparameter.
//!
//! A hyperparameter is a pair of networks: a pointwise mean function and a
//! feature map defining the kernel
//!
//! ```text
//! k(x, x') = 1/2 * exp(-|| phi(x) - phi(x') ||^2)
//! ```
//!
//! For one task the labels are jointly Gaussian with mean `mu(X)` and
//! covariance `K(X) + sigma^2 I`. Everything here is pure in its inputs, so
//! per-particle evaluation parallelizes freely.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{
    inverse_from_cholesky, mlp_backward, mlp_forward, solve_cholesky, solve_lower, FlatParams,
    Matrix, MlpSpec,
};

const LN_2PI: f64 = 1.8378770664093453;

/// Observation model and network architectures for the GP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpConfig {
    /// Observation noise variance sigma^2; fixed per run, not learned.
    pub noise_variance: f64,
    pub mean_spec: MlpSpec,
    pub feature_spec: MlpSpec,
}

impl GpConfig {
    pub fn new(noise_variance: f64, mean_spec: MlpSpec, feature_spec: MlpSpec) -> Result<Self> {
        let cfg = GpConfig {
            noise_variance,
            mean_spec,
            feature_spec,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_variance > 0.0) {
            return Err(Error::config("noise_variance: must be > 0"));
        }
        self.mean_spec.validate()?;
        self.feature_spec.validate()?;
        if self.mean_spec.output_dim != 1 {
            return Err(Error::config("mean_spec: output_dim must be 1"));
        }
        if self.feature_spec.output_dim < 1 {
            return Err(Error::config("feature_spec: output_dim must be >= 1"));
        }
        Ok(())
    }
}

/// One hyperparameter hypothesis: parameters of the mean net and the
/// feature net.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaPair {
    pub mean: FlatParams,
    pub feature: FlatParams,
}

impl ThetaPair {
    pub fn zeros(cfg: &GpConfig) -> Self {
        ThetaPair {
            mean: FlatParams::zeros(cfg.mean_spec.clone()),
            feature: FlatParams::zeros(cfg.feature_spec.clone()),
        }
    }

    /// Draws every coordinate i.i.d. N(0, prior_variance).
    pub fn from_prior<R: Rng + ?Sized>(cfg: &GpConfig, prior_variance: f64, rng: &mut R) -> Self {
        let dist = rand_distr::Normal::new(0.0, prior_variance.sqrt()).unwrap();
        let mut theta = ThetaPair::zeros(cfg);
        for v in theta
            .mean
            .values_mut()
            .iter_mut()
            .chain(theta.feature.values_mut())
        {
            *v = dist.sample(rng);
        }
        theta
    }

    pub fn dim(&self) -> usize {
        self.mean.len() + self.feature.len()
    }

    /// Concatenated view used by the particle kernel.
    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.extend_from_slice(self.mean.values());
        v.extend_from_slice(self.feature.values());
        v
    }

    pub fn set_from_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.dim() {
            return Err(Error::shape("flat vector length != theta dimension"));
        }
        let split = self.mean.len();
        self.mean.values_mut().copy_from_slice(&flat[..split]);
        self.feature.values_mut().copy_from_slice(&flat[split..]);
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.mean.values().iter().all(|v| v.is_finite())
            && self.feature.values().iter().all(|v| v.is_finite())
    }
}

/// Gradient with respect to both networks of a hypothesis.
#[derive(Debug, Clone)]
pub struct ThetaGrad {
    pub mean: Vec<f64>,
    pub feature: Vec<f64>,
}

impl ThetaGrad {
    pub fn zeros_like(theta: &ThetaPair) -> Self {
        ThetaGrad {
            mean: vec![0.0; theta.mean.len()],
            feature: vec![0.0; theta.feature.len()],
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.mean.len() + self.feature.len());
        v.extend_from_slice(&self.mean);
        v.extend_from_slice(&self.feature);
        v
    }

    pub fn scale(&mut self, s: f64) {
        for v in self.mean.iter_mut().chain(self.feature.iter_mut()) {
            *v *= s;
        }
    }

    pub fn add_scaled(&mut self, other: &ThetaGrad, s: f64) {
        for (a, b) in self.mean.iter_mut().zip(&other.mean) {
            *a += s * b;
        }
        for (a, b) in self.feature.iter_mut().zip(&other.feature) {
            *a += s * b;
        }
    }
}

/// Covariates (and labels, once the oracle has been queried) of one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDataset {
    pub task_id: usize,
    pub x: Matrix,
    pub y: Option<Vec<f64>>,
}

impl TaskDataset {
    pub fn unlabeled(task_id: usize, x: Matrix) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::shape("task needs at least one covariate row"));
        }
        Ok(TaskDataset { task_id, x, y: None })
    }

    pub fn labeled(task_id: usize, x: Matrix, y: Vec<f64>) -> Result<Self> {
        if y.len() != x.rows() {
            return Err(Error::shape(format!(
                "label vector length {} != {} covariate rows",
                y.len(),
                x.rows()
            )));
        }
        let mut t = TaskDataset::unlabeled(task_id, x)?;
        t.y = Some(y);
        Ok(t)
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn labels(&self) -> Result<&[f64]> {
        self.y
            .as_deref()
            .ok_or_else(|| Error::config(format!("task {} has no labels yet", self.task_id)))
    }
}

/// Multivariate normal with a cached Cholesky factor of its covariance.
#[derive(Debug, Clone)]
pub struct GpPredictive {
    mean: Vec<f64>,
    cov: Matrix,
    chol: Matrix,
}

impl GpPredictive {
    pub fn new(mean: Vec<f64>, cov: Matrix) -> Result<Self> {
        if cov.rows() != mean.len() || !cov.is_square() {
            return Err(Error::shape("predictive covariance must be MxM"));
        }
        let (chol, _jitter) = cov.cholesky_jittered()?;
        Ok(GpPredictive { mean, cov, chol })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &Matrix {
        &self.cov
    }

    pub fn chol(&self) -> &Matrix {
        &self.chol
    }
}

/// Feature embeddings of a covariate batch.
fn embed(theta: &ThetaPair, x: &Matrix) -> Result<Matrix> {
    mlp_forward(&theta.feature, x)
}

fn kernel_from_embeddings(phi1: &Matrix, phi2: &Matrix) -> Matrix {
    Matrix::from_fn(phi1.rows(), phi2.rows(), |i, j| {
        let mut d2 = 0.0;
        for (a, b) in phi1.row(i).iter().zip(phi2.row(j)) {
            let t = a - b;
            d2 += t * t;
        }
        0.5 * (-d2).exp()
    })
}

/// Deep kernel matrix: entry (i, j) = 1/2 exp(-||phi(x1_i) - phi(x2_j)||^2).
pub fn kernel_matrix(theta: &ThetaPair, x1: &Matrix, x2: &Matrix, _cfg: &GpConfig) -> Result<Matrix> {
    if x1.cols() != x2.cols() {
        return Err(Error::shape("kernel inputs must share the covariate dimension"));
    }
    Ok(kernel_from_embeddings(&embed(theta, x1)?, &embed(theta, x2)?))
}

/// Pointwise mean vector mu(X).
fn mean_vector(theta: &ThetaPair, x: &Matrix) -> Result<Vec<f64>> {
    let m = mlp_forward(&theta.mean, x)?;
    Ok((0..m.rows()).map(|i| m.get(i, 0)).collect())
}

/// Joint marginal of the labels at `x`: N(mu(x), K(x) + sigma^2 I).
pub fn marginal_gaussian(theta: &ThetaPair, x: &Matrix, cfg: &GpConfig) -> Result<GpPredictive> {
    if x.rows() == 0 {
        return Err(Error::shape("marginal_gaussian: empty input"));
    }
    let mean = mean_vector(theta, x)?;
    let phi = embed(theta, x)?;
    let cov = kernel_from_embeddings(&phi, &phi).add_diagonal(cfg.noise_variance);
    GpPredictive::new(mean, cov)
}

/// Log density of the labeled task under the joint marginal, via the
/// Cholesky factor.
pub fn log_marginal_likelihood(theta: &ThetaPair, task: &TaskDataset, cfg: &GpConfig) -> Result<f64> {
    let y = task.labels()?;
    let pred = marginal_gaussian(theta, &task.x, cfg)?;
    gaussian_log_density(&pred, y)
}

/// Exact gradient of [`log_marginal_likelihood`] with respect to every
/// weight of both networks.
///
/// Uses dl/dK = (alpha alpha^T - K^-1)/2 with alpha = K^-1 (y - mu), then
/// chains through the kernel's dependence on the embeddings:
/// dk(xi,xj)/dphi_i = -2 k (phi_i - phi_j). The mean-side gradient is
/// mlp_backward with upstream alpha.
pub fn log_marginal_likelihood_grad(
    theta: &ThetaPair,
    task: &TaskDataset,
    cfg: &GpConfig,
) -> Result<ThetaGrad> {
    let y = task.labels()?;
    let x = &task.x;
    let n = task.n();

    let mu = mean_vector(theta, x)?;
    let phi = embed(theta, x)?;
    let k = kernel_from_embeddings(&phi, &phi);
    let ktilde = k.add_diagonal(cfg.noise_variance);
    let (l, _) = ktilde.cholesky_jittered()?;

    let resid: Vec<f64> = y.iter().zip(&mu).map(|(a, b)| a - b).collect();
    let alpha = solve_cholesky(&l, &Matrix::column(&resid))?;
    let kinv = inverse_from_cholesky(&l)?;

    // dl/dK, symmetric
    let w = Matrix::from_fn(n, n, |i, j| {
        0.5 * (alpha.get(i, 0) * alpha.get(j, 0) - kinv.get(i, j))
    });

    let mean_grad = mlp_backward(&theta.mean, x, &alpha)?;

    // Upstream on the embeddings. Each unordered pair contributes through
    // both of its rows; with W symmetric the two accumulations coincide,
    // hence the factor 2.
    let d = phi.cols();
    let mut upstream = Matrix::zeros(n, d);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let coeff = -2.0 * w.get(i, j) * k.get(i, j) * 2.0;
            for c in 0..d {
                let diff = phi.get(i, c) - phi.get(j, c);
                upstream.set(i, c, upstream.get(i, c) + coeff * diff);
            }
        }
    }
    let feature_grad = mlp_backward(&theta.feature, x, &upstream)?;

    Ok(ThetaGrad {
        mean: mean_grad,
        feature: feature_grad,
    })
}

/// Differential entropy 1/2 log det(2 pi e Sigma), from the Cholesky diagonal.
pub fn gaussian_entropy(pred: &GpPredictive) -> f64 {
    let m = pred.dim() as f64;
    let half_log_det: f64 = (0..pred.dim()).map(|i| pred.chol.get(i, i).ln()).sum();
    half_log_det + 0.5 * m * (LN_2PI + 1.0)
}

/// Multivariate normal log density at `y`.
pub fn gaussian_log_density(pred: &GpPredictive, y: &[f64]) -> Result<f64> {
    if y.len() != pred.dim() {
        return Err(Error::shape(format!(
            "density point has length {}, predictive dimension is {}",
            y.len(),
            pred.dim()
        )));
    }
    let resid: Vec<f64> = y.iter().zip(&pred.mean).map(|(a, b)| a - b).collect();
    let z = solve_lower(&pred.chol, &Matrix::column(&resid))?;
    let quad: f64 = z.data().iter().map(|v| v * v).sum();
    let half_log_det: f64 = (0..pred.dim()).map(|i| pred.chol.get(i, i).ln()).sum();
    Ok(-0.5 * quad - half_log_det - 0.5 * pred.dim() as f64 * LN_2PI)
}

/// Draws mean + L z with z i.i.d. standard normal.
pub fn sample_gaussian<R: Rng + ?Sized>(pred: &GpPredictive, rng: &mut R) -> Vec<f64> {
    let z: Vec<f64> = (0..pred.dim())
        .map(|_| StandardNormal.sample(rng))
        .collect();
    sample_gaussian_with_normals(pred, &z).expect("dimension matches by construction")
}

/// Deterministic sampling path given the standard normal draws; the
/// degenerate hook for tests (z = 0 returns the mean).
pub fn sample_gaussian_with_normals(pred: &GpPredictive, z: &[f64]) -> Result<Vec<f64>> {
    if z.len() != pred.dim() {
        return Err(Error::shape("normal draw length != predictive dimension"));
    }
    let mut out = pred.mean.clone();
    for i in 0..pred.dim() {
        for (k, zk) in z.iter().enumerate().take(i + 1) {
            out[i] += pred.chol.get(i, k) * zk;
        }
    }
    Ok(out)
}

/// Predictive of the labels at `x_star` after conditioning the joint
/// marginal on a labeled training set. `None` training data degenerates to
/// the unconditioned marginal.
pub fn condition(
    theta: &ThetaPair,
    train: Option<&TaskDataset>,
    x_star: &Matrix,
    cfg: &GpConfig,
) -> Result<GpPredictive> {
    let Some(train) = train else {
        return marginal_gaussian(theta, x_star, cfg);
    };
    let y = train.labels()?;
    let mu_t = mean_vector(theta, &train.x)?;
    let mu_s = mean_vector(theta, x_star)?;
    let phi_t = embed(theta, &train.x)?;
    let phi_s = embed(theta, x_star)?;

    let ktt = kernel_from_embeddings(&phi_t, &phi_t).add_diagonal(cfg.noise_variance);
    let (l, _) = ktt.cholesky_jittered()?;
    let kts = kernel_from_embeddings(&phi_t, &phi_s);
    let kss = kernel_from_embeddings(&phi_s, &phi_s).add_diagonal(cfg.noise_variance);

    let a = solve_cholesky(&l, &kts)?; // Ktt^-1 Kts
    let resid: Vec<f64> = y.iter().zip(&mu_t).map(|(a, b)| a - b).collect();

    let mut mean = mu_s;
    for (j, m) in mean.iter_mut().enumerate() {
        for (i, r) in resid.iter().enumerate() {
            *m += a.get(i, j) * r;
        }
    }
    let cov = kss.sub(&kts.transpose().matmul(&a)?)?;
    GpPredictive::new(mean, cov)
}

/// Like [`condition`] but returns only per-point means and variances,
/// avoiding the MxM factorization when the joint is not needed.
pub fn condition_marginals(
    theta: &ThetaPair,
    train: Option<&TaskDataset>,
    x_star: &Matrix,
    cfg: &GpConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let Some(train) = train else {
        let mean = mean_vector(theta, x_star)?;
        let var = vec![0.5 + cfg.noise_variance; x_star.rows()];
        return Ok((mean, var));
    };
    let y = train.labels()?;
    let mu_t = mean_vector(theta, &train.x)?;
    let mu_s = mean_vector(theta, x_star)?;
    let phi_t = embed(theta, &train.x)?;
    let phi_s = embed(theta, x_star)?;

    let ktt = kernel_from_embeddings(&phi_t, &phi_t).add_diagonal(cfg.noise_variance);
    let (l, _) = ktt.cholesky_jittered()?;
    let kts = kernel_from_embeddings(&phi_t, &phi_s);
    let a = solve_cholesky(&l, &kts)?;
    let resid: Vec<f64> = y.iter().zip(&mu_t).map(|(a, b)| a - b).collect();

    let mut mean = mu_s;
    let mut var = vec![0.0; x_star.rows()];
    for (j, (m, v)) in mean.iter_mut().zip(var.iter_mut()).enumerate() {
        let mut reduction = 0.0;
        for i in 0..train.n() {
            *m += a.get(i, j) * resid[i];
            reduction += kts.get(i, j) * a.get(i, j);
        }
        // prior variance of a label at one point: k(x,x) + sigma^2 = 1/2 + sigma^2
        *v = (0.5 + cfg.noise_variance - reduction).max(1e-12);
    }
    Ok((mean, var))
}
