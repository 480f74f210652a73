//! The runnable property suite behind `verify --suite all` and the
//! `property_suite` experiment: fast module-level invariant checks that
//! exercise the library end to end without touching the filesystem.

use rand::Rng;

use crate::acquisition::{
    aleatoric_term, bamld_score, pick_best, uncertainty_score, AcquisitionConfig,
};
use crate::bayes_opt::{vanilla_bo_baseline, BoRunConfig};
use crate::envs::{eval_g_bo, BoTaskParams, SinusoidEnvConfig, TaskPool};
use crate::error::Result;
use crate::gp::{
    gaussian_entropy, kernel_matrix, log_marginal_likelihood, log_marginal_likelihood_grad,
    marginal_gaussian, GpConfig, GpPredictive, TaskDataset, ThetaPair,
};
use crate::posterior::{
    fit_posterior, log_posterior_grad, log_posterior_score, svgd_step, ParticleEnsemble,
    PosteriorScoreConfig, SvgdConfig, SvgdKernel,
};
use crate::rng::substream;
use crate::tensor::{mlp_backward, mlp_forward, FlatParams, Matrix, MlpSpec};

pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &'static str, run: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    match run() {
        Ok((pass, detail)) => CheckResult { name, pass, detail },
        Err(e) => CheckResult {
            name,
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

fn small_gp() -> GpConfig {
    GpConfig::new(
        0.12,
        MlpSpec::new(1, vec![4, 4], 1).unwrap(),
        MlpSpec::new(1, vec![4, 4], 2).unwrap(),
    )
    .unwrap()
}

fn random_task(seed: u64, n: usize) -> TaskDataset {
    let mut rng = substream(seed, &["verify-task"]);
    let x = Matrix::from_fn(n, 1, |_, _| rng.gen_range(-5.0..5.0));
    let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    TaskDataset::labeled(0, x, y).unwrap()
}

/// Symmetric Jacobi eigenvalue sweep; the independent log-det oracle.
fn jacobi_eigenvalues(a: &Matrix) -> Vec<f64> {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| a.get(i, j)).collect())
        .collect();
    for _ in 0..100 {
        let mut off = 0.0;
        let (mut p, mut q) = (0, 1);
        for i in 0..n {
            for j in i + 1..n {
                if m[i][j].abs() > off {
                    off = m[i][j].abs();
                    p = i;
                    q = j;
                }
            }
        }
        if off < 1e-14 {
            break;
        }
        let theta = 0.5 * (m[q][q] - m[p][p]) / m[p][q];
        let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
        let c = 1.0 / (t * t + 1.0).sqrt();
        let s = t * c;
        for k in 0..n {
            let (mkp, mkq) = (m[k][p], m[k][q]);
            m[k][p] = c * mkp - s * mkq;
            m[k][q] = s * mkp + c * mkq;
        }
        for k in 0..n {
            let (mpk, mqk) = (m[p][k], m[q][k]);
            m[p][k] = c * mpk - s * mqk;
            m[q][k] = s * mpk + c * mqk;
        }
    }
    (0..n).map(|i| m[i][i]).collect()
}

pub fn entropy_vs_eigen_oracle(n_matrices: usize, seed: u64) -> (bool, f64) {
    let mut rng = substream(seed, &["eig"]);
    let mut worst = 0.0f64;
    for _ in 0..n_matrices {
        let dim = rng.gen_range(2..8);
        let a = Matrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
        let cov = a
            .transpose()
            .matmul(&a)
            .unwrap()
            .add(&Matrix::identity(dim))
            .unwrap();
        let pred = GpPredictive::new(vec![0.0; dim], cov.clone()).unwrap();
        let got = gaussian_entropy(&pred);
        let logdet: f64 = jacobi_eigenvalues(&cov).iter().map(|&l| l.ln()).sum();
        let want = 0.5 * (dim as f64 * (1.0 + (2.0 * std::f64::consts::PI).ln()) + logdet);
        worst = worst.max((got - want).abs());
    }
    (worst < 1e-9, worst)
}

pub fn run_all() -> Vec<CheckResult> {
    let mut results = Vec::new();

    results.push(check("cholesky reconstruction on random SPD", || {
        let mut rng = substream(101, &["chol"]);
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let a = Matrix::from_fn(8, 8, |_, _| rng.gen_range(-1.0..1.0));
            let spd = a
                .transpose()
                .matmul(&a)?
                .add(&Matrix::identity(8))?;
            let l = spd.cholesky()?;
            let rel = l.matmul(&l.transpose())?.sub(&spd)?.frobenius_norm()
                / spd.frobenius_norm();
            worst = worst.max(rel);
        }
        Ok((worst < 1e-10, format!("worst relative error {worst:.2e}")))
    }));

    results.push(check("kernel diagonal 1/2 and symmetry", || {
        let gp = small_gp();
        let mut rng = substream(102, &["kdiag"]);
        let theta = ThetaPair::from_prior(&gp, 1.0, &mut rng);
        let x = Matrix::from_fn(6, 1, |_, _| rng.gen_range(-5.0..5.0));
        let k = kernel_matrix(&theta, &x, &x, &gp)?;
        let mut ok = true;
        for i in 0..6 {
            ok &= k.get(i, i) == 0.5;
            for j in 0..6 {
                ok &= k.get(i, j) == k.get(j, i);
            }
        }
        Ok((ok, "exact".into()))
    }));

    results.push(check("mlp batch consistency", || {
        let gp = small_gp();
        let mut rng = substream(103, &["batch"]);
        let params = FlatParams::init(gp.mean_spec.clone(), &mut rng);
        let x = Matrix::from_fn(5, 1, |_, _| rng.gen_range(-5.0..5.0));
        let batch = mlp_forward(&params, &x)?;
        let mut ok = true;
        for b in 0..5 {
            let single = mlp_forward(&params, &Matrix::from_rows(&[x.row(b).to_vec()])?)?;
            ok &= batch.get(b, 0) == single.get(0, 0);
        }
        Ok((ok, "bit-exact".into()))
    }));

    results.push(check("mlp gradient vs finite differences", || {
        let spec = MlpSpec::new(1, vec![4, 4], 1).unwrap();
        let mut worst = 0.0f64;
        for seed in 0..3u64 {
            let mut rng = substream(seed, &["vfd"]);
            let params = FlatParams::init(spec.clone(), &mut rng);
            let x = Matrix::from_fn(3, 1, |_, _| rng.gen_range(-2.0..2.0));
            let upstream = Matrix::from_fn(3, 1, |_, _| rng.gen_range(-1.0..1.0));
            let grad = mlp_backward(&params, &x, &upstream)?;
            let h = 1e-5;
            for k in 0..grad.len() {
                let obj = |p: &FlatParams| -> Result<f64> {
                    let y = mlp_forward(p, &x)?;
                    Ok(y
                        .data()
                        .iter()
                        .zip(upstream.data())
                        .map(|(a, b)| a * b)
                        .sum())
                };
                let mut pp = params.clone();
                pp.values_mut()[k] += h;
                let mut pm = params.clone();
                pm.values_mut()[k] -= h;
                let fd = (obj(&pp)? - obj(&pm)?) / (2.0 * h);
                let rel = (grad[k] - fd).abs() / grad[k].abs().max(fd.abs()).max(1e-6);
                worst = worst.max(rel);
            }
        }
        Ok((worst < 1e-5, format!("worst relative error {worst:.2e}")))
    }));

    results.push(check("lml permutation invariance", || {
        let gp = small_gp();
        let mut rng = substream(104, &["lperm"]);
        let theta = ThetaPair::from_prior(&gp, 0.5, &mut rng);
        let task = random_task(104, 6);
        let l1 = log_marginal_likelihood(&theta, &task, &gp)?;
        let perm = [5usize, 2, 0, 4, 1, 3];
        let rows: Vec<Vec<f64>> = perm.iter().map(|&i| task.x.row(i).to_vec()).collect();
        let y = task.labels()?;
        let py: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        let ptask = TaskDataset::labeled(0, Matrix::from_rows(&rows)?, py)?;
        let l2 = log_marginal_likelihood(&theta, &ptask, &gp)?;
        Ok(((l1 - l2).abs() < 1e-10, format!("|delta| = {:.2e}", (l1 - l2).abs())))
    }));

    results.push(check("lml gradient vs finite differences", || {
        let gp = small_gp();
        let mut worst = 0.0f64;
        for seed in 0..3u64 {
            let mut rng = substream(seed, &["lfd"]);
            let theta = ThetaPair::from_prior(&gp, 0.3, &mut rng);
            let task = random_task(seed + 200, 5);
            let grad = log_marginal_likelihood_grad(&theta, &task, &gp)?.flat();
            let h = 1e-5;
            for k in 0..theta.dim() {
                let mut tp = theta.clone();
                let mut fp = tp.flat();
                fp[k] += h;
                tp.set_from_flat(&fp)?;
                let mut tm = theta.clone();
                let mut fm = tm.flat();
                fm[k] -= h;
                tm.set_from_flat(&fm)?;
                let fd = (log_marginal_likelihood(&tp, &task, &gp)?
                    - log_marginal_likelihood(&tm, &task, &gp)?)
                    / (2.0 * h);
                if (grad[k] - fd).abs() < 5e-8 {
                    continue;
                }
                let rel = (grad[k] - fd).abs() / grad[k].abs().max(fd.abs());
                worst = worst.max(rel);
            }
        }
        Ok((worst < 1e-4, format!("worst relative error {worst:.2e}")))
    }));

    results.push(check("gaussian entropy vs eigenvalue oracle", || {
        let (ok, worst) = entropy_vs_eigen_oracle(20, 105);
        Ok((ok, format!("worst |delta| {worst:.2e}")))
    }));

    results.push(check("single-particle svgd equals gradient ascent", || {
        let gp = small_gp();
        let data = vec![random_task(300, 4)];
        let score = PosteriorScoreConfig::default();
        let svgd = SvgdConfig {
            step_size: 1e-3,
            n_steps: 1,
            kernel: SvgdKernel::RbfMedianHeuristic,
            task_minibatch: 4,
        };
        let mut rng = substream(106, &["p1"]);
        let mut ens = ParticleEnsemble::from_prior(1, gp.clone(), 1.0, &mut rng)?;
        let mut manual = ens.particles[0].flat();
        let mut ok = true;
        for _ in 0..20 {
            let g = log_posterior_grad(&ens.particles[0], &data, &score, &gp)?.flat();
            for (m, gi) in manual.iter_mut().zip(g) {
                *m += svgd.step_size * gi;
            }
            ens = svgd_step(&ens, &data, &score, &svgd, &mut rng)?;
            ok &= ens.particles[0].flat() == manual;
        }
        Ok((ok, "bit-exact over 20 steps".into()))
    }));

    results.push(check("posterior score exchangeability", || {
        let gp = small_gp();
        let mut rng = substream(107, &["exch"]);
        let theta = ThetaPair::from_prior(&gp, 0.5, &mut rng);
        let a = random_task(301, 4);
        let b = random_task(302, 6);
        let cfg = PosteriorScoreConfig::default();
        let s1 = log_posterior_score(&theta, &[a.clone(), b.clone()], &cfg, &gp)?;
        let s2 = log_posterior_score(&theta, &[b, a], &cfg, &gp)?;
        Ok(((s1 - s2).abs() < 1e-12, format!("|delta| = {:.2e}", (s1 - s2).abs())))
    }));

    results.push(check("fit_posterior stays finite on defaults", || {
        let gp = small_gp();
        let score = PosteriorScoreConfig::default();
        let svgd = SvgdConfig {
            step_size: 5e-3,
            n_steps: 60,
            kernel: SvgdKernel::RbfMedianHeuristic,
            task_minibatch: 2,
        };
        let mut ok = true;
        for seed in 0..5u64 {
            let env = SinusoidEnvConfig::narrow(12);
            let mut pool =
                TaskPool::sample_sinusoid(&env, 3, &mut substream(seed, &["vpool"]))?;
            for id in 0..3 {
                pool.oracle_label(id)?;
            }
            let data = pool.datasets(&[0, 1, 2])?;
            let mut rng = substream(seed, &["vfit"]);
            let ens = ParticleEnsemble::from_prior(3, gp.clone(), 1.0, &mut rng)?;
            let fit = fit_posterior(ens, &data, &score, &svgd, &mut rng)?;
            ok &= fit.is_finite();
        }
        Ok((ok, "5 seeds".into()))
    }));

    results.push(check("estimator identity under a shared stream", || {
        let gp = small_gp();
        let mut rng = substream(108, &["ident"]);
        let ens = ParticleEnsemble::from_prior(4, gp, 0.5, &mut rng)?;
        let x = Matrix::from_fn(5, 1, |_, _| rng.gen_range(-5.0..5.0));
        let cfg = AcquisitionConfig {
            mc_samples: 64,
            ..Default::default()
        };
        let mut ra = substream(109, &["s"]);
        let mut rb = substream(109, &["s"]);
        let u = uncertainty_score(&ens, &x, &cfg, &mut ra)?;
        let b = bamld_score(&ens, &x, &cfg, &mut rb)?;
        let a = aleatoric_term(&ens, &x)?;
        Ok((u.score - a == b.score, "exact identity".into()))
    }));

    results.push(check("disagreement score nonnegative up to MC noise", || {
        let gp = small_gp();
        let cfg = AcquisitionConfig {
            mc_samples: 128,
            ..Default::default()
        };
        let mut ok = true;
        let mut worst = f64::INFINITY;
        for seed in 0..10u64 {
            let mut rng = substream(seed, &["nonneg"]);
            let ens = ParticleEnsemble::from_prior(3, gp.clone(), 0.5, &mut rng)?;
            let x = Matrix::from_fn(4, 1, |_, _| rng.gen_range(-5.0..5.0));
            let d = bamld_score(&ens, &x, &cfg, &mut rng)?;
            let slack = d.score + 3.0 * d.mixture.std_error;
            ok &= slack >= 0.0;
            worst = worst.min(slack);
        }
        Ok((ok, format!("min score + 3se = {worst:.3}")))
    }));

    results.push(check("aleatoric invariance under permutations", || {
        let gp = small_gp();
        let mut rng = substream(110, &["aperm"]);
        let ens = ParticleEnsemble::from_prior(3, gp, 0.5, &mut rng)?;
        let rows: Vec<Vec<f64>> = (0..4).map(|_| vec![rng.gen_range(-5.0..5.0)]).collect();
        let x = Matrix::from_rows(&rows)?;
        let a = aleatoric_term(&ens, &x)?;
        let mut permuted = ens.clone();
        permuted.particles.rotate_left(1);
        let b = aleatoric_term(&permuted, &x)?;
        let prows: Vec<Vec<f64>> = [3usize, 1, 0, 2].iter().map(|&i| rows[i].clone()).collect();
        let c = aleatoric_term(&ens, &Matrix::from_rows(&prows)?)?;
        Ok((
            (a - b).abs() < 1e-12 && (a - c).abs() < 1e-10,
            format!("|particle| {:.1e}, |rows| {:.1e}", (a - b).abs(), (a - c).abs()),
        ))
    }));

    results.push(check("argmax invariance under constant shifts", || {
        let scores: std::collections::BTreeMap<usize, f64> =
            [(3, 0.2), (5, -1.0), (11, 0.9)].into_iter().collect();
        let shifted: std::collections::BTreeMap<usize, f64> =
            scores.iter().map(|(&k, &v)| (k, v - 17.5)).collect();
        Ok((pick_best(&scores) == pick_best(&shifted), "stable".into()))
    }));

    results.push(check("oracle draw-once and relabel rejection", || {
        let env = SinusoidEnvConfig::narrow(6);
        let mut a = TaskPool::sample_sinusoid(&env, 3, &mut substream(111, &["vp"]))?;
        let mut b = TaskPool::sample_sinusoid(&env, 3, &mut substream(111, &["vp"]))?;
        let la = a.oracle_label(1)?.to_vec();
        let lb = b.oracle_label(1)?.to_vec();
        let relabel_rejected = a.oracle_label(1).is_err();
        Ok((la == lb && relabel_rejected, "identical labels, relabel rejected".into()))
    }));

    results.push(check("zero-noise pools are exact", || {
        let mut env = SinusoidEnvConfig::narrow(8);
        env.noise_var = 0.0;
        let mut pool = TaskPool::sample_sinusoid(&env, 2, &mut substream(112, &["zn"]))?;
        let params = *pool.params(0)?;
        let y = pool.oracle_label(0)?.to_vec();
        let x = pool.task(0)?.x.clone();
        let ok = y
            .iter()
            .enumerate()
            .all(|(i, &yi)| yi == params.mean_at(x.get(i, 0)));
        Ok((ok, "labels equal the mean function".into()))
    }));

    results.push(check("bo objective bound on a dense grid", || {
        let p = BoTaskParams {
            w1: 1.2,
            w2: 0.8,
            w3: 1.1,
            alpha1: -2.0,
            alpha2: 3.0,
            alpha3: -8.0,
        };
        let bound = 1.0
            + 2.0 * p.w1 / std::f64::consts::PI
            + 1.5 * p.w2 / (2.0 * std::f64::consts::PI)
            + 1.8 * p.w3 / std::f64::consts::PI;
        let mut ok = true;
        for i in 0..=4000 {
            let x = -10.0 + 20.0 * i as f64 / 4000.0;
            ok &= eval_g_bo(&p, x) <= bound + 1e-12;
        }
        Ok((ok, format!("bound {bound:.4}")))
    }));

    results.push(check("regret invariants on a vanilla BO run", || {
        let task = BoTaskParams {
            w1: 1.0,
            w2: 1.0,
            w3: 1.0,
            alpha1: -2.0,
            alpha2: 3.0,
            alpha3: -8.0,
        };
        let cfg = BoRunConfig {
            n_iterations: 8,
            candidate_grid: 50,
            ..Default::default()
        };
        let trace = vanilla_bo_baseline(&task, &cfg, &mut substream(113, &["vbo"]))?;
        let mut ok = true;
        for t in 0..trace.regret.len() {
            ok &= trace.regret[t] >= -1e-9;
            if t > 0 {
                ok &= trace.best_so_far[t] >= trace.best_so_far[t - 1];
                ok &= trace.regret[t] <= trace.regret[t - 1];
            }
        }
        Ok((ok, format!("final regret {:.4}", trace.regret.last().unwrap())))
    }));

    results.push(check("selection determinism under a fixed seed", || {
        let gp = small_gp();
        let env = SinusoidEnvConfig::narrow(8);
        let pool = TaskPool::sample_sinusoid(&env, 5, &mut substream(114, &["sp"]))?;
        let ens = ParticleEnsemble::from_prior(3, gp, 1.0, &mut substream(114, &["se"]))?;
        let cfg = AcquisitionConfig {
            mc_samples: 32,
            ..Default::default()
        };
        let run = || -> Result<usize> {
            let tasks = pool.unlabeled_tasks();
            let report = crate::acquisition::select_task(
                &tasks,
                &[],
                &ens,
                crate::acquisition::Method::Bamld,
                &cfg,
                &mut substream(115, &["sel"]),
            )?;
            Ok(report.chosen)
        };
        Ok((run()? == run()?, "identical choices".into()))
    }));

    results.push(check("marginal entropy positive at sane scales", || {
        let gp = small_gp();
        let mut rng = substream(116, &["ent"]);
        let theta = ThetaPair::from_prior(&gp, 0.5, &mut rng);
        let x = Matrix::from_fn(3, 1, |_, _| rng.gen_range(-5.0..5.0));
        let pred = marginal_gaussian(&theta, &x, &gp)?;
        Ok((gaussian_entropy(&pred) > 0.0, "positive".into()))
    }));

    results
}

/// Prints one line per check; returns true when every check passed.
pub fn run_and_print() -> bool {
    let results = run_all();
    let mut all = true;
    for r in &results {
        println!(
            "{} {} ({})",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
        all &= r.pass;
    }
    println!(
        "{}/{} property checks passed",
        results.iter().filter(|r| r.pass).count(),
        results.len()
    );
    all
}

#[cfg(test)]
mod tests {
    #[test]
    fn property_suite_passes() {
        let results = super::run_all();
        for r in &results {
            assert!(r.pass, "{} failed: {}", r.name, r.detail);
        }
    }
}
