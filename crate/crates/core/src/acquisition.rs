//! Scoring of candidate unlabeled tasks.
//!
//! The disagreement score is the mutual information between a candidate's
//! labels and the hyperparameter, estimated as the difference of two
//! entropies under the particle ensemble:
//!
//! * the entropy of the equal-weight Gaussian mixture over particles
//!   (Monte Carlo, with a reported standard error), and
//! * the particle average of the per-component Gaussian entropies.
//!
//! The predictive-uncertainty baseline keeps only the first term, so when
//! both are computed from the same sample stream the identity
//! `uncertainty - aleatoric = disagreement` holds exactly. The diversity
//! baseline is max-min distance over covariate-mean representations, and
//! the uniform baseline draws a candidate under the run seed.

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::gp::{
    gaussian_entropy, gaussian_log_density, marginal_gaussian, sample_gaussian, GpPredictive,
    TaskDataset,
};
use crate::posterior::ParticleEnsemble;
use crate::rng::{substream, RunRng};
use crate::tensor::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Bamld,
    Uncertainty,
    Diversity,
    Uniform,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Bamld => "bamld",
            Method::Uncertainty => "uncertainty",
            Method::Diversity => "diversity",
            Method::Uniform => "uniform",
        }
    }

    pub fn parse(s: &str) -> Result<Method> {
        match s {
            "bamld" => Ok(Method::Bamld),
            "uncertainty" => Ok(Method::Uncertainty),
            "diversity" => Ok(Method::Diversity),
            "uniform" => Ok(Method::Uniform),
            other => Err(Error::config(format!(
                "methods: unknown acquisition method '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiversitySeedRule {
    RandomFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    LowestTaskId,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionConfig {
    /// Covariate subset size per candidate; `None` uses all rows.
    pub subset_size: Option<usize>,
    /// Monte Carlo samples for the mixture-entropy estimate.
    pub mc_samples: usize,
    pub diversity_seed_rule: DiversitySeedRule,
    pub tie_break: TieBreak,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        AcquisitionConfig {
            subset_size: None,
            mc_samples: 512,
            diversity_seed_rule: DiversitySeedRule::RandomFirst,
            tie_break: TieBreak::LowestTaskId,
        }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mc_samples == 0 {
            return Err(Error::config("mc_samples: must be >= 1"));
        }
        Ok(())
    }
}

/// Entropy estimates behind a candidate's score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermBreakdown {
    pub total_entropy_estimate: f64,
    pub aleatoric_estimate: f64,
    pub mc_std_error: f64,
}

/// Outcome of one selection round.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AcquisitionReport {
    pub method: Method,
    pub scores: BTreeMap<usize, f64>,
    pub chosen: usize,
    pub mc_samples_used: usize,
    pub term_breakdown: BTreeMap<usize, TermBreakdown>,
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureEntropyEstimate {
    pub value: f64,
    pub std_error: f64,
}

fn particle_predictives(
    ensemble: &ParticleEnsemble,
    x_tilde: &Matrix,
) -> Result<Vec<GpPredictive>> {
    ensemble
        .particles
        .iter()
        .map(|theta| marginal_gaussian(theta, x_tilde, &ensemble.gp_config))
        .collect()
}

/// Particle average of the per-component Gaussian entropies: the estimate
/// of the aleatoric term H(Y | X, theta).
pub fn aleatoric_term(ensemble: &ParticleEnsemble, x_tilde: &Matrix) -> Result<f64> {
    let preds = particle_predictives(ensemble, x_tilde)?;
    Ok(preds.iter().map(gaussian_entropy).sum::<f64>() / preds.len() as f64)
}

fn logsumexp(values: &[f64]) -> f64 {
    let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn mixture_entropy_from_predictives<R: Rng + ?Sized>(
    preds: &[GpPredictive],
    mc_samples: usize,
    rng: &mut R,
) -> Result<MixtureEntropyEstimate> {
    let p = preds.len();
    let ln_p = (p as f64).ln();
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for s in 0..mc_samples {
        let comp = rng.gen_range(0..p);
        let y = sample_gaussian(&preds[comp], rng);
        let logs: Vec<f64> = preds
            .iter()
            .map(|pred| gaussian_log_density(pred, &y))
            .collect::<Result<_>>()?;
        let val = -(logsumexp(&logs) - ln_p);
        // Welford accumulation
        let delta = val - mean;
        mean += delta / (s + 1) as f64;
        m2 += delta * (val - mean);
    }
    let std_error = if mc_samples > 1 {
        (m2 / (mc_samples - 1) as f64 / mc_samples as f64).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(MixtureEntropyEstimate {
        value: mean,
        std_error,
    })
}

/// Monte Carlo estimate of the entropy of the equal-weight particle
/// mixture at `x_tilde`: sample a component uniformly, sample a label
/// vector from it, average `-log` of the mixture density via log-sum-exp.
pub fn mixture_entropy<R: Rng + ?Sized>(
    ensemble: &ParticleEnsemble,
    x_tilde: &Matrix,
    mc_samples: usize,
    rng: &mut R,
) -> Result<MixtureEntropyEstimate> {
    if mc_samples == 0 {
        return Err(Error::config("mc_samples: must be >= 1"));
    }
    let preds = particle_predictives(ensemble, x_tilde)?;
    mixture_entropy_from_predictives(&preds, mc_samples, rng)
}

/// Both entropy terms from one shared sample stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreDetail {
    pub score: f64,
    pub mixture: MixtureEntropyEstimate,
    pub aleatoric: f64,
}

fn entropy_components<R: Rng + ?Sized>(
    ensemble: &ParticleEnsemble,
    x_tilde: &Matrix,
    mc_samples: usize,
    rng: &mut R,
) -> Result<(MixtureEntropyEstimate, f64)> {
    let preds = particle_predictives(ensemble, x_tilde)?;
    let mixture = mixture_entropy_from_predictives(&preds, mc_samples, rng)?;
    let aleatoric = preds.iter().map(gaussian_entropy).sum::<f64>() / preds.len() as f64;
    Ok((mixture, aleatoric))
}

/// Disagreement score: mixture entropy minus aleatoric term.
pub fn bamld_score<R: Rng + ?Sized>(
    ensemble: &ParticleEnsemble,
    x_tilde: &Matrix,
    cfg: &AcquisitionConfig,
    rng: &mut R,
) -> Result<ScoreDetail> {
    let (mixture, aleatoric) = entropy_components(ensemble, x_tilde, cfg.mc_samples, rng)?;
    Ok(ScoreDetail {
        score: mixture.value - aleatoric,
        mixture,
        aleatoric,
    })
}

/// Predictive-uncertainty baseline: the mixture entropy alone.
pub fn uncertainty_score<R: Rng + ?Sized>(
    ensemble: &ParticleEnsemble,
    x_tilde: &Matrix,
    cfg: &AcquisitionConfig,
    rng: &mut R,
) -> Result<ScoreDetail> {
    let (mixture, aleatoric) = entropy_components(ensemble, x_tilde, cfg.mc_samples, rng)?;
    Ok(ScoreDetail {
        score: mixture.value,
        mixture,
        aleatoric,
    })
}

fn representation(task: &TaskDataset) -> Vec<f64> {
    task.x.column_means()
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Max-min diversity over covariate-mean representations: each candidate's
/// score is its distance to the nearest already-selected task. An empty
/// selected set yields equal scores.
pub fn diversity_scores(
    pool: &[&TaskDataset],
    selected: &[&TaskDataset],
) -> BTreeMap<usize, f64> {
    let sel_reps: Vec<Vec<f64>> = selected.iter().map(|t| representation(t)).collect();
    pool.iter()
        .map(|task| {
            let rep = representation(task);
            let score = sel_reps
                .iter()
                .map(|s| euclidean(&rep, s))
                .fold(f64::INFINITY, f64::min);
            let score = if score.is_finite() { score } else { 0.0 };
            (task.task_id, score)
        })
        .collect()
}

/// Arg max with lowest-task-id tie-break over (task_id, score) pairs.
pub fn pick_best(scores: &BTreeMap<usize, f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (&id, &s) in scores {
        match best {
            None => best = Some((id, s)),
            Some((_, bs)) if s > bs => best = Some((id, s)),
            _ => {}
        }
    }
    best.map(|(id, _)| id)
}

/// Scores every pool task with the requested method and returns the chosen
/// task. Candidate scoring owns an independent substream per task, so the
/// pool may be scored in parallel without perturbing determinism.
pub fn select_task(
    pool: &[&TaskDataset],
    selected: &[&TaskDataset],
    ensemble: &ParticleEnsemble,
    method: Method,
    cfg: &AcquisitionConfig,
    rng: &mut RunRng,
) -> Result<AcquisitionReport> {
    cfg.validate()?;
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let selected_ids: std::collections::BTreeSet<usize> =
        selected.iter().map(|t| t.task_id).collect();
    if pool.iter().any(|t| selected_ids.contains(&t.task_id)) {
        return Err(Error::config("pool and selected sets overlap"));
    }

    match method {
        Method::Uniform => {
            let idx = rng.gen_range(0..pool.len());
            let scores: BTreeMap<usize, f64> = pool.iter().map(|t| (t.task_id, 0.0)).collect();
            Ok(AcquisitionReport {
                method,
                chosen: pool[idx].task_id,
                scores,
                mc_samples_used: 0,
                term_breakdown: BTreeMap::new(),
            })
        }
        Method::Diversity => {
            let scores = diversity_scores(pool, selected);
            let chosen = if selected.is_empty() {
                // random_first rule: all scores tie, draw under the run seed
                pool[rng.gen_range(0..pool.len())].task_id
            } else {
                pick_best(&scores).expect("non-empty pool")
            };
            Ok(AcquisitionReport {
                method,
                chosen,
                scores,
                mc_samples_used: 0,
                term_breakdown: BTreeMap::new(),
            })
        }
        Method::Bamld | Method::Uncertainty => {
            let base = rng.next_u64();
            let scored: Vec<(usize, ScoreDetail)> = pool
                .par_iter()
                .map(|task| -> Result<(usize, ScoreDetail)> {
                    let x_tilde = subset_rows(task, cfg.subset_size, base)?;
                    let mut task_rng =
                        substream(base, &["score-task", &task.task_id.to_string()]);
                    let detail = match method {
                        Method::Bamld => bamld_score(ensemble, &x_tilde, cfg, &mut task_rng)?,
                        _ => uncertainty_score(ensemble, &x_tilde, cfg, &mut task_rng)?,
                    };
                    Ok((task.task_id, detail))
                })
                .collect::<Result<_>>()?;

            let scores: BTreeMap<usize, f64> =
                scored.iter().map(|(id, d)| (*id, d.score)).collect();
            let term_breakdown: BTreeMap<usize, TermBreakdown> = scored
                .iter()
                .map(|(id, d)| {
                    (
                        *id,
                        TermBreakdown {
                            total_entropy_estimate: d.mixture.value,
                            aleatoric_estimate: d.aleatoric,
                            mc_std_error: d.mixture.std_error,
                        },
                    )
                })
                .collect();
            Ok(AcquisitionReport {
                method,
                chosen: pick_best(&scores).expect("non-empty pool"),
                scores,
                mc_samples_used: cfg.mc_samples,
                term_breakdown,
            })
        }
    }
}

/// The covariate batch a candidate is scored on. A subset smaller than the
/// task is drawn once per round from the round's substream; requesting at
/// least every row uses the full set and consumes no randomness.
fn subset_rows(task: &TaskDataset, subset_size: Option<usize>, base: u64) -> Result<Matrix> {
    let n = task.n();
    let m = match subset_size {
        Some(m) if m < n => m,
        _ => return Ok(task.x.clone()),
    };
    if m == 0 {
        return Err(Error::config("subset_size: must be >= 1"));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = substream(base, &["subset", &task.task_id.to_string()]);
    // partial Fisher-Yates: the first m entries are a uniform subset
    for i in 0..m {
        let j = rng.gen_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(m);
    idx.sort_unstable();
    let rows: Vec<Vec<f64>> = idx.iter().map(|&i| task.x.row(i).to_vec()).collect();
    Matrix::from_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{GpConfig, ThetaPair};
    use crate::posterior::ParticleEnsemble;
    use crate::rng::substream;
    use crate::tensor::MlpSpec;
    use rand::Rng;

    fn cfg_with_noise(noise: f64) -> GpConfig {
        GpConfig::new(
            noise,
            MlpSpec::new(1, vec![3], 1).unwrap(),
            MlpSpec::new(1, vec![3], 2).unwrap(),
        )
        .unwrap()
    }

    /// Ensemble whose particles are zero nets except for the mean-output
    /// bias, giving exactly the requested predictive means.
    fn biased_ensemble(biases: &[f64], noise: f64) -> ParticleEnsemble {
        let gp = cfg_with_noise(noise);
        let particles = biases
            .iter()
            .map(|&b| {
                let mut theta = ThetaPair::zeros(&gp);
                let n = theta.mean.len();
                theta.mean.values_mut()[n - 1] = b;
                theta
            })
            .collect();
        ParticleEnsemble {
            particles,
            gp_config: gp,
        }
    }

    fn random_ensemble(p: usize, seed: u64) -> ParticleEnsemble {
        let gp = cfg_with_noise(0.12);
        let mut rng = substream(seed, &["ens"]);
        ParticleEnsemble::from_prior(p, gp, 0.5, &mut rng).unwrap()
    }

    #[test]
    fn aleatoric_scalar_unit_variance() {
        // zero nets, sigma^2 = 0.5: total variance 1/2 + 1/2 = 1
        let ens = biased_ensemble(&[0.0], 0.5);
        let x = Matrix::column(&[0.3]);
        let h = aleatoric_term(&ens, &x).unwrap();
        assert!((h - 1.41894).abs() < 1e-5);
    }

    #[test]
    fn aleatoric_is_particle_mean() {
        let ens = random_ensemble(3, 40);
        let mut rng = substream(41, &["x"]);
        let x = Matrix::from_fn(4, 1, |_, _| rng.gen_range(-5.0..5.0));
        let got = aleatoric_term(&ens, &x).unwrap();
        let mut want = 0.0;
        for theta in &ens.particles {
            let pred = marginal_gaussian(theta, &x, &ens.gp_config).unwrap();
            want += gaussian_entropy(&pred) / 3.0;
        }
        assert!((got - want).abs() < 1e-12);

        // identical particles equal the single-particle value
        let dup = ParticleEnsemble {
            particles: vec![ens.particles[0].clone(); 3],
            gp_config: ens.gp_config.clone(),
        };
        let single = ParticleEnsemble {
            particles: vec![ens.particles[0].clone()],
            gp_config: ens.gp_config.clone(),
        };
        assert!(
            (aleatoric_term(&dup, &x).unwrap() - aleatoric_term(&single, &x).unwrap()).abs()
                < 1e-12
        );
    }

    #[test]
    fn aleatoric_invariant_under_permutations() {
        let ens = random_ensemble(3, 42);
        let mut rng = substream(43, &["xp"]);
        let rows: Vec<Vec<f64>> = (0..4).map(|_| vec![rng.gen_range(-5.0..5.0)]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let a = aleatoric_term(&ens, &x).unwrap();

        let mut permuted = ens.clone();
        permuted.particles.rotate_left(1);
        assert!((aleatoric_term(&permuted, &x).unwrap() - a).abs() < 1e-12);

        let xrows: Vec<Vec<f64>> = [2usize, 0, 3, 1].iter().map(|&i| rows[i].clone()).collect();
        let xp = Matrix::from_rows(&xrows).unwrap();
        assert!((aleatoric_term(&ens, &xp).unwrap() - a).abs() < 1e-10);
    }

    #[test]
    fn mixture_entropy_single_component_matches_closed_form() {
        let ens = biased_ensemble(&[0.0], 0.5);
        let x = Matrix::column(&[0.0]);
        let mut rng = substream(44, &["mc"]);
        let est = mixture_entropy(&ens, &x, 4096, &mut rng).unwrap();
        let closed = 1.4189385332046727;
        assert!(
            (est.value - closed).abs() < 3.0 * est.std_error,
            "estimate {} +- {} vs {closed}",
            est.value,
            est.std_error
        );
    }

    #[test]
    fn mixture_entropy_identical_components_equal_single() {
        let ens_dup = biased_ensemble(&[1.0, 1.0], 0.5);
        let ens_single = biased_ensemble(&[1.0], 0.5);
        let x = Matrix::column(&[0.0]);
        let mut r1 = substream(45, &["a"]);
        let mut r2 = substream(45, &["a"]);
        let a = mixture_entropy(&ens_dup, &x, 2048, &mut r1).unwrap();
        let b = mixture_entropy(&ens_single, &x, 2048, &mut r2).unwrap();
        assert!((a.value - b.value).abs() < 3.0 * (a.std_error + b.std_error));
    }

    #[test]
    fn mixture_entropy_far_separated_components() {
        // N(0,1) and N(10,1): entropy tends to the single-component value
        // plus ln 2
        let ens = biased_ensemble(&[0.0, 10.0], 0.5);
        let x = Matrix::column(&[0.0]);
        let mut rng = substream(46, &["sep"]);
        let est = mixture_entropy(&ens, &x, 4096, &mut rng).unwrap();
        let want = 1.4189385332046727 + 2.0f64.ln();
        assert!(
            (est.value - want).abs() < 3.0 * est.std_error,
            "estimate {} +- {} vs {want}",
            est.value,
            est.std_error
        );
    }

    #[test]
    fn bamld_is_zero_for_single_or_identical_particles() {
        let x = Matrix::column(&[0.4]);
        let cfg = AcquisitionConfig {
            mc_samples: 2048,
            ..Default::default()
        };
        let single = biased_ensemble(&[2.0], 0.5);
        let mut rng = substream(47, &["b1"]);
        let d = bamld_score(&single, &x, &cfg, &mut rng).unwrap();
        assert!(d.score.abs() < 3.0 * d.mixture.std_error);

        let dup = biased_ensemble(&[2.0, 2.0, 2.0], 0.5);
        let mut rng = substream(48, &["b2"]);
        let d = bamld_score(&dup, &x, &cfg, &mut rng).unwrap();
        assert!(d.score.abs() < 3.0 * d.mixture.std_error);
    }

    #[test]
    fn bamld_separated_components_approach_ln2() {
        let ens = biased_ensemble(&[0.0, 10.0], 0.5);
        let x = Matrix::column(&[0.0]);
        let cfg = AcquisitionConfig {
            mc_samples: 4096,
            ..Default::default()
        };
        let mut rng = substream(49, &["ln2"]);
        let d = bamld_score(&ens, &x, &cfg, &mut rng).unwrap();
        let want = 2.0f64.ln();
        assert!(
            (d.score - want).abs() < 3.0 * d.mixture.std_error,
            "score {} +- {}",
            d.score,
            d.mixture.std_error
        );
    }

    #[test]
    fn estimator_identity_is_exact_under_shared_stream() {
        let ens = random_ensemble(4, 50);
        let mut rng = substream(51, &["id-x"]);
        let x = Matrix::from_fn(5, 1, |_, _| rng.gen_range(-5.0..5.0));
        let cfg = AcquisitionConfig {
            mc_samples: 64,
            ..Default::default()
        };
        let mut ra = substream(52, &["stream"]);
        let mut rb = substream(52, &["stream"]);
        let u = uncertainty_score(&ens, &x, &cfg, &mut ra).unwrap();
        let b = bamld_score(&ens, &x, &cfg, &mut rb).unwrap();
        let a = aleatoric_term(&ens, &x).unwrap();
        assert_eq!(u.score - a, b.score);
        assert!(b.score >= -3.0 * b.mixture.std_error);
    }

    #[test]
    fn diversity_hand_enumeration() {
        let mk = |id: usize, v: f64| {
            TaskDataset::unlabeled(id, Matrix::column(&[v, v])).unwrap()
        };
        let t0 = mk(0, 0.0);
        let t1 = mk(1, 1.0);
        let t3 = mk(3, 3.0);

        // empty selected set: all scores equal
        let scores = diversity_scores(&[&t1, &t3], &[]);
        assert_eq!(scores[&1], scores[&3]);

        // identical representation scores zero
        let twin = mk(9, 0.0);
        let scores = diversity_scores(&[&twin], &[&t0]);
        assert_eq!(scores[&9], 0.0);

        // representations 0, 1, 3 with 0 selected: scores 1 and 3, pick 3
        let scores = diversity_scores(&[&t1, &t3], &[&t0]);
        assert!((scores[&1] - 1.0).abs() < 1e-15);
        assert!((scores[&3] - 3.0).abs() < 1e-15);
        assert_eq!(pick_best(&scores), Some(3));
    }

    #[test]
    fn tie_break_picks_lowest_task_id() {
        let scores: BTreeMap<usize, f64> =
            [(4, 2.0), (7, 5.0), (9, 5.0)].into_iter().collect();
        assert_eq!(pick_best(&scores), Some(7));
    }

    #[test]
    fn constant_shift_leaves_choice_unchanged() {
        let scores: BTreeMap<usize, f64> =
            [(1, 0.3), (2, -0.7), (5, 1.9)].into_iter().collect();
        let shifted: BTreeMap<usize, f64> =
            scores.iter().map(|(&k, &v)| (k, v + 123.45)).collect();
        assert_eq!(pick_best(&scores), pick_best(&shifted));
    }

    #[test]
    fn single_task_pool_is_always_chosen() {
        let ens = random_ensemble(2, 53);
        let task = TaskDataset::unlabeled(7, Matrix::column(&[0.1, 0.7, -0.5])).unwrap();
        let cfg = AcquisitionConfig {
            mc_samples: 16,
            ..Default::default()
        };
        for method in [
            Method::Bamld,
            Method::Uncertainty,
            Method::Diversity,
            Method::Uniform,
        ] {
            let mut rng = substream(54, &["sel", method.name()]);
            let report = select_task(&[&task], &[], &ens, method, &cfg, &mut rng).unwrap();
            assert_eq!(report.chosen, 7);
        }
    }

    #[test]
    fn empty_pool_is_an_error() {
        let ens = random_ensemble(2, 55);
        let cfg = AcquisitionConfig::default();
        let mut rng = substream(56, &["empty"]);
        assert!(matches!(
            select_task(&[], &[], &ens, Method::Uniform, &cfg, &mut rng),
            Err(Error::EmptyPool)
        ));
    }

    #[test]
    fn identical_particles_reduce_to_tie_break_determinism() {
        let ens = biased_ensemble(&[1.5, 1.5], 0.5);
        let t1 = TaskDataset::unlabeled(1, Matrix::column(&[0.0, 1.0])).unwrap();
        let t2 = TaskDataset::unlabeled(2, Matrix::column(&[0.5, 1.5])).unwrap();
        let cfg = AcquisitionConfig {
            mc_samples: 32,
            ..Default::default()
        };
        let run = |seed: u64| {
            let mut rng = substream(seed, &["det"]);
            select_task(&[&t1, &t2], &[], &ens, Method::Bamld, &cfg, &mut rng)
                .unwrap()
                .chosen
        };
        assert_eq!(run(77), run(77));
    }

    #[test]
    fn full_subset_ignores_subset_seed() {
        let ens = random_ensemble(2, 57);
        let task = TaskDataset::unlabeled(3, Matrix::column(&[0.0, 1.0, 2.0])).unwrap();
        let cfg_full = AcquisitionConfig {
            subset_size: Some(3),
            mc_samples: 64,
            ..Default::default()
        };
        let cfg_none = AcquisitionConfig {
            subset_size: None,
            mc_samples: 64,
            ..Default::default()
        };
        let mut ra = substream(58, &["s"]);
        let mut rb = substream(58, &["s"]);
        let a = select_task(&[&task], &[], &ens, Method::Bamld, &cfg_full, &mut ra).unwrap();
        let b = select_task(&[&task], &[], &ens, Method::Bamld, &cfg_none, &mut rb).unwrap();
        assert_eq!(a.scores[&3], b.scores[&3]);
    }

    proptest::proptest! {
        #[test]
        fn prop_shift_invariance(shift in -100.0f64..100.0, vals in proptest::collection::vec(-10.0f64..10.0, 1..8)) {
            let scores: BTreeMap<usize, f64> = vals.iter().cloned().enumerate().collect();
            let shifted: BTreeMap<usize, f64> = scores.iter().map(|(&k, &v)| (k, v + shift)).collect();
            proptest::prop_assert_eq!(pick_best(&scores), pick_best(&shifted));
        }
    }
}
