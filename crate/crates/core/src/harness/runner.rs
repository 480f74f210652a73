//! Experiment orchestration: seeds x methods as a work queue, substreams
//! per component, canonical sorting of all outputs.
//!
//! Every output byte is determined by (config, seed list): pools, test
//! sets, and loops draw from substreams tagged by seed and role, rows are
//! sorted before writing, and no timestamps enter the data files.

use rayon::prelude::*;
use serde::Serialize;
use std::path::{Path, PathBuf};

use crate::acquisition::{AcquisitionConfig, Method};
use crate::active_loop::{rmse_curve, run_active_loop, ActiveLoopConfig, RoundRecord};
use crate::bayes_opt::{run_bo, vanilla_bo_baseline, BoRunConfig, BoTrace, Surrogate};
use crate::envs::{
    sample_bo_task, sample_cluster_test_tasks, sample_sinusoid_test_tasks, BoEnvConfig,
    ClusterEnvConfig, SinusoidEnvConfig, TaskPool,
};
use crate::error::{Error, Result};
use crate::gp::GpConfig;
use crate::harness::config::{Experiment, ExperimentConfig};
use crate::harness::csv::{write_csv, ResultRow};
use crate::harness::plot::{render_svg, FigureKind};
use crate::harness::verify;
use crate::posterior::{fit_posterior, ParticleEnsemble, PosteriorScoreConfig, SvgdConfig, SvgdKernel};
use crate::rng::substream;
use crate::tensor::MlpSpec;

/// Files written by a run.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub csv_path: Option<PathBuf>,
    pub plot_path: Option<PathBuf>,
    pub reports_path: Option<PathBuf>,
    pub config_path: PathBuf,
    /// `Some(false)` when the property suite ran and failed.
    pub property_suite_passed: Option<bool>,
}

fn gp_config(cfg: &ExperimentConfig, noise_variance: f64) -> Result<GpConfig> {
    GpConfig::new(
        noise_variance,
        MlpSpec::new(1, cfg.net_hidden.clone(), 1)?,
        MlpSpec::new(1, cfg.net_hidden.clone(), cfg.feature_dim)?,
    )
}

fn svgd_config(cfg: &ExperimentConfig) -> SvgdConfig {
    SvgdConfig {
        step_size: cfg.svgd_step_size,
        n_steps: cfg.svgd_steps,
        kernel: SvgdKernel::RbfMedianHeuristic,
        task_minibatch: cfg.svgd_task_minibatch,
    }
}

fn score_config(cfg: &ExperimentConfig) -> PosteriorScoreConfig {
    PosteriorScoreConfig {
        prior_variance: cfg.prior_variance,
        gamma: cfg.gamma,
        per_task_normalize: cfg.per_task_normalize,
    }
}

fn acq_config(cfg: &ExperimentConfig) -> AcquisitionConfig {
    AcquisitionConfig {
        subset_size: cfg.subset_size,
        mc_samples: cfg.mc_samples,
        ..Default::default()
    }
}

fn loop_config(cfg: &ExperimentConfig, method: Method, noise_variance: f64) -> Result<ActiveLoopConfig> {
    Ok(ActiveLoopConfig {
        method,
        budget: cfg.budget,
        particles: cfg.particles,
        warm_start: cfg.warm_start,
        refit_steps: cfg.refit_steps,
        gp: gp_config(cfg, noise_variance)?,
        svgd: svgd_config(cfg),
        score: score_config(cfg),
        acquisition: acq_config(cfg),
    })
}

fn bo_run_config(cfg: &ExperimentConfig) -> BoRunConfig {
    BoRunConfig {
        n_iterations: cfg.bo_iterations,
        candidate_grid: cfg.bo_candidate_grid,
        ucb_beta: cfg.ucb_beta,
        surrogate_update_steps: cfg.bo_update_steps,
        observation_noise_var: cfg.bo_noise_variance,
    }
}

#[derive(Serialize)]
struct ReportLine<'a> {
    experiment: &'a str,
    seed: u64,
    method: &'a str,
    round: usize,
    chosen: usize,
    scores: &'a std::collections::BTreeMap<usize, f64>,
    mc_samples_used: usize,
    rmse: Option<f64>,
}

fn report_lines(
    experiment: &str,
    seed: u64,
    method: &str,
    history: &[RoundRecord],
) -> Result<Vec<(String, String)>> {
    history
        .iter()
        .map(|rec| {
            let line = serde_json::to_string(&ReportLine {
                experiment,
                seed,
                method,
                round: rec.round,
                chosen: rec.report.chosen,
                scores: &rec.report.scores,
                mc_samples_used: rec.report.mc_samples_used,
                rmse: rec.rmse,
            })?;
            let key = format!("{experiment}|{method}|{seed:020}|{:06}", rec.round);
            Ok((key, line))
        })
        .collect()
}

struct JobOutput {
    rows: Vec<ResultRow>,
    reports: Vec<(String, String)>,
}

fn sinusoid_env(cfg: &ExperimentConfig, experiment: Experiment) -> SinusoidEnvConfig {
    match experiment {
        Experiment::RmseFig3 => SinusoidEnvConfig::wide(cfg.samples_per_task),
        _ => SinusoidEnvConfig::narrow(cfg.samples_per_task),
    }
}

fn rmse_job(cfg: &ExperimentConfig, seed: u64, method: Method) -> Result<JobOutput> {
    let experiment = cfg.experiment.name();
    let env = sinusoid_env(cfg, cfg.experiment);
    let mut pool = TaskPool::sample_sinusoid(&env, cfg.pool_size, &mut substream(seed, &["pool"]))?;
    let tests = sample_sinusoid_test_tasks(
        &env,
        cfg.n_test_tasks,
        cfg.n_adapt,
        cfg.n_eval,
        &mut substream(seed, &["meta-test"]),
    )?;
    let loop_cfg = loop_config(cfg, method, cfg.noise_variance)?;
    let mut rng = substream(seed, &["loop", method.name()]);
    let (state, curve) = rmse_curve(&mut pool, &loop_cfg, &tests, &mut rng)?;

    let rows = curve
        .iter()
        .map(|&(round, rmse)| ResultRow::new(experiment, seed, method.name(), round, "rmse", rmse))
        .collect();
    Ok(JobOutput {
        rows,
        reports: report_lines(experiment, seed, method.name(), &state.history)?,
    })
}

fn cluster_job(cfg: &ExperimentConfig, seed: u64, method: Method, c: usize) -> Result<JobOutput> {
    let experiment = cfg.experiment.name();
    let env = ClusterEnvConfig {
        n_clusters: c,
        base: SinusoidEnvConfig::narrow(cfg.samples_per_task),
        pool_size: cfg.pool_size,
    };
    let ctag = format!("c{c}");
    let mut pool = TaskPool::sample_cluster(&env, &mut substream(seed, &["pool", &ctag]))?;
    let tests = sample_cluster_test_tasks(
        &env,
        cfg.n_test_tasks,
        cfg.n_adapt,
        cfg.n_eval,
        &mut substream(seed, &["meta-test", &ctag]),
    )?;
    let loop_cfg = loop_config(cfg, method, cfg.noise_variance)?;
    let mut rng = substream(seed, &["loop", method.name(), &ctag]);
    let (state, curve) = rmse_curve(&mut pool, &loop_cfg, &tests, &mut rng)?;

    let final_rmse = curve.last().expect("budget >= 1").1;
    let rows = vec![ResultRow::new(
        experiment,
        seed,
        method.name(),
        c,
        "rmse_at_budget",
        final_rmse,
    )];
    let mtag = format!("{}@c{c}", method.name());
    Ok(JobOutput {
        rows,
        reports: report_lines(experiment, seed, &mtag, &state.history)?,
    })
}

fn trace_rows(experiment: &str, seed: u64, scheme: &str, trace: &BoTrace) -> Vec<ResultRow> {
    let mut rows = Vec::with_capacity(trace.queries.len() * 4);
    for (t, q) in trace.queries.iter().enumerate() {
        let step = t + 1;
        rows.push(ResultRow::new(experiment, seed, scheme, step, "x", q.0));
        rows.push(ResultRow::new(experiment, seed, scheme, step, "y", q.1));
        rows.push(ResultRow::new(
            experiment,
            seed,
            scheme,
            step,
            "best_so_far",
            trace.best_so_far[t],
        ));
        rows.push(ResultRow::new(
            experiment,
            seed,
            scheme,
            step,
            "regret",
            trace.regret[t],
        ));
    }
    rows
}

fn bo_job(cfg: &ExperimentConfig, seed: u64) -> Result<JobOutput> {
    let experiment = cfg.experiment.name();
    let env = BoEnvConfig {
        n_samples: cfg.samples_per_task,
        noise_var: cfg.bo_noise_variance,
        ..Default::default()
    };
    let pool = TaskPool::sample_bo(&env, cfg.pool_size, &mut substream(seed, &["pool"]))?;
    let task = sample_bo_task(&mut substream(seed, &["bo-task"]));
    let bo_cfg = bo_run_config(cfg);
    let mut svgd = svgd_config(cfg);
    svgd.step_size = cfg.bo_svgd_step_size;
    let mut score = score_config(cfg);
    score.gamma = cfg.bo_gamma;

    let mut rows = Vec::new();
    let mut reports = Vec::new();

    // vanilla: fixed prior, no meta-training
    let trace = vanilla_bo_baseline(&task, &bo_cfg, &mut substream(seed, &["bo", "vanilla"]))?;
    rows.extend(trace_rows(experiment, seed, "vanilla_bo", &trace));

    // meta-trained surrogate after active selection of `budget` tasks
    {
        let mut pool = pool.clone();
        let mut loop_cfg = loop_config(cfg, Method::Bamld, cfg.bo_noise_variance)?;
        loop_cfg.svgd.step_size = cfg.bo_svgd_step_size;
        loop_cfg.score.gamma = cfg.bo_gamma;
        let mut rng = substream(seed, &["loop", "bamld"]);
        let state = run_active_loop(&mut pool, &loop_cfg, &mut rng)?;
        reports.extend(report_lines(experiment, seed, "bamld_meta_bo", &state.history)?);
        let surrogate = Surrogate::Ensemble {
            ensemble: state.ensemble,
            svgd,
            score,
        };
        let trace = run_bo(
            &task,
            surrogate,
            &bo_cfg,
            &mut substream(seed, &["bo", "bamld_meta"]),
        )?;
        rows.extend(trace_rows(experiment, seed, "bamld_meta_bo", &trace));
    }

    // ideal surrogate meta-trained on the full pool, with the same total
    // step budget the active pipeline spends across its refits
    {
        let mut pool = pool;
        let all_ids: Vec<usize> = (0..pool.len()).collect();
        for &id in &all_ids {
            pool.oracle_label(id)?;
        }
        let data = pool.datasets(&all_ids)?;
        let gp = gp_config(cfg, cfg.bo_noise_variance)?;
        let mut rng = substream(seed, &["fit-all"]);
        let init = ParticleEnsemble::from_prior(cfg.particles, gp, cfg.prior_variance, &mut rng)?;
        let refit = cfg.refit_steps.unwrap_or(cfg.svgd_steps / 4);
        let total_steps = cfg.svgd_steps + cfg.budget.saturating_sub(1) * refit;
        let ensemble = fit_posterior(init, &data, &score, &svgd.with_steps(total_steps), &mut rng)?;
        let surrogate = Surrogate::Ensemble {
            ensemble,
            svgd,
            score,
        };
        let trace = run_bo(
            &task,
            surrogate,
            &bo_cfg,
            &mut substream(seed, &["bo", "full_meta"]),
        )?;
        rows.extend(trace_rows(experiment, seed, "full_meta_bo", &trace));
    }

    Ok(JobOutput { rows, reports })
}

fn run_jobs<J, F>(jobs: Vec<J>, workers: Option<usize>, f: F) -> Result<Vec<JobOutput>>
where
    J: Send + Sync,
    F: Fn(&J) -> Result<JobOutput> + Send + Sync,
{
    let run = || jobs.par_iter().map(&f).collect::<Result<Vec<_>>>();
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config(format!("workers: {e}")))?
            .install(run),
        None => run(),
    }
}

fn figure_kind(experiment: Experiment) -> Option<FigureKind> {
    match experiment {
        Experiment::RmseFig2 | Experiment::RmseFig3 => Some(FigureKind::Rmse),
        Experiment::ClustersFig4 => Some(FigureKind::Clusters),
        Experiment::BoFig5 => Some(FigureKind::Regret),
        Experiment::PropertySuite => None,
    }
}

/// Runs the configured experiment and writes `results.csv`,
/// `reports.jsonl`, a figure SVG, and the resolved-config echo into the
/// output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| Error::io(cfg.output_dir.display().to_string(), e))?;

    let config_path = cfg.output_dir.join("config_resolved.json");
    std::fs::write(&config_path, cfg.to_pretty_json()?)
        .map_err(|e| Error::io(config_path.display().to_string(), e))?;

    if cfg.experiment == Experiment::PropertySuite {
        let passed = verify::run_and_print();
        return Ok(RunArtifacts {
            csv_path: None,
            plot_path: None,
            reports_path: None,
            config_path,
            property_suite_passed: Some(passed),
        });
    }

    let outputs: Vec<JobOutput> = match cfg.experiment {
        Experiment::RmseFig2 | Experiment::RmseFig3 => {
            let jobs: Vec<(u64, Method)> = cfg
                .seeds
                .iter()
                .flat_map(|&s| cfg.methods.iter().map(move |&m| (s, m)))
                .collect();
            run_jobs(jobs, cfg.workers, |&(seed, method)| {
                rmse_job(cfg, seed, method)
            })?
        }
        Experiment::ClustersFig4 => {
            let jobs: Vec<(u64, Method, usize)> = cfg
                .seeds
                .iter()
                .flat_map(|&s| {
                    cfg.methods
                        .iter()
                        .flat_map(move |&m| cfg.clusters.iter().map(move |&c| (s, m, c)))
                })
                .collect();
            run_jobs(jobs, cfg.workers, |&(seed, method, c)| {
                cluster_job(cfg, seed, method, c)
            })?
        }
        Experiment::BoFig5 => {
            let jobs: Vec<u64> = cfg.seeds.clone();
            run_jobs(jobs, cfg.workers, |&seed| bo_job(cfg, seed))?
        }
        Experiment::PropertySuite => unreachable!(),
    };

    let mut rows: Vec<ResultRow> = Vec::new();
    let mut reports: Vec<(String, String)> = Vec::new();
    for out in outputs {
        rows.extend(out.rows);
        reports.extend(out.reports);
    }

    let csv_path = cfg.output_dir.join("results.csv");
    write_csv(&csv_path, &mut rows)?;

    let reports_path = cfg.output_dir.join("reports.jsonl");
    reports.sort_by(|a, b| a.0.cmp(&b.0));
    let mut text = String::new();
    for (_, line) in &reports {
        text.push_str(line);
        text.push('\n');
    }
    std::fs::write(&reports_path, text)
        .map_err(|e| Error::io(reports_path.display().to_string(), e))?;

    let plot_path = match figure_kind(cfg.experiment) {
        Some(kind) => {
            let path = cfg
                .output_dir
                .join(format!("{}.svg", cfg.experiment.name()));
            let svg = render_svg(&rows, kind)?;
            std::fs::write(&path, svg).map_err(|e| Error::io(path.display().to_string(), e))?;
            Some(path)
        }
        None => None,
    };

    Ok(RunArtifacts {
        csv_path: Some(csv_path),
        plot_path,
        reports_path: Some(reports_path),
        config_path,
        property_suite_passed: None,
    })
}

/// Convenience for callers that want a single (seed, method) RMSE curve
/// without touching the filesystem; the FFI layer binds this.
pub fn rmse_curve_values(cfg: &ExperimentConfig, seed: u64, method: Method) -> Result<Vec<f64>> {
    cfg.validate()?;
    let out = rmse_job(cfg, seed, method)?;
    let mut rows = out.rows;
    rows.sort_by_key(|r| r.step);
    Ok(rows.into_iter().map(|r| r.value).collect())
}

/// Reads back `results.csv` and renders the requested figure; the `plot`
/// subcommand binds this.
pub fn plot_csv(csv: &Path, kind: FigureKind, out: &Path) -> Result<()> {
    crate::harness::plot::plot_curves(csv, kind, out)
}
