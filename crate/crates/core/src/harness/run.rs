use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::problems::{BatchSampler, Problem};

use super::config::ExperimentConfig;
use super::optimizer::Optimizer;

/// Losses above this (or non-finite) end a run as diverged.
pub const DIVERGENCE_THRESHOLD: f64 = 1e8;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    /// Number of updates applied so far (1-based).
    pub iteration: u64,
    /// Sampler epoch of the batch used by this iteration.
    pub epoch: u64,
    /// Mini-batch loss at this iteration, before the update.
    pub batch_loss: f64,
    pub train_loss: f64,
    pub test_loss: f64,
    pub test_accuracy: Option<f64>,
    /// Cumulative wall time spent in iterations (evaluation excluded).
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub iterations_completed: u64,
    pub diverged: bool,
    pub best_test_accuracy: Option<f64>,
    /// First evaluated iteration whose full train loss is at or below each
    /// configured threshold.
    pub threshold_hits: Vec<(f64, Option<u64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub problem: String,
    pub optimizer: String,
    pub config_hash: String,
    pub rows: Vec<MetricRow>,
    pub summary: RunSummary,
}

impl RunRecord {
    pub fn last(&self) -> Option<&MetricRow> {
        self.rows.last()
    }

    /// First evaluated iteration with full train loss `<= threshold`.
    pub fn iterations_to_train_loss(&self, threshold: f64) -> Option<u64> {
        self.rows
            .iter()
            .find(|r| r.train_loss <= threshold)
            .map(|r| r.iteration)
    }
}

fn healthy(loss: f64) -> bool {
    loss.is_finite() && loss <= DIVERGENCE_THRESHOLD
}

/// Test split to evaluate on; problems without a held-out split reuse train.
fn eval_indices(problem: &dyn Problem) -> &[usize] {
    if problem.test_indices().is_empty() {
        problem.train_indices()
    } else {
        problem.test_indices()
    }
}

/// Builds the configured problem and runs the experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let problem = cfg.problem.build(cfg.seed)?;
    run_experiment_on(cfg, problem.as_ref())
}

/// Runs `cfg` against an already-built problem. Everything except the wall
/// time column is a deterministic function of `cfg`.
pub fn run_experiment_on(cfg: &ExperimentConfig, problem: &dyn Problem) -> Result<RunRecord> {
    cfg.validate()?;
    let mut optimizer = Optimizer::new(&cfg.optimizer, problem, cfg.total_iterations)?;
    let mut sampler = BatchSampler::new(problem.train_indices(), cfg.batch_size, cfg.seed)?;
    let mut w = problem.initial_params(cfg.seed);
    let test = eval_indices(problem);

    let mut rows = Vec::new();
    let mut elapsed = Duration::ZERO;
    let mut diverged = false;
    let mut completed = 0;

    for iteration in 1..=cfg.total_iterations {
        let started = Instant::now();
        let (epoch, batch) = sampler.next_batch();
        let (batch_loss, g) = problem.loss_and_grad(&w, batch);
        if !healthy(batch_loss) {
            diverged = true;
            break;
        }
        match optimizer.step(&mut w, &g, problem, batch) {
            Ok(()) => {}
            Err(Error::NonFinite { .. } | Error::Singular { .. } | Error::NotPositiveDefinite) => {
                diverged = true;
                break;
            }
            Err(e) => return Err(e),
        }
        elapsed += started.elapsed();
        if !w.is_finite() {
            diverged = true;
            break;
        }
        completed = iteration;

        if iteration % cfg.eval_every == 0 || iteration == cfg.total_iterations {
            let train_loss = problem.loss(&w, problem.train_indices());
            let test_loss = problem.loss(&w, test);
            if !healthy(train_loss) || !healthy(test_loss) {
                diverged = true;
                break;
            }
            rows.push(MetricRow {
                iteration,
                epoch,
                batch_loss,
                train_loss,
                test_loss,
                test_accuracy: problem.accuracy(&w, test),
                wall_ms: elapsed.as_secs_f64() * 1e3,
            });
        }
    }

    let best_test_accuracy = rows
        .iter()
        .filter_map(|r| r.test_accuracy)
        .fold(None, |best: Option<f64>, a| {
            Some(best.map_or(a, |b| b.max(a)))
        });
    let threshold_hits = cfg
        .loss_thresholds
        .iter()
        .map(|&t| {
            (
                t,
                rows.iter().find(|r| r.train_loss <= t).map(|r| r.iteration),
            )
        })
        .collect();

    Ok(RunRecord {
        problem: problem.name().to_string(),
        optimizer: cfg.optimizer.id().to_string(),
        config_hash: cfg.config_hash(),
        rows,
        summary: RunSummary {
            iterations_completed: completed,
            diverged,
            best_test_accuracy,
            threshold_hits,
        },
    })
}
