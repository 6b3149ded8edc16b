use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::config::ExperimentConfig;
use super::run::{run_experiment_on, RunRecord};

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub points: Vec<(ExperimentConfig, RunRecord)>,
    /// Index into `points` of the selected configuration; `None` when every
    /// point diverged.
    pub best: Option<usize>,
}

impl SweepResult {
    pub fn best_point(&self) -> Option<&(ExperimentConfig, RunRecord)> {
        self.best.map(|i| &self.points[i])
    }
}

/// Ordering where `Less` means "better": highest final test accuracy, then
/// lowest final test loss, then lowest final train loss.
pub fn compare_runs(a: &RunRecord, b: &RunRecord) -> Ordering {
    let (ra, rb) = match (a.last(), b.last()) {
        (Some(ra), Some(rb)) => (ra, rb),
        (Some(_), None) => return Ordering::Less,
        (None, Some(_)) => return Ordering::Greater,
        (None, None) => return Ordering::Equal,
    };
    let acc = |r: &super::run::MetricRow| r.test_accuracy.unwrap_or(f64::NEG_INFINITY);
    acc(rb)
        .total_cmp(&acc(ra))
        .then(ra.test_loss.total_cmp(&rb.test_loss))
        .then(ra.train_loss.total_cmp(&rb.train_loss))
}

fn is_valid(record: &RunRecord) -> bool {
    !record.summary.diverged && !record.rows.is_empty()
}

/// Runs every grid point on one shared problem instance and picks the best
/// non-diverged run. All points must share the problem and the seed, so
/// they start from the same initialization.
pub fn sweep(grid: &[ExperimentConfig]) -> Result<SweepResult> {
    let first = grid
        .first()
        .ok_or_else(|| Error::InvalidConfig("sweep grid is empty".into()))?;
    for cfg in grid {
        cfg.validate()?;
        if cfg.problem != first.problem || cfg.seed != first.seed {
            return Err(Error::InvalidConfig(
                "all sweep points must share the problem and the seed".into(),
            ));
        }
    }
    let problem = first.problem.build(first.seed)?;
    let records = grid
        .par_iter()
        .map(|cfg| run_experiment_on(cfg, problem.as_ref()))
        .collect::<Result<Vec<_>>>()?;

    let best = records
        .iter()
        .enumerate()
        .filter(|(_, r)| is_valid(r))
        .min_by(|(ia, a), (ib, b)| compare_runs(a, b).then(ia.cmp(ib)))
        .map(|(i, _)| i);

    Ok(SweepResult {
        points: grid.iter().cloned().zip(records).collect(),
        best,
    })
}
