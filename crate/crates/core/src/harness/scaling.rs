use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::DENSE_ORACLE_CAP;
use crate::error::{Error, Result};
use crate::problems::{make_separable_quadratic, Problem};
use crate::sofim::SofimConfig;

use super::config::OptimizerSpec;
use super::optimizer::Optimizer;

/// Element updates per timed measurement; small `d` loops over several
/// steps so a measurement is well above clock resolution.
const WORK_PER_MEASUREMENT: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerId {
    Sofim,
    SgdMomentum,
    Adam,
    NgdOracle,
    NewtonOracle,
}

impl OptimizerId {
    pub fn spec(self) -> OptimizerSpec {
        match self {
            OptimizerId::Sofim => OptimizerSpec::sofim(SofimConfig::default()),
            OptimizerId::SgdMomentum => OptimizerSpec::sgd_default(0.01),
            OptimizerId::Adam => OptimizerSpec::adam_default(1e-3),
            OptimizerId::NgdOracle => OptimizerSpec::ngd_default(0.1),
            OptimizerId::NewtonOracle => OptimizerSpec::NewtonOracle { eta: 1.0 },
        }
    }

    fn is_dense_oracle(self) -> bool {
        matches!(self, OptimizerId::NgdOracle | OptimizerId::NewtonOracle)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub dim: usize,
    pub median_step_ns: f64,
}

/// Median wall time of a single optimizer update (gradient evaluation
/// excluded) on separable quadratics of each dimension in `dims`.
pub fn scaling_probe(
    optimizer: OptimizerId,
    dims: &[usize],
    repeats: usize,
) -> Result<Vec<ScalingRow>> {
    if dims.is_empty() || repeats == 0 {
        return Err(Error::Precondition(
            "scaling probe needs dimensions and repeats >= 1".into(),
        ));
    }
    if dims.windows(2).any(|w| w[0] >= w[1]) || dims[0] == 0 {
        return Err(Error::Precondition(
            "scaling dimensions must be positive and increasing".into(),
        ));
    }
    if optimizer.is_dense_oracle() {
        if let Some(&dim) = dims.iter().find(|&&d| d > DENSE_ORACLE_CAP) {
            return Err(Error::OracleCapExceeded {
                dim,
                cap: DENSE_ORACLE_CAP,
            });
        }
    }

    let spec = optimizer.spec();
    dims.iter()
        .map(|&dim| {
            let problem = make_separable_quadratic(dim, 10.0, dim as u64)?;
            let batch = problem.train_indices().to_vec();
            let mut opt = Optimizer::new(&spec, &problem, u64::MAX)?;
            let mut w = problem.initial_params(0);
            let inner = (WORK_PER_MEASUREMENT / dim).max(1);
            let mut samples = Vec::with_capacity(repeats);
            for _ in 0..repeats {
                let g = problem.grad(&w, &batch);
                let start = Instant::now();
                for _ in 0..inner {
                    opt.step(&mut w, &g, &problem, &batch)?;
                }
                black_box(&w);
                samples.push(start.elapsed().as_nanos() as f64 / inner as f64);
            }
            samples.sort_by(f64::total_cmp);
            Ok(ScalingRow {
                dim,
                median_step_ns: median(&samples),
            })
        })
        .collect()
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}
