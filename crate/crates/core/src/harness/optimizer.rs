use crate::baselines::{
    newton_step, ngd_step, AdamConfig, AdamState, LrSchedule, SgdConfig, SgdMomentumState,
    DENSE_ORACLE_CAP,
};
use crate::error::{Error, Result};
use crate::problems::Problem;
use crate::sofim::{SofimConfig, SofimState};
use crate::vector::{GradientVector, ParamVector};

use super::config::{OptimizerSpec, ScheduleKind};

/// Per-run optimizer state behind one interface.
#[derive(Debug, Clone)]
pub enum Optimizer {
    Sofim(SofimState),
    SgdMomentum(SgdMomentumState),
    Adam(AdamState),
    Ngd { eta: f64, damping: f64 },
    Newton { eta: f64 },
}

impl Optimizer {
    /// Validates the hyperparameters and checks that the optimizer can run
    /// on a problem of this shape.
    pub fn new(spec: &OptimizerSpec, problem: &dyn Problem, total_iterations: u64) -> Result<Self> {
        spec.validate()?;
        let dim = problem.dim();
        Ok(match *spec {
            OptimizerSpec::Sofim { eta, rho, beta } => {
                Optimizer::Sofim(SofimState::new(dim, SofimConfig::new(eta, rho, beta)?)?)
            }
            OptimizerSpec::SgdMomentum {
                eta,
                momentum,
                weight_decay,
                schedule,
            } => {
                let schedule = match schedule {
                    ScheduleKind::Constant => LrSchedule::Constant,
                    ScheduleKind::Cosine => LrSchedule::Cosine {
                        total_steps: total_iterations,
                    },
                };
                Optimizer::SgdMomentum(SgdMomentumState::new(
                    dim,
                    SgdConfig {
                        eta,
                        momentum,
                        weight_decay,
                        schedule,
                    },
                )?)
            }
            OptimizerSpec::Adam {
                eta,
                beta1,
                beta2,
                epsilon,
            } => Optimizer::Adam(AdamState::new(
                dim,
                AdamConfig {
                    eta,
                    beta1,
                    beta2,
                    epsilon,
                },
            )?),
            OptimizerSpec::NgdOracle { eta, damping } => {
                if dim > DENSE_ORACLE_CAP {
                    return Err(Error::OracleCapExceeded {
                        dim,
                        cap: DENSE_ORACLE_CAP,
                    });
                }
                Optimizer::Ngd { eta, damping }
            }
            OptimizerSpec::NewtonOracle { eta } => {
                if dim > DENSE_ORACLE_CAP {
                    return Err(Error::OracleCapExceeded {
                        dim,
                        cap: DENSE_ORACLE_CAP,
                    });
                }
                if problem
                    .exact_hessian(problem.initial_params(0).as_slice())
                    .is_none()
                {
                    return Err(Error::Unsupported {
                        problem: problem.name(),
                        operation: "an exact Hessian",
                    });
                }
                Optimizer::Newton { eta }
            }
        })
    }

    /// Applies one update to `w` given the mini-batch gradient `g`. The dense
    /// oracles query the problem for per-sample gradients or the Hessian.
    pub fn step(
        &mut self,
        w: &mut ParamVector,
        g: &GradientVector,
        problem: &dyn Problem,
        batch: &[usize],
    ) -> Result<()> {
        match self {
            Optimizer::Sofim(state) => state.step_in_place(w.as_mut_slice(), g),
            Optimizer::SgdMomentum(state) => state.step_in_place(w.as_mut_slice(), g),
            Optimizer::Adam(state) => state.step_in_place(w.as_mut_slice(), g),
            Optimizer::Ngd { eta, damping } => {
                let grads = problem.per_sample_grads(w, batch);
                *w = ngd_step(w, &grads, *eta, *damping)?;
                Ok(())
            }
            Optimizer::Newton { eta } => {
                let hessian = problem.exact_hessian(w).ok_or(Error::Unsupported {
                    problem: problem.name(),
                    operation: "an exact Hessian",
                })?;
                *w = newton_step(w, &hessian, g, *eta)?;
                Ok(())
            }
        }
    }
}
