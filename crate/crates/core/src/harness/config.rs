use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{AdamConfig, LrSchedule, SgdConfig, DEFAULT_NGD_DAMPING};
use crate::error::{Error, Result};
use crate::problems::{
    load_csv_dataset, logistic_regression_problem, make_blobs, make_quadratic, mlp_problem,
    softmax_regression_problem, Activation, Dataset, MlpSpec, Problem,
};
use crate::sofim::SofimConfig;

/// Learning-rate grid used when a sweep does not name its own.
pub const DEFAULT_ETA_GRID: [f64; 5] = [1.0, 0.1, 0.01, 0.001, 0.0001];
/// FIM regularizer grid for ρ-sensitivity sweeps.
pub const DEFAULT_RHO_GRID: [f64; 3] = [1.0, 0.5, 0.1];
pub const DEFAULT_BATCH_SIZE: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    Blobs {
        n: usize,
        features: usize,
        classes: usize,
        spread: f64,
        seed: u64,
    },
    Csv {
        path: PathBuf,
        label_column: String,
        split_fraction: f64,
        seed: u64,
    },
}

impl DataSpec {
    pub fn build(&self) -> Result<Dataset> {
        match self {
            DataSpec::Blobs {
                n,
                features,
                classes,
                spread,
                seed,
            } => make_blobs(*n, *features, *classes, *spread, *seed),
            DataSpec::Csv {
                path,
                label_column,
                split_fraction,
                seed,
            } => load_csv_dataset(path, label_column, *split_fraction, *seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Quadratic {
        dim: usize,
        condition: f64,
        seed: u64,
    },
    Logistic {
        data: DataSpec,
    },
    Softmax {
        data: DataSpec,
    },
    Mlp {
        data: DataSpec,
        hidden: usize,
        activation: Activation,
    },
}

impl ProblemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::Quadratic { .. } => "quadratic",
            ProblemSpec::Logistic { .. } => "logistic",
            ProblemSpec::Softmax { .. } => "softmax",
            ProblemSpec::Mlp { .. } => "mlp",
        }
    }

    /// Builds the problem. `init_seed` drives any random model initialization.
    pub fn build(&self, init_seed: u64) -> Result<Arc<dyn Problem>> {
        Ok(match self {
            ProblemSpec::Quadratic {
                dim,
                condition,
                seed,
            } => Arc::new(make_quadratic(*dim, *condition, *seed)?),
            ProblemSpec::Logistic { data } => {
                Arc::new(logistic_regression_problem(Arc::new(data.build()?))?)
            }
            ProblemSpec::Softmax { data } => {
                let data = Arc::new(data.build()?);
                let classes = data.num_classes();
                Arc::new(softmax_regression_problem(data, classes)?)
            }
            ProblemSpec::Mlp {
                data,
                hidden,
                activation,
            } => {
                let data = Arc::new(data.build()?);
                let spec = MlpSpec {
                    inputs: data.n_features(),
                    hidden: *hidden,
                    classes: data.num_classes(),
                    activation: *activation,
                };
                Arc::new(mlp_problem(data, spec, init_seed)?)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    /// Anneals to 0 over the run's `total_iterations`.
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OptimizerSpec {
    Sofim {
        eta: f64,
        rho: f64,
        beta: f64,
    },
    SgdMomentum {
        eta: f64,
        momentum: f64,
        weight_decay: f64,
        schedule: ScheduleKind,
    },
    Adam {
        eta: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
    NgdOracle {
        eta: f64,
        damping: f64,
    },
    NewtonOracle {
        eta: f64,
    },
}

impl OptimizerSpec {
    pub fn id(&self) -> &'static str {
        match self {
            OptimizerSpec::Sofim { .. } => "sofim",
            OptimizerSpec::SgdMomentum { .. } => "sgd_momentum",
            OptimizerSpec::Adam { .. } => "adam",
            OptimizerSpec::NgdOracle { .. } => "ngd_oracle",
            OptimizerSpec::NewtonOracle { .. } => "newton_oracle",
        }
    }

    pub fn eta(&self) -> f64 {
        match *self {
            OptimizerSpec::Sofim { eta, .. }
            | OptimizerSpec::SgdMomentum { eta, .. }
            | OptimizerSpec::Adam { eta, .. }
            | OptimizerSpec::NgdOracle { eta, .. }
            | OptimizerSpec::NewtonOracle { eta } => eta,
        }
    }

    /// Checks the hyperparameters without needing a problem instance.
    pub fn validate(&self) -> Result<()> {
        match *self {
            OptimizerSpec::Sofim { eta, rho, beta } => SofimConfig::new(eta, rho, beta).map(|_| ()),
            OptimizerSpec::SgdMomentum {
                eta,
                momentum,
                weight_decay,
                ..
            } => SgdConfig {
                eta,
                momentum,
                weight_decay,
                schedule: LrSchedule::Constant,
            }
            .validate(),
            OptimizerSpec::Adam {
                eta,
                beta1,
                beta2,
                epsilon,
            } => AdamConfig {
                eta,
                beta1,
                beta2,
                epsilon,
            }
            .validate(),
            OptimizerSpec::NgdOracle { eta, damping } => {
                positive("eta", eta)?;
                positive("damping", damping)
            }
            OptimizerSpec::NewtonOracle { eta } => positive("eta", eta),
        }
    }

    pub fn with_eta(mut self, value: f64) -> Self {
        match &mut self {
            OptimizerSpec::Sofim { eta, .. }
            | OptimizerSpec::SgdMomentum { eta, .. }
            | OptimizerSpec::Adam { eta, .. }
            | OptimizerSpec::NgdOracle { eta, .. }
            | OptimizerSpec::NewtonOracle { eta } => *eta = value,
        }
        self
    }

    pub fn sofim(config: SofimConfig) -> Self {
        OptimizerSpec::Sofim {
            eta: config.eta,
            rho: config.rho,
            beta: config.beta,
        }
    }

    /// SGD with the classic settings: momentum 0.9, weight decay 1e-6 and a
    /// cosine schedule.
    pub fn sgd_default(eta: f64) -> Self {
        OptimizerSpec::SgdMomentum {
            eta,
            momentum: 0.9,
            weight_decay: 1e-6,
            schedule: ScheduleKind::Cosine,
        }
    }

    pub fn adam_default(eta: f64) -> Self {
        let d = AdamConfig::default();
        OptimizerSpec::Adam {
            eta,
            beta1: d.beta1,
            beta2: d.beta2,
            epsilon: d.epsilon,
        }
    }

    pub fn ngd_default(eta: f64) -> Self {
        OptimizerSpec::NgdOracle {
            eta,
            damping: DEFAULT_NGD_DAMPING,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub optimizer: OptimizerSpec,
    pub batch_size: usize,
    pub total_iterations: u64,
    pub eval_every: u64,
    pub seed: u64,
    /// Train-loss levels whose first crossing is reported in the summary.
    #[serde(default)]
    pub loss_thresholds: Vec<f64>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.total_iterations == 0 {
            return Err(Error::InvalidConfig(
                "total_iterations must be at least 1".into(),
            ));
        }
        if self.eval_every == 0 || self.eval_every > self.total_iterations {
            return Err(Error::InvalidConfig(format!(
                "eval_every must lie in 1..={}, got {}",
                self.total_iterations, self.eval_every
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        self.optimizer.validate()
    }

    /// Stable short digest of the full configuration.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// `<problem>_<optimizer>_<hash>`
    pub fn file_stem(&self) -> String {
        format!(
            "{}_{}_{}",
            self.problem.name(),
            self.optimizer.id(),
            self.config_hash()
        )
    }
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "{name} must be positive, got {value}"
        )))
    }
}
