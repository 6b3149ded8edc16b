//! Reference optimizers: SGD with momentum, Adam, and the dense oracles
//! (empirical-FIM natural gradient, exact Newton) used to cross-check SOFIM.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::problems::QuadraticProblem;
use crate::vector::{GradientVector, ParamVector};

/// Largest dimension the dense O(d²)/O(d³) oracles accept.
pub const DENSE_ORACLE_CAP: usize = 200;

/// Damping added to the empirical FIM when none is specified.
pub const DEFAULT_NGD_DAMPING: f64 = 1e-3;

fn positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "{name} must be positive, got {value}"
        )))
    }
}

fn unit_interval(name: &str, value: f64) -> Result<()> {
    if (0.0..1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "{name} must lie in [0, 1), got {value}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LrSchedule {
    Constant,
    /// Cosine annealing from η₀ down to 0 at `total_steps`; held at 0 after.
    Cosine {
        total_steps: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig {
    pub eta: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub schedule: LrSchedule,
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        positive("eta", self.eta)?;
        unit_interval("momentum", self.momentum)?;
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "weight_decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        if let LrSchedule::Cosine { total_steps: 0 } = self.schedule {
            return Err(Error::InvalidConfig(
                "cosine schedule needs total_steps >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Learning rate at `step_index` (0-based).
    pub fn learning_rate(&self, step_index: u64) -> f64 {
        match self.schedule {
            LrSchedule::Constant => self.eta,
            LrSchedule::Cosine { total_steps } => {
                let s = step_index.min(total_steps) as f64;
                0.5 * self.eta * (1.0 + (PI * s / total_steps as f64).cos())
            }
        }
    }
}

/// SGD with (coupled) weight decay and heavy-ball momentum.
#[derive(Debug, Clone, PartialEq)]
pub struct SgdMomentumState {
    pub velocity: Vec<f64>,
    pub step: u64,
    pub config: SgdConfig,
}

impl SgdMomentumState {
    pub fn new(dim: usize, config: SgdConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            velocity: vec![0.0; dim],
            step: 0,
            config,
        })
    }

    pub fn step_in_place(&mut self, w: &mut [f64], g: &[f64]) -> Result<()> {
        check_len(self.velocity.len(), w.len())?;
        check_len(w.len(), g.len())?;
        let cfg = &self.config;
        let eta = cfg.learning_rate(self.step);
        for ((wi, vi), &gi) in w.iter_mut().zip(self.velocity.iter_mut()).zip(g) {
            let decayed = gi + cfg.weight_decay * *wi;
            *vi = cfg.momentum * *vi + decayed;
            *wi -= eta * *vi;
        }
        self.step += 1;
        Ok(())
    }
}

pub fn sgd_momentum_step(
    w: &ParamVector,
    velocity: &[f64],
    g: &GradientVector,
    cfg: &SgdConfig,
    step_index: u64,
) -> Result<(ParamVector, Vec<f64>)> {
    check_len(w.dim(), velocity.len())?;
    let mut state = SgdMomentumState::new(w.dim(), *cfg)?;
    state.velocity.copy_from_slice(velocity);
    state.step = step_index;
    let mut next = w.clone().into_inner();
    state.step_in_place(&mut next, g)?;
    Ok((ParamVector::new(next)?, state.velocity))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub eta: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            eta: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        positive("eta", self.eta)?;
        unit_interval("beta1", self.beta1)?;
        unit_interval("beta2", self.beta2)?;
        positive("epsilon", self.epsilon)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(dim: usize, config: AdamConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            step: 0,
            config,
        })
    }

    pub fn step_in_place(&mut self, w: &mut [f64], g: &[f64]) -> Result<()> {
        check_len(self.m.len(), w.len())?;
        check_len(w.len(), g.len())?;
        self.step += 1;
        let AdamConfig {
            eta,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = i32::try_from(self.step).unwrap_or(i32::MAX);
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (((wi, mi), vi), &gi) in w.iter_mut().zip(&mut self.m).zip(&mut self.v).zip(g) {
            *mi = beta1 * *mi + (1.0 - beta1) * gi;
            *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
            let m_hat = *mi / c1;
            let v_hat = *vi / c2;
            *wi -= eta * m_hat / (v_hat.sqrt() + epsilon);
        }
        Ok(())
    }
}

/// One Adam step; `t` is the step count *after* this update (so `t >= 1`).
pub fn adam_step(
    w: &ParamVector,
    m: &[f64],
    v: &[f64],
    g: &GradientVector,
    cfg: &AdamConfig,
    t: u64,
) -> Result<(ParamVector, Vec<f64>, Vec<f64>)> {
    if t == 0 {
        return Err(Error::Precondition(
            "Adam step count must be at least 1".into(),
        ));
    }
    check_len(w.dim(), m.len())?;
    check_len(w.dim(), v.len())?;
    let mut state = AdamState::new(w.dim(), *cfg)?;
    state.m.copy_from_slice(m);
    state.v.copy_from_slice(v);
    state.step = t - 1;
    let mut next = w.clone().into_inner();
    state.step_in_place(&mut next, g)?;
    Ok((ParamVector::new(next)?, state.m, state.v))
}

/// Empirical Fisher information `(1/B) Σ gⁱ gⁱᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalFim {
    pub matrix: DMatrix<f64>,
}

impl EmpiricalFim {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

pub fn empirical_fim(per_sample_grads: &[GradientVector]) -> Result<EmpiricalFim> {
    empirical_fim_with_cap(per_sample_grads, DENSE_ORACLE_CAP)
}

pub fn empirical_fim_with_cap(
    per_sample_grads: &[GradientVector],
    cap: usize,
) -> Result<EmpiricalFim> {
    let first = per_sample_grads
        .first()
        .ok_or_else(|| Error::Precondition("empirical FIM needs at least one gradient".into()))?;
    let dim = first.dim();
    if dim > cap {
        return Err(Error::OracleCapExceeded { dim, cap });
    }
    let mut matrix = DMatrix::zeros(dim, dim);
    for g in per_sample_grads {
        check_len(dim, g.dim())?;
        let g = DVector::from_column_slice(g);
        matrix.ger(1.0, &g, &g, 1.0);
    }
    matrix /= per_sample_grads.len() as f64;
    Ok(EmpiricalFim { matrix })
}

fn mean_gradient(per_sample_grads: &[GradientVector]) -> DVector<f64> {
    let dim = per_sample_grads[0].dim();
    let mut mean = DVector::zeros(dim);
    for g in per_sample_grads {
        mean += DVector::from_column_slice(g);
    }
    mean / per_sample_grads.len() as f64
}

/// Natural-gradient step with the damped empirical FIM, solved densely:
/// `w' = w - η (F + λI)⁻¹ ḡ`.
pub fn ngd_step(
    w: &ParamVector,
    per_sample_grads: &[GradientVector],
    eta: f64,
    damping: f64,
) -> Result<ParamVector> {
    positive("eta", eta)?;
    positive("damping", damping)?;
    let fim = empirical_fim(per_sample_grads)?;
    check_len(w.dim(), fim.dim())?;
    let mut system = fim.matrix;
    for i in 0..system.nrows() {
        system[(i, i)] += damping;
    }
    let direction = system
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?
        .solve(&mean_gradient(per_sample_grads));
    ParamVector::new(
        w.iter()
            .zip(direction.iter())
            .map(|(wi, di)| wi - eta * di)
            .collect(),
    )
}

/// Newton step with an explicit Hessian: `w' = w - η H⁻¹ g`. The Hessian
/// must be positive definite.
pub fn newton_step(
    w: &ParamVector,
    hessian: &DMatrix<f64>,
    g: &GradientVector,
    eta: f64,
) -> Result<ParamVector> {
    positive("eta", eta)?;
    check_len(w.dim(), g.dim())?;
    check_len(w.dim(), hessian.nrows())?;
    check_len(w.dim(), hessian.ncols())?;
    let direction = hessian
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?
        .solve(&DVector::from_column_slice(g));
    ParamVector::new(
        w.iter()
            .zip(direction.iter())
            .map(|(wi, di)| wi - eta * di)
            .collect(),
    )
}

pub fn newton_step_quadratic(
    w: &ParamVector,
    problem: &QuadraticProblem,
    eta: f64,
) -> Result<ParamVector> {
    let g = problem.gradient_at(w)?;
    newton_step(w, problem.hessian(), &g, eta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::new(v.to_vec()).unwrap()
    }

    fn gv(v: &[f64]) -> GradientVector {
        v.to_vec().into()
    }

    #[test]
    fn plain_sgd_is_gradient_step() {
        let cfg = SgdConfig {
            eta: 0.1,
            momentum: 0.0,
            weight_decay: 0.0,
            schedule: LrSchedule::Constant,
        };
        let (w, _) =
            sgd_momentum_step(&pv(&[1.0, 2.0]), &[0.0, 0.0], &gv(&[0.5, -1.0]), &cfg, 7).unwrap();
        assert_eq!(w.as_slice(), &[1.0 - 0.1 * 0.5, 2.0 + 0.1]);
    }

    #[test]
    fn cosine_endpoint_freezes_parameters() {
        let cfg = SgdConfig {
            eta: 0.1,
            momentum: 0.9,
            weight_decay: 0.0,
            schedule: LrSchedule::Cosine { total_steps: 100 },
        };
        let w0 = pv(&[1.0, -1.0]);
        let (w, v) = sgd_momentum_step(&w0, &[0.3, 0.3], &gv(&[1.0, 1.0]), &cfg, 100).unwrap();
        assert_eq!(w, w0);
        assert!(v.iter().all(|vi| (vi - 1.27).abs() < 1e-15));
        assert_eq!(cfg.learning_rate(0), 0.1);
        assert!(cfg.learning_rate(50) > 0.0499 && cfg.learning_rate(50) < 0.0501);
    }

    #[test]
    fn momentum_two_steps_by_hand() {
        let cfg = SgdConfig {
            eta: 0.1,
            momentum: 0.9,
            weight_decay: 0.0,
            schedule: LrSchedule::Constant,
        };
        let (w1, v1) = sgd_momentum_step(&pv(&[1.0]), &[0.0], &gv(&[1.0]), &cfg, 0).unwrap();
        assert_eq!(v1, vec![1.0]);
        assert!((w1[0] - 0.9).abs() < 1e-15);
        let (w2, v2) = sgd_momentum_step(&w1, &v1, &gv(&[1.0]), &cfg, 1).unwrap();
        assert!((v2[0] - 1.9).abs() < 1e-15);
        assert!((w2[0] - 0.71).abs() < 1e-15);
    }

    #[test]
    fn weight_decay_is_added_to_gradient() {
        let cfg = SgdConfig {
            eta: 1.0,
            momentum: 0.0,
            weight_decay: 0.5,
            schedule: LrSchedule::Constant,
        };
        let (w, _) = sgd_momentum_step(&pv(&[2.0]), &[0.0], &gv(&[0.0]), &cfg, 0).unwrap();
        assert_eq!(w.as_slice(), &[1.0]);
    }

    #[test]
    fn sgd_config_validation() {
        let base = SgdConfig {
            eta: 0.1,
            momentum: 0.9,
            weight_decay: 1e-6,
            schedule: LrSchedule::Constant,
        };
        assert!(base.validate().is_ok());
        assert!(SgdConfig {
            momentum: 1.0,
            ..base
        }
        .validate()
        .is_err());
        assert!(SgdConfig { eta: 0.0, ..base }.validate().is_err());
        assert!(SgdConfig {
            weight_decay: -1.0,
            ..base
        }
        .validate()
        .is_err());
        assert!(SgdConfig {
            schedule: LrSchedule::Cosine { total_steps: 0 },
            ..base
        }
        .validate()
        .is_err());
    }

    #[test]
    fn adam_zero_gradient_is_a_no_op() {
        let w0 = pv(&[1.0, -2.0]);
        let (w, m, v) = adam_step(
            &w0,
            &[0.0; 2],
            &[0.0; 2],
            &gv(&[0.0, 0.0]),
            &AdamConfig::default(),
            1,
        )
        .unwrap();
        assert_eq!(w, w0);
        assert_eq!(m, vec![0.0; 2]);
        assert_eq!(v, vec![0.0; 2]);
    }

    #[test]
    fn adam_first_step_is_sign_like() {
        let cfg = AdamConfig {
            eta: 0.1,
            beta1: 0.9,
            beta2: 0.99,
            epsilon: 1e-8,
        };
        let (w, _, _) = adam_step(&pv(&[0.0]), &[0.0], &[0.0], &gv(&[2.0]), &cfg, 1).unwrap();
        assert!((w[0] + 0.1).abs() < 1e-8);

        let (w, _, _) = adam_step(
            &pv(&[0.0, 0.0]),
            &[0.0; 2],
            &[0.0; 2],
            &gv(&[-3.0, 0.5]),
            &cfg,
            1,
        )
        .unwrap();
        assert!((w[0] - 0.1).abs() < 1e-8);
        assert!((w[1] + 0.1).abs() < 1e-7);
    }

    #[test]
    fn adam_requires_positive_step_count() {
        assert!(adam_step(
            &pv(&[0.0]),
            &[0.0],
            &[0.0],
            &gv(&[1.0]),
            &AdamConfig::default(),
            0
        )
        .is_err());
    }

    #[test]
    fn fim_examples() {
        let f = empirical_fim(&[gv(&[1.0, 2.0])]).unwrap();
        assert_eq!(
            f.matrix,
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0])
        );
        let f = empirical_fim(&[gv(&[1.0, 0.0]), gv(&[0.0, 1.0])]).unwrap();
        assert_eq!(
            f.matrix,
            DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5])
        );
    }

    #[test]
    fn fim_errors() {
        assert!(empirical_fim(&[]).is_err());
        assert!(matches!(
            empirical_fim(&[GradientVector::zeros(201)]),
            Err(Error::OracleCapExceeded { dim: 201, cap: 200 })
        ));
        assert!(empirical_fim(&[gv(&[1.0]), gv(&[1.0, 2.0])]).is_err());
    }

    #[test]
    fn ngd_with_zero_gradients_stays_put() {
        let w0 = pv(&[1.0, 2.0, 3.0]);
        let w = ngd_step(
            &w0,
            &[GradientVector::zeros(3), GradientVector::zeros(3)],
            0.5,
            1e-3,
        )
        .unwrap();
        assert_eq!(w, w0);
    }

    #[test]
    fn ngd_single_sample_matches_closed_form() {
        let g = [0.3, -1.2, 0.7];
        let rho = 0.5;
        let eta = 0.2;
        let w0 = pv(&[1.0, 2.0, 3.0]);
        let w = ngd_step(&w0, &[gv(&g)], eta, rho).unwrap();
        let s: f64 = g.iter().map(|x| x * x).sum();
        for i in 0..3 {
            let expected = w0[i] - eta * g[i] / (rho + s);
            assert!((w[i] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn newton_rejects_indefinite_hessian() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            newton_step(&pv(&[0.0, 0.0]), &h, &gv(&[1.0, 1.0]), 1.0),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn newton_with_identity_is_sgd() {
        let h = DMatrix::identity(2, 2);
        let w = newton_step(&pv(&[1.0, 1.0]), &h, &gv(&[0.5, -0.5]), 0.1).unwrap();
        assert_eq!(w.as_slice(), &[0.95, 1.05]);
    }
}
