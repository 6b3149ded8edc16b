//! SOFIM: Newton-style steps with a regularized rank-one Fisher information
//! matrix.
//!
//! Each iteration keeps an exponentially decayed first moment `M_t` of the
//! stochastic gradient, bias-corrects it to `M̂_t = M_t / (1 - β^t)`, and moves
//! along `F_t⁻¹ M̂_t` where `F_t = M̂_t M̂_tᵀ + ρI`. Sherman-Morrison turns
//! that inverse into a scalar rescaling of `M̂_t`, so a step costs O(d) time
//! and the optimizer stores a single extra vector.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_len, Error, Result};
use crate::vector::{dot, norm_sq, GradientVector, ParamVector};

/// Smallest accepted `|1 + vᵀA⁻¹u|` in [`sherman_morrison_inverse_apply`].
pub const SINGULARITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SofimConfig {
    /// Learning rate η.
    pub eta: f64,
    /// FIM regularizer ρ.
    pub rho: f64,
    /// Moment decay β.
    pub beta: f64,
}

impl SofimConfig {
    pub fn new(eta: f64, rho: f64, beta: f64) -> Result<Self> {
        let config = Self { eta, rho, beta };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        // ρ <= 0 makes F_t indefinite (or singular) and the step meaningless.
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "rho must be positive, got {}",
                self.rho
            )));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::InvalidConfig(format!(
                "beta must lie in [0, 1), got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

impl Default for SofimConfig {
    fn default() -> Self {
        Self {
            eta: 0.1,
            rho: 0.5,
            beta: 0.9,
        }
    }
}

/// Optimizer state for one run.
///
/// `beta_power` tracks `β^t` as a running product so the per-step cost does
/// not depend on `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SofimState {
    moment: Vec<f64>,
    step: u64,
    beta_power: f64,
    config: SofimConfig,
}

impl SofimState {
    pub fn new(dim: usize, config: SofimConfig) -> Result<Self> {
        config.validate()?;
        if dim == 0 {
            return Err(Error::Precondition("dimension must be at least 1".into()));
        }
        Ok(Self {
            moment: vec![0.0; dim],
            step: 0,
            beta_power: 1.0,
            config,
        })
    }

    /// Rebuilds a state from a stored moment. `step = 0` requires a zero moment.
    pub fn from_parts(moment: Vec<f64>, step: u64, config: SofimConfig) -> Result<Self> {
        config.validate()?;
        if moment.is_empty() {
            return Err(Error::Precondition("dimension must be at least 1".into()));
        }
        check_finite(&moment, "moment")?;
        if step == 0 && moment.iter().any(|&m| m != 0.0) {
            return Err(Error::Precondition("step 0 requires a zero moment".into()));
        }
        let mut beta_power = 1.0;
        for _ in 0..step {
            beta_power *= config.beta;
        }
        Ok(Self {
            moment,
            step,
            beta_power,
            config,
        })
    }

    pub fn dim(&self) -> usize {
        self.moment.len()
    }

    pub fn moment(&self) -> &[f64] {
        &self.moment
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> &SofimConfig {
        &self.config
    }

    fn check_gradient(&self, g: &[f64]) -> Result<()> {
        check_len(self.moment.len(), g.len())?;
        check_finite(g, "gradient")
    }

    fn correction_denominator(&self) -> Result<f64> {
        if self.step == 0 {
            return Err(Error::Precondition(
                "bias correction needs at least one moment update".into(),
            ));
        }
        // Once β^t underflows below ε this is exactly 1.0.
        Ok(1.0 - self.beta_power)
    }

    fn advance_moment(&mut self, g: &[f64]) {
        let beta = self.config.beta;
        for (m, &gi) in self.moment.iter_mut().zip(g) {
            *m = beta * *m + (1.0 - beta) * gi;
        }
        self.step += 1;
        self.beta_power *= beta;
    }

    /// Runs one full SOFIM iteration in place: moment update, bias
    /// correction, direction and parameter update, without allocating.
    ///
    /// Produces bit-identical results to [`sofim_step`].
    pub fn step_in_place(&mut self, w: &mut [f64], g: &[f64]) -> Result<()> {
        check_len(self.moment.len(), w.len())?;
        self.check_gradient(g)?;
        self.advance_moment(g);
        let denom = self.correction_denominator()?;

        let mut s = 0.0;
        for &m in &self.moment {
            let m_hat = m / denom;
            s += m_hat * m_hat;
        }
        let coef = direction_coefficient(s, self.config.rho)?;
        let eta = self.config.eta;
        for (wi, &m) in w.iter_mut().zip(&self.moment) {
            *wi -= eta * ((m / denom) * coef);
        }
        Ok(())
    }
}

/// `M_t = β M_{t-1} + (1 - β) g_t`, advancing the step counter by one.
pub fn first_moment_update(state: &SofimState, g: &GradientVector) -> Result<SofimState> {
    state.check_gradient(g)?;
    let mut next = state.clone();
    next.advance_moment(g);
    Ok(next)
}

/// `M̂_t = M_t / (1 - β^t)`.
pub fn bias_correct(state: &SofimState) -> Result<GradientVector> {
    let denom = state.correction_denominator()?;
    Ok(state
        .moment
        .iter()
        .map(|m| m / denom)
        .collect::<Vec<_>>()
        .into())
}

/// Applies `(aI + u vᵀ)⁻¹` to `b` with the Sherman-Morrison identity,
/// in O(d) time and without forming any d×d matrix.
pub fn sherman_morrison_inverse_apply(
    a_diag: f64,
    u: &[f64],
    v: &[f64],
    b: &[f64],
) -> Result<Vec<f64>> {
    if !(a_diag > 0.0 && a_diag.is_finite()) {
        return Err(Error::Precondition(format!(
            "diagonal of A must be positive, got {a_diag}"
        )));
    }
    check_len(u.len(), v.len())?;
    check_len(u.len(), b.len())?;

    let inv_a = 1.0 / a_diag;
    let denominator = 1.0 + dot(v, u) * inv_a;
    if !denominator.is_finite() {
        return Err(Error::NonFinite {
            what: "Sherman-Morrison denominator",
        });
    }
    if denominator.abs() < SINGULARITY_TOLERANCE {
        return Err(Error::Singular {
            denominator,
            tolerance: SINGULARITY_TOLERANCE,
        });
    }
    // (A + uvᵀ)⁻¹b = A⁻¹b - A⁻¹u (vᵀA⁻¹b) / (1 + vᵀA⁻¹u)
    let factor = dot(v, b) * inv_a / denominator;
    Ok(b.iter()
        .zip(u)
        .map(|(&bi, &ui)| bi * inv_a - ui * inv_a * factor)
        .collect())
}

/// Sherman-Morrison with `A = ρI` and `u = v = b = M̂` collapses to a scalar:
/// `1/ρ - (s/ρ²)/(1 + s/ρ) = (1/ρ)/(1 + s/ρ)` where `s = ‖M̂‖²`. The factored
/// form avoids cancellation when `s ≫ ρ`.
fn direction_coefficient(s: f64, rho: f64) -> Result<f64> {
    if !s.is_finite() {
        return Err(Error::NonFinite {
            what: "squared moment norm",
        });
    }
    Ok((1.0 / rho) / (1.0 + s / rho))
}

/// `F_t⁻¹ M̂_t` with `F_t = M̂_t M̂_tᵀ + ρI`, i.e. `M̂ / (ρ + ‖M̂‖²)`.
pub fn sofim_direction(m_hat: &[f64], rho: f64) -> Result<Vec<f64>> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "rho must be positive, got {rho}"
        )));
    }
    check_finite(m_hat, "bias-corrected moment")?;
    let coef = direction_coefficient(norm_sq(m_hat), rho)?;
    Ok(m_hat.iter().map(|m| m * coef).collect())
}

/// One SOFIM iteration: `w' = w - η F_t⁻¹ M̂_t`. Returns the new parameters
/// and the state advanced by exactly one step.
pub fn sofim_step(
    w: &ParamVector,
    state: &SofimState,
    g: &GradientVector,
) -> Result<(ParamVector, SofimState)> {
    check_len(state.dim(), w.dim())?;
    let next = first_moment_update(state, g)?;
    let m_hat = bias_correct(&next)?;
    let direction = sofim_direction(&m_hat, next.config.rho)?;
    let eta = next.config.eta;
    let updated = w
        .iter()
        .zip(&direction)
        .map(|(wi, di)| wi - eta * di)
        .collect();
    Ok((ParamVector::new(updated)?, next))
}
