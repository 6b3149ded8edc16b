//! Differentiable test problems with analytic gradients.
//!
//! Every problem is an empirical loss `P(w) = (1/|B|) Σ_{i∈B} pᵢ(w)` over a
//! batch `B` of sample indices, so `grad` is always the mean of
//! `per_sample_grads`.

mod dataset;
pub mod gradcheck;
mod logistic;
mod mlp;
mod quadratic;
mod softmax;

use nalgebra::DMatrix;

use crate::vector::{GradientVector, ParamVector};

pub use dataset::{load_csv_dataset, make_blobs, write_csv_dataset, BatchSampler, Dataset};
pub use logistic::{logistic_regression_problem, LogisticProblem};
pub use mlp::{mlp_problem, Activation, MlpLayers, MlpProblem, MlpSpec};
pub use quadratic::{
    make_quadratic, make_separable_quadratic, QuadraticProblem, SeparableQuadratic,
};
pub use softmax::{softmax_regression_problem, SoftmaxProblem};

pub trait Problem: Send + Sync {
    /// Short identifier used in output file names.
    fn name(&self) -> &'static str;

    fn dim(&self) -> usize;

    fn train_indices(&self) -> &[usize];

    fn test_indices(&self) -> &[usize];

    fn loss(&self, w: &[f64], batch: &[usize]) -> f64;

    fn per_sample_grads(&self, w: &[f64], batch: &[usize]) -> Vec<GradientVector>;

    /// Mean batch loss together with its gradient.
    fn loss_and_grad(&self, w: &[f64], batch: &[usize]) -> (f64, GradientVector);

    fn grad(&self, w: &[f64], batch: &[usize]) -> GradientVector {
        self.loss_and_grad(w, batch).1
    }

    /// Exact Hessian, for problems where it is cheap and constant enough to
    /// serve a Newton oracle.
    fn exact_hessian(&self, _w: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    /// Fraction of argmax-correct predictions; `None` for problems without
    /// class labels.
    fn accuracy(&self, _w: &[f64], _batch: &[usize]) -> Option<f64> {
        None
    }

    fn initial_params(&self, seed: u64) -> ParamVector;
}

/// `log Σ exp(z)` with max subtraction.
pub(crate) fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Writes `softmax(z)` into `out` and returns `log Σ exp(z)`.
pub(crate) fn softmax_into(z: &[f64], out: &mut [f64]) -> f64 {
    let lse = log_sum_exp(z);
    for (o, v) in out.iter_mut().zip(z) {
        *o = (v - lse).exp();
    }
    lse
}

/// Index of the largest entry; ties go to the lowest index.
pub(crate) fn argmax(z: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in z.iter().enumerate().skip(1) {
        if v > z[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
pub(crate) fn mean_of(grads: Vec<GradientVector>, dim: usize) -> GradientVector {
    let n = grads.len().max(1) as f64;
    let mut mean = vec![0.0; dim];
    for g in &grads {
        for (m, gi) in mean.iter_mut().zip(g.iter()) {
            *m += gi;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    mean.into()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_is_stable() {
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert!((log_sum_exp(&[-1000.0, -1000.0]) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        let mut p = [0.0; 3];
        softmax_into(&[1.0, 2.0, 3.0], &mut p);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn argmax_ties_pick_lowest() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.0, 0.0]), 0);
    }
}
