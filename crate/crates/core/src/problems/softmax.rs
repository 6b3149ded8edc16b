use std::sync::Arc;

use super::{argmax, softmax_into, Dataset, Problem};
use crate::error::{Error, Result};
use crate::vector::{GradientVector, ParamVector};

/// Multinomial logistic regression without bias. `W` is `C × p`, flattened
/// row-major by class: `w[c * p + j]`.
#[derive(Debug, Clone)]
pub struct SoftmaxProblem {
    data: Arc<Dataset>,
    classes: usize,
}

pub fn softmax_regression_problem(data: Arc<Dataset>, classes: usize) -> Result<SoftmaxProblem> {
    if classes < 2 {
        return Err(Error::Precondition(format!(
            "softmax needs at least 2 classes, got {classes}"
        )));
    }
    if let Some(&y) = data.labels().iter().find(|&&y| y >= classes) {
        return Err(Error::Data(format!("label {y} outside 0..{classes}")));
    }
    Ok(SoftmaxProblem { data, classes })
}

impl SoftmaxProblem {
    pub fn classes(&self) -> usize {
        self.classes
    }

    fn logits_into(&self, w: &[f64], i: usize, out: &mut [f64]) {
        let x = self.data.row(i);
        for (c, z) in out.iter_mut().enumerate() {
            *z = w[c * x.len()..(c + 1) * x.len()]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum();
        }
    }

    /// Class probabilities `softmax(W x)` for sample `i`.
    pub fn probabilities(&self, w: &[f64], i: usize) -> Vec<f64> {
        let mut z = vec![0.0; self.classes];
        let mut p = vec![0.0; self.classes];
        self.logits_into(w, i, &mut z);
        softmax_into(&z, &mut p);
        p
    }

    /// Adds `scale · ∇pᵢ` into `out` and returns the per-sample loss.
    fn accumulate(
        &self,
        w: &[f64],
        i: usize,
        scale: f64,
        z: &mut [f64],
        prob: &mut [f64],
        out: &mut [f64],
    ) -> f64 {
        self.logits_into(w, i, z);
        let lse = softmax_into(z, prob);
        let y = self.data.label(i);
        let x = self.data.row(i);
        let p = x.len();
        for (c, &pc) in prob.iter().enumerate() {
            let r = (pc - if c == y { 1.0 } else { 0.0 }) * scale;
            for (o, xj) in out[c * p..(c + 1) * p].iter_mut().zip(x) {
                *o += r * xj;
            }
        }
        lse - z[y]
    }
}

impl Problem for SoftmaxProblem {
    fn name(&self) -> &'static str {
        "softmax"
    }

    fn dim(&self) -> usize {
        self.data.n_features() * self.classes
    }

    fn train_indices(&self) -> &[usize] {
        self.data.train()
    }

    fn test_indices(&self) -> &[usize] {
        self.data.test()
    }

    fn loss(&self, w: &[f64], batch: &[usize]) -> f64 {
        assert_eq!(w.len(), self.dim());
        let mut z = vec![0.0; self.classes];
        let total: f64 = batch
            .iter()
            .map(|&i| {
                self.logits_into(w, i, &mut z);
                super::log_sum_exp(&z) - z[self.data.label(i)]
            })
            .sum();
        total / batch.len() as f64
    }

    fn per_sample_grads(&self, w: &[f64], batch: &[usize]) -> Vec<GradientVector> {
        assert_eq!(w.len(), self.dim());
        let mut z = vec![0.0; self.classes];
        let mut prob = vec![0.0; self.classes];
        batch
            .iter()
            .map(|&i| {
                let mut g = vec![0.0; self.dim()];
                self.accumulate(w, i, 1.0, &mut z, &mut prob, &mut g);
                g.into()
            })
            .collect()
    }

    fn loss_and_grad(&self, w: &[f64], batch: &[usize]) -> (f64, GradientVector) {
        assert_eq!(w.len(), self.dim());
        let scale = 1.0 / batch.len() as f64;
        let mut z = vec![0.0; self.classes];
        let mut prob = vec![0.0; self.classes];
        let mut g = vec![0.0; self.dim()];
        let mut loss = 0.0;
        for &i in batch {
            loss += self.accumulate(w, i, scale, &mut z, &mut prob, &mut g);
        }
        (loss * scale, g.into())
    }

    fn accuracy(&self, w: &[f64], batch: &[usize]) -> Option<f64> {
        if batch.is_empty() {
            return None;
        }
        let mut z = vec![0.0; self.classes];
        let correct = batch
            .iter()
            .filter(|&&i| {
                self.logits_into(w, i, &mut z);
                argmax(&z) == self.data.label(i)
            })
            .count();
        Some(correct as f64 / batch.len() as f64)
    }

    fn initial_params(&self, _seed: u64) -> ParamVector {
        ParamVector::zeros(self.dim()).expect("d >= 1")
    }
}
