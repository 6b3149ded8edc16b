use std::sync::Arc;

use super::{Dataset, Problem};
use crate::error::{Error, Result};
use crate::vector::{GradientVector, ParamVector};

/// Binary logistic regression. Parameters are the `p` feature weights
/// followed by the bias (a constant-1 feature), so `d = p + 1`.
#[derive(Debug, Clone)]
pub struct LogisticProblem {
    data: Arc<Dataset>,
}

pub fn logistic_regression_problem(data: Arc<Dataset>) -> Result<LogisticProblem> {
    if let Some(&y) = data.labels().iter().find(|&&y| y > 1) {
        return Err(Error::Data(format!(
            "logistic regression needs labels in {{0, 1}}, found {y}"
        )));
    }
    Ok(LogisticProblem { data })
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl LogisticProblem {
    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    fn logit(&self, w: &[f64], i: usize) -> f64 {
        let x = self.data.row(i);
        let p = x.len();
        w[..p].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[p]
    }

    fn sample_loss(&self, w: &[f64], i: usize) -> f64 {
        // -[y log σ(z) + (1-y) log(1-σ(z))] = softplus(z) - y z
        let z = self.logit(w, i);
        softplus(z) - self.data.label(i) as f64 * z
    }

    fn accumulate_grad(&self, w: &[f64], i: usize, scale: f64, out: &mut [f64]) {
        let r = (sigmoid(self.logit(w, i)) - self.data.label(i) as f64) * scale;
        let x = self.data.row(i);
        for (o, xi) in out.iter_mut().zip(x) {
            *o += r * xi;
        }
        out[x.len()] += r;
    }
}

impl Problem for LogisticProblem {
    fn name(&self) -> &'static str {
        "logistic"
    }

    fn dim(&self) -> usize {
        self.data.n_features() + 1
    }

    fn train_indices(&self) -> &[usize] {
        self.data.train()
    }

    fn test_indices(&self) -> &[usize] {
        self.data.test()
    }

    fn loss(&self, w: &[f64], batch: &[usize]) -> f64 {
        assert_eq!(w.len(), self.dim());
        batch.iter().map(|&i| self.sample_loss(w, i)).sum::<f64>() / batch.len() as f64
    }

    fn per_sample_grads(&self, w: &[f64], batch: &[usize]) -> Vec<GradientVector> {
        assert_eq!(w.len(), self.dim());
        batch
            .iter()
            .map(|&i| {
                let mut g = vec![0.0; self.dim()];
                self.accumulate_grad(w, i, 1.0, &mut g);
                g.into()
            })
            .collect()
    }

    fn loss_and_grad(&self, w: &[f64], batch: &[usize]) -> (f64, GradientVector) {
        assert_eq!(w.len(), self.dim());
        let scale = 1.0 / batch.len() as f64;
        let mut g = vec![0.0; self.dim()];
        let mut loss = 0.0;
        for &i in batch {
            loss += self.sample_loss(w, i);
            self.accumulate_grad(w, i, scale, &mut g);
        }
        (loss * scale, g.into())
    }

    fn accuracy(&self, w: &[f64], batch: &[usize]) -> Option<f64> {
        if batch.is_empty() {
            return None;
        }
        // z = 0 is a tie between the classes and resolves to class 0.
        let correct = batch
            .iter()
            .filter(|&&i| usize::from(self.logit(w, i) > 0.0) == self.data.label(i))
            .count();
        Some(correct as f64 / batch.len() as f64)
    }

    fn initial_params(&self, _seed: u64) -> ParamVector {
        ParamVector::zeros(self.dim()).expect("d >= 1")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::mean_of;

    fn toy() -> Arc<Dataset> {
        Arc::new(
            Dataset::new(
                vec![1.0, 2.0, -1.0, 0.5, 0.0, -3.0, 2.0, 2.0],
                2,
                vec![1, 0, 1, 0],
                2,
                vec![0, 1, 2],
                vec![3],
            )
            .unwrap(),
        )
    }

    #[test]
    fn zero_weights_give_log_two() {
        let p = logistic_regression_problem(toy()).unwrap();
        let w = vec![0.0; 3];
        let batch = [0, 1, 2, 3];
        assert!((p.loss(&w, &batch) - 2f64.ln()).abs() < 1e-15);
        let gs = p.per_sample_grads(&w, &batch);
        let data = p.dataset();
        for (g, &i) in gs.iter().zip(&batch) {
            let r = 0.5 - data.label(i) as f64;
            assert_eq!(g[0], r * data.row(i)[0]);
            assert_eq!(g[1], r * data.row(i)[1]);
            assert_eq!(g[2], r);
        }
    }

    #[test]
    fn separable_loss_vanishes_at_large_weight() {
        let data = Arc::new(
            Dataset::new(
                vec![-2.0, -1.0, 1.0, 2.0],
                1,
                vec![0, 0, 1, 1],
                2,
                vec![0, 1, 2, 3],
                vec![],
            )
            .unwrap(),
        );
        let p = logistic_regression_problem(data).unwrap();
        let batch = [0, 1, 2, 3];
        assert!(p.loss(&[1e3, 0.0], &batch) < 1e-12);
        assert!(p.loss(&[1e3, 0.0], &batch) < p.loss(&[1.0, 0.0], &batch));
        assert_eq!(p.accuracy(&[1.0, 0.0], &batch), Some(1.0));
    }

    #[test]
    fn rejects_multiclass_labels() {
        let data = Arc::new(
            Dataset::new(vec![0.0; 3], 1, vec![0, 1, 2], 3, vec![0, 1, 2], vec![]).unwrap(),
        );
        assert!(logistic_regression_problem(data).is_err());
    }

    #[test]
    fn grad_is_mean_of_samples() {
        let p = logistic_regression_problem(toy()).unwrap();
        let w = [0.3, -0.7, 0.1];
        let batch = [0, 2, 3];
        let direct = p.grad(&w, &batch);
        let via = mean_of(p.per_sample_grads(&w, &batch), p.dim());
        for (a, b) in direct.iter().zip(via.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
