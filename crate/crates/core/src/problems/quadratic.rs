use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Problem;
use crate::error::{check_len, Error, Result};
use crate::vector::{GradientVector, ParamVector};

/// Quadratics carry no data; every batch index refers to this single sample.
const SINGLE_SAMPLE: [usize; 1] = [0];

/// `P(w) = ½ (w - w*)ᵀ A (w - w*)` with `A` symmetric positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProblem {
    a: DMatrix<f64>,
    w_star: Vec<f64>,
}

impl QuadraticProblem {
    pub fn new(a: DMatrix<f64>, w_star: Vec<f64>) -> Result<Self> {
        check_len(a.nrows(), a.ncols())?;
        check_len(a.nrows(), w_star.len())?;
        if a.nrows() == 0 {
            return Err(Error::Precondition("quadratic needs d >= 1".into()));
        }
        if (&a - a.transpose()).amax() > 1e-12 * a.amax().max(1.0) {
            return Err(Error::Precondition(
                "quadratic matrix must be symmetric".into(),
            ));
        }
        if a.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self { a, w_star })
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn w_star(&self) -> &[f64] {
        &self.w_star
    }

    fn offset(&self, w: &[f64]) -> DVector<f64> {
        DVector::from_iterator(w.len(), w.iter().zip(&self.w_star).map(|(a, b)| a - b))
    }

    pub fn value_at(&self, w: &[f64]) -> f64 {
        let r = self.offset(w);
        0.5 * r.dot(&(&self.a * &r))
    }

    pub fn gradient_at(&self, w: &[f64]) -> Result<GradientVector> {
        check_len(self.w_star.len(), w.len())?;
        Ok((&self.a * self.offset(w)).as_slice().to_vec().into())
    }
}

impl Problem for QuadraticProblem {
    fn name(&self) -> &'static str {
        "quadratic"
    }

    fn dim(&self) -> usize {
        self.w_star.len()
    }

    fn train_indices(&self) -> &[usize] {
        &SINGLE_SAMPLE
    }

    fn test_indices(&self) -> &[usize] {
        &SINGLE_SAMPLE
    }

    fn loss(&self, w: &[f64], _batch: &[usize]) -> f64 {
        self.value_at(w)
    }

    fn per_sample_grads(&self, w: &[f64], batch: &[usize]) -> Vec<GradientVector> {
        let g = self.grad(w, batch);
        vec![g; batch.len()]
    }

    fn loss_and_grad(&self, w: &[f64], _batch: &[usize]) -> (f64, GradientVector) {
        let r = self.offset(w);
        let ar = &self.a * &r;
        (0.5 * r.dot(&ar), ar.as_slice().to_vec().into())
    }

    fn exact_hessian(&self, _w: &[f64]) -> Option<DMatrix<f64>> {
        Some(self.a.clone())
    }

    fn initial_params(&self, _seed: u64) -> ParamVector {
        ParamVector::new(vec![0.0; self.dim()]).expect("d >= 1")
    }
}

fn check_shape(dim: usize, condition_number: f64) -> Result<()> {
    if dim == 0 {
        return Err(Error::Precondition("quadratic needs d >= 1".into()));
    }
    if !(condition_number >= 1.0 && condition_number.is_finite()) {
        return Err(Error::Precondition(format!(
            "condition number must be >= 1, got {condition_number}"
        )));
    }
    Ok(())
}

/// Eigenvalues geometrically spaced from 1 to `condition_number`.
fn spectrum(dim: usize, condition_number: f64) -> Vec<f64> {
    if dim == 1 {
        return vec![1.0];
    }
    (0..dim)
        .map(|i| condition_number.powf(i as f64 / (dim - 1) as f64))
        .collect()
}

/// Random quadratic with eigenvalues log-uniformly spread over
/// `[1, condition_number]` under a Haar-random rotation, and a random
/// minimizer drawn from N(0, I).
pub fn make_quadratic(dim: usize, condition_number: f64, seed: u64) -> Result<QuadraticProblem> {
    check_shape(dim, condition_number)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaussian: DMatrix<f64> = DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(&mut rng));
    let qr = gaussian.qr();
    let r = qr.r();
    let mut q = qr.q();
    // Sign-fix so Q is uniformly distributed over the orthogonal group.
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let lambda = DMatrix::from_diagonal(&DVector::from_vec(spectrum(dim, condition_number)));
    let a: DMatrix<f64> = &q * lambda * q.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let w_star = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    QuadraticProblem::new(a, w_star)
}

/// Axis-aligned quadratic `½ Σ λᵢ (wᵢ - w*ᵢ)²`. Gradients cost O(d), which is
/// what the update-cost scaling measurement needs at large `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableQuadratic {
    diag: Vec<f64>,
    w_star: Vec<f64>,
}

pub fn make_separable_quadratic(
    dim: usize,
    condition_number: f64,
    seed: u64,
) -> Result<SeparableQuadratic> {
    check_shape(dim, condition_number)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log_cond = condition_number.ln();
    let diag = (0..dim)
        .map(|_| (rng.random::<f64>() * log_cond).exp())
        .collect();
    let w_star = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    Ok(SeparableQuadratic { diag, w_star })
}

impl SeparableQuadratic {
    pub fn gradient_into(&self, w: &[f64], out: &mut [f64]) {
        for ((o, (wi, ws)), l) in out
            .iter_mut()
            .zip(w.iter().zip(&self.w_star))
            .zip(&self.diag)
        {
            *o = l * (wi - ws);
        }
    }
}

impl Problem for SeparableQuadratic {
    fn name(&self) -> &'static str {
        "separable_quadratic"
    }

    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn train_indices(&self) -> &[usize] {
        &SINGLE_SAMPLE
    }

    fn test_indices(&self) -> &[usize] {
        &SINGLE_SAMPLE
    }

    fn loss(&self, w: &[f64], _batch: &[usize]) -> f64 {
        w.iter()
            .zip(&self.w_star)
            .zip(&self.diag)
            .map(|((wi, ws), l)| 0.5 * l * (wi - ws).powi(2))
            .sum()
    }

    fn per_sample_grads(&self, w: &[f64], batch: &[usize]) -> Vec<GradientVector> {
        vec![self.grad(w, batch); batch.len()]
    }

    fn loss_and_grad(&self, w: &[f64], batch: &[usize]) -> (f64, GradientVector) {
        let mut g = vec![0.0; self.dim()];
        self.gradient_into(w, &mut g);
        (self.loss(w, batch), g.into())
    }

    fn exact_hessian(&self, _w: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_diagonal(&DVector::from_column_slice(
            &self.diag,
        )))
    }

    fn initial_params(&self, _seed: u64) -> ParamVector {
        ParamVector::new(vec![0.0; self.dim()]).expect("d >= 1")
    }
}
