//! Central finite-difference checks of the analytic gradients.

use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{
    logistic_regression_problem, make_blobs, make_quadratic, mlp_problem,
    softmax_regression_problem, Activation, MlpSpec, Problem,
};
use crate::error::Result;

pub const DEFAULT_STEP: f64 = 1e-5;

/// `(f(w + h eₖ) - f(w - h eₖ)) / 2h` for each coordinate `k` in `coords`.
pub fn central_difference(
    f: impl Fn(&[f64]) -> f64,
    w: &[f64],
    h: f64,
    coords: &[usize],
) -> Vec<f64> {
    let mut probe = w.to_vec();
    coords
        .iter()
        .map(|&k| {
            probe[k] = w[k] + h;
            let up = f(&probe);
            probe[k] = w[k] - h;
            let down = f(&probe);
            probe[k] = w[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖a - b‖ / max(‖a‖, ‖b‖)`, and 0 when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut a.iter().zip(b).map(|(x, y)| x - y));
    let scale = norm(&mut a.iter().copied()).max(norm(&mut b.iter().copied()));
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Relative error between the analytic gradient and central differences
/// on the selected coordinates (all of them when `coords` is `None`).
pub fn gradient_error(
    problem: &dyn Problem,
    w: &[f64],
    batch: &[usize],
    h: f64,
    coords: Option<&[usize]>,
) -> f64 {
    let all: Vec<usize>;
    let coords = match coords {
        Some(c) => c,
        None => {
            all = (0..problem.dim()).collect();
            &all
        }
    };
    let analytic = problem.grad(w, batch);
    let picked: Vec<f64> = coords.iter().map(|&k| analytic[k]).collect();
    let numeric = central_difference(|x| problem.loss(x, batch), w, h, coords);
    relative_error(&picked, &numeric)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub problem: String,
    pub points: usize,
    pub max_relative_error: f64,
    pub tolerance: f64,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.max_relative_error <= self.tolerance
    }
}

fn random_point(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect()
}

fn random_batch(rng: &mut ChaCha8Rng, indices: &[usize], size: usize) -> Vec<usize> {
    indices
        .choose_multiple(rng, size.min(indices.len()))
        .copied()
        .collect()
}

fn check(
    name: &str,
    problem: &dyn Problem,
    points: usize,
    tolerance: f64,
    scale: f64,
    rng: &mut ChaCha8Rng,
    coords: impl Fn(&[f64], &[usize]) -> Option<Vec<usize>>,
) -> GradcheckReport {
    let mut worst = 0.0f64;
    for _ in 0..points {
        let w = random_point(rng, problem.dim(), scale);
        let batch = random_batch(rng, problem.train_indices(), 16);
        let subset = coords(&w, &batch);
        let err = gradient_error(problem, &w, &batch, DEFAULT_STEP, subset.as_deref());
        worst = worst.max(err);
    }
    GradcheckReport {
        problem: name.to_string(),
        points,
        max_relative_error: worst,
        tolerance,
    }
}

/// Finite-difference checks of every built-in problem at `points` random
/// parameter vectors each.
pub fn default_suite(points: usize, seed: u64) -> Result<Vec<GradcheckReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::new();

    let quad = make_quadratic(20, 10.0, rng.random())?;
    reports.push(check(
        "quadratic",
        &quad,
        points,
        1e-8,
        1.0,
        &mut rng,
        |_, _| None,
    ));

    let binary = Arc::new(make_blobs(200, 10, 2, 2.0, rng.random())?);
    let logistic = logistic_regression_problem(binary)?;
    reports.push(check(
        "logistic",
        &logistic,
        points,
        1e-6,
        0.5,
        &mut rng,
        |_, _| None,
    ));

    let multi = Arc::new(make_blobs(300, 8, 4, 2.0, rng.random())?);
    let softmax = softmax_regression_problem(multi.clone(), 4)?;
    reports.push(check(
        "softmax",
        &softmax,
        points,
        1e-6,
        0.5,
        &mut rng,
        |_, _| None,
    ));

    let spec = MlpSpec {
        inputs: 8,
        hidden: 12,
        classes: 4,
        activation: Activation::Tanh,
    };
    let tanh = mlp_problem(multi.clone(), spec, rng.random())?;
    reports.push(check(
        "mlp_tanh",
        &tanh,
        points,
        1e-5,
        0.5,
        &mut rng,
        |_, _| None,
    ));

    let relu = mlp_problem(
        multi,
        MlpSpec {
            activation: Activation::Relu,
            ..spec
        },
        rng.random(),
    )?;
    let relu_ref = &relu;
    reports.push(check(
        "mlp_relu",
        relu_ref,
        points,
        1e-4,
        0.5,
        &mut rng,
        |w, batch| Some(relu_ref.kink_free_coordinates(w, batch, DEFAULT_STEP)),
    ));

    Ok(reports)
}
