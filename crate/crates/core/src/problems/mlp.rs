//! One-hidden-layer classifier with softmax cross-entropy and hand-written
//! backpropagation.
//!
//! Parameter layout in the flat vector, for widths `[p, h, C]`:
//!
//! | block | shape   | order     |
//! |-------|---------|-----------|
//! | `W1`  | `h × p` | row-major |
//! | `b1`  | `h`     |           |
//! | `W2`  | `C × h` | row-major |
//! | `b2`  | `C`     |           |

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{argmax, softmax_into, Dataset, Problem};
use crate::error::{check_len, Error, Result};
use crate::vector::{GradientVector, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    /// Subgradient 0 at the kink.
    Relu,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpSpec {
    pub inputs: usize,
    pub hidden: usize,
    pub classes: usize,
    pub activation: Activation,
}

impl MlpSpec {
    pub fn param_count(&self) -> usize {
        self.hidden * self.inputs + self.hidden + self.classes * self.hidden + self.classes
    }
}

/// Unflattened view of the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpLayers {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MlpProblem {
    data: Arc<Dataset>,
    spec: MlpSpec,
    init_seed: u64,
}

pub fn mlp_problem(data: Arc<Dataset>, spec: MlpSpec, init_seed: u64) -> Result<MlpProblem> {
    if spec.inputs == 0 || spec.hidden == 0 || spec.classes < 2 {
        return Err(Error::Precondition(format!("invalid MLP widths {spec:?}")));
    }
    if spec.inputs != data.n_features() {
        return Err(Error::Precondition(format!(
            "MLP expects {} inputs but the dataset has {} features",
            spec.inputs,
            data.n_features()
        )));
    }
    if let Some(&y) = data.labels().iter().find(|&&y| y >= spec.classes) {
        return Err(Error::Data(format!(
            "label {y} outside 0..{}",
            spec.classes
        )));
    }
    Ok(MlpProblem {
        data,
        spec,
        init_seed,
    })
}

struct Offsets {
    b1: usize,
    w2: usize,
    b2: usize,
}

/// Per-sample scratch buffers.
struct Scratch {
    z1: Vec<f64>,
    a1: Vec<f64>,
    z2: Vec<f64>,
    prob: Vec<f64>,
    delta1: Vec<f64>,
}

impl MlpProblem {
    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    fn offsets(&self) -> Offsets {
        let MlpSpec {
            inputs,
            hidden,
            classes,
            ..
        } = self.spec;
        let b1 = hidden * inputs;
        let w2 = b1 + hidden;
        Offsets {
            b1,
            w2,
            b2: w2 + classes * hidden,
        }
    }

    fn scratch(&self) -> Scratch {
        let (h, c) = (self.spec.hidden, self.spec.classes);
        Scratch {
            z1: vec![0.0; h],
            a1: vec![0.0; h],
            z2: vec![0.0; c],
            prob: vec![0.0; c],
            delta1: vec![0.0; h],
        }
    }

    pub fn unflatten(&self, w: &[f64]) -> Result<MlpLayers> {
        check_len(self.spec.param_count(), w.len())?;
        let o = self.offsets();
        Ok(MlpLayers {
            w1: w[..o.b1].to_vec(),
            b1: w[o.b1..o.w2].to_vec(),
            w2: w[o.w2..o.b2].to_vec(),
            b2: w[o.b2..].to_vec(),
        })
    }

    pub fn flatten(&self, layers: &MlpLayers) -> Result<Vec<f64>> {
        let MlpSpec {
            inputs,
            hidden,
            classes,
            ..
        } = self.spec;
        check_len(hidden * inputs, layers.w1.len())?;
        check_len(hidden, layers.b1.len())?;
        check_len(classes * hidden, layers.w2.len())?;
        check_len(classes, layers.b2.len())?;
        Ok([&layers.w1[..], &layers.b1, &layers.w2, &layers.b2].concat())
    }

    fn forward(&self, w: &[f64], i: usize, s: &mut Scratch) {
        let MlpSpec {
            inputs,
            hidden,
            activation,
            ..
        } = self.spec;
        let o = self.offsets();
        let x = self.data.row(i);
        for j in 0..hidden {
            let row = &w[j * inputs..(j + 1) * inputs];
            let z = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[o.b1 + j];
            s.z1[j] = z;
            s.a1[j] = activation.apply(z);
        }
        for (c, z) in s.z2.iter_mut().enumerate() {
            let row = &w[o.w2 + c * hidden..o.w2 + (c + 1) * hidden];
            *z = row.iter().zip(&s.a1).map(|(a, b)| a * b).sum::<f64>() + w[o.b2 + c];
        }
    }

    fn sample_loss(&self, w: &[f64], i: usize, s: &mut Scratch) -> f64 {
        self.forward(w, i, s);
        super::log_sum_exp(&s.z2) - s.z2[self.data.label(i)]
    }

    /// Adds `scale · ∇pᵢ` into `out` and returns the per-sample loss.
    fn backward(&self, w: &[f64], i: usize, scale: f64, s: &mut Scratch, out: &mut [f64]) -> f64 {
        let MlpSpec {
            inputs,
            hidden,
            activation,
            ..
        } = self.spec;
        let o = self.offsets();
        self.forward(w, i, s);
        let lse = softmax_into(&s.z2, &mut s.prob);
        let y = self.data.label(i);
        let x = self.data.row(i);

        s.delta1.iter_mut().for_each(|d| *d = 0.0);
        for (c, &pc) in s.prob.iter().enumerate() {
            let delta2 = pc - if c == y { 1.0 } else { 0.0 };
            let w2_row = o.w2 + c * hidden;
            for j in 0..hidden {
                out[w2_row + j] += scale * delta2 * s.a1[j];
                s.delta1[j] += w[w2_row + j] * delta2;
            }
            out[o.b2 + c] += scale * delta2;
        }
        for j in 0..hidden {
            let d = s.delta1[j] * activation.derivative(s.z1[j], s.a1[j]) * scale;
            if d != 0.0 {
                for (g, xk) in out[j * inputs..(j + 1) * inputs].iter_mut().zip(x) {
                    *g += d * xk;
                }
            }
            out[o.b1 + j] += d;
        }
        lse - s.z2[y]
    }

    /// Coordinates whose central difference with step `h` cannot cross a
    /// ReLU kink on `batch`: all of the output layer, plus the incoming
    /// weights of hidden units whose pre-activation stays clear of zero.
    pub fn kink_free_coordinates(&self, w: &[f64], batch: &[usize], h: f64) -> Vec<usize> {
        let MlpSpec { inputs, hidden, .. } = self.spec;
        let o = self.offsets();
        let mut s = self.scratch();
        let mut safe = vec![true; hidden];
        for &i in batch {
            self.forward(w, i, &mut s);
            let reach = 2.0 * h * self.data.row(i).iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (ok, z) in safe.iter_mut().zip(&s.z1) {
                *ok &= z.abs() > reach;
            }
        }
        let mut coords = Vec::new();
        for (j, _) in safe.iter().enumerate().filter(|(_, &ok)| ok) {
            coords.extend(j * inputs..(j + 1) * inputs);
            coords.push(o.b1 + j);
        }
        coords.extend(o.w2..self.spec.param_count());
        coords
    }
}

impl Problem for MlpProblem {
    fn name(&self) -> &'static str {
        "mlp"
    }

    fn dim(&self) -> usize {
        self.spec.param_count()
    }

    fn train_indices(&self) -> &[usize] {
        self.data.train()
    }

    fn test_indices(&self) -> &[usize] {
        self.data.test()
    }

    fn loss(&self, w: &[f64], batch: &[usize]) -> f64 {
        assert_eq!(w.len(), self.dim());
        let mut s = self.scratch();
        batch
            .iter()
            .map(|&i| self.sample_loss(w, i, &mut s))
            .sum::<f64>()
            / batch.len() as f64
    }

    fn per_sample_grads(&self, w: &[f64], batch: &[usize]) -> Vec<GradientVector> {
        assert_eq!(w.len(), self.dim());
        let mut s = self.scratch();
        batch
            .iter()
            .map(|&i| {
                let mut g = vec![0.0; self.dim()];
                self.backward(w, i, 1.0, &mut s, &mut g);
                g.into()
            })
            .collect()
    }

    fn loss_and_grad(&self, w: &[f64], batch: &[usize]) -> (f64, GradientVector) {
        assert_eq!(w.len(), self.dim());
        let scale = 1.0 / batch.len() as f64;
        let mut s = self.scratch();
        let mut g = vec![0.0; self.dim()];
        let mut loss = 0.0;
        for &i in batch {
            loss += self.backward(w, i, scale, &mut s, &mut g);
        }
        (loss * scale, g.into())
    }

    fn accuracy(&self, w: &[f64], batch: &[usize]) -> Option<f64> {
        if batch.is_empty() {
            return None;
        }
        let mut s = self.scratch();
        let correct = batch
            .iter()
            .filter(|&&i| {
                self.forward(w, i, &mut s);
                argmax(&s.z2) == self.data.label(i)
            })
            .count();
        Some(correct as f64 / batch.len() as f64)
    }

    /// Uniform in `±1/√fan_in` per layer, seeded by the problem's init seed
    /// mixed with `seed`.
    fn initial_params(&self, seed: u64) -> ParamVector {
        let MlpSpec { inputs, hidden, .. } = self.spec;
        let o = self.offsets();
        let mut rng = ChaCha8Rng::seed_from_u64(self.init_seed ^ seed.rotate_left(32));
        let bound1 = 1.0 / (inputs as f64).sqrt();
        let bound2 = 1.0 / (hidden as f64).sqrt();
        let w = (0..self.dim())
            .map(|k| {
                let bound = if k < o.w2 { bound1 } else { bound2 };
                rng.random_range(-bound..=bound)
            })
            .collect();
        ParamVector::new(w).expect("finite init")
    }
}
