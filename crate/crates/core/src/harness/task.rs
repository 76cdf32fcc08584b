//! Synthetic learning tasks with closed-form per-sample gradients.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskKind {
    Logistic,
    LeastSquares,
    /// One tanh hidden layer, scalar output, squared loss.
    Mlp { hidden: usize },
}

/// Provides `sum_{j in samples} grad l_j(w)` for a model with `dim()` parameters.
pub trait GradientModel: Sync {
    fn dim(&self) -> usize;

    fn samples(&self) -> usize;

    fn sample_loss(&self, w: &[f64], sample: usize) -> f64;

    /// Add `grad l_sample(w)` into `out`.
    fn add_sample_gradient(&self, w: &[f64], sample: usize, out: &mut [f64]);

    /// Sum of per-sample gradients over `samples`, accumulated in order.
    fn file_gradient(&self, w: &[f64], samples: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for &s in samples {
            self.add_sample_gradient(w, s, &mut out);
        }
        out
    }

    /// Mean loss over the whole dataset.
    fn loss(&self, w: &[f64]) -> f64 {
        let n = self.samples();
        (0..n).map(|s| self.sample_loss(w, s)).sum::<f64>() / n as f64
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticTask {
    kind: TaskKind,
    inputs: usize,
    features: Vec<Vec<f64>>,
    targets: Vec<f64>,
    /// Parameters that generated the targets.
    teacher: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Reproducible dataset of `n` samples with `d` input features.
pub fn synthetic_task(kind: TaskKind, n: usize, d: usize, seed: u64) -> Result<SyntheticTask> {
    if n == 0 || d == 0 {
        return Err(Error::invalid(format!("synthetic task needs n, d >= 1, got n = {n}, d = {d}")));
    }
    if let TaskKind::Mlp { hidden: 0 } = kind {
        return Err(Error::invalid("MLP needs at least one hidden unit"));
    }
    let mut g = rng::derived(seed, stream::DATASET, 0);
    let mut normal = |scale: f64| -> f64 { scale * g.sample::<f64, _>(StandardNormal) };
    let param_dim = model_dim(kind, d);
    let teacher: Vec<f64> = (0..param_dim).map(|_| normal(1.0)).collect();
    let features: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| normal(1.0)).collect()).collect();
    let mut task = SyntheticTask { kind, inputs: d, features, targets: vec![0.0; n], teacher };
    let mut u = rng::derived(seed, stream::DATASET, 1);
    for s in 0..n {
        task.targets[s] = match kind {
            TaskKind::Logistic => {
                let p = sigmoid(dot(&task.features[s], &task.teacher));
                f64::from(u.gen::<f64>() < p)
            }
            TaskKind::LeastSquares => dot(&task.features[s], &task.teacher),
            TaskKind::Mlp { .. } => task.mlp_forward(&task.teacher, s).0,
        };
    }
    Ok(task)
}

fn model_dim(kind: TaskKind, d: usize) -> usize {
    match kind {
        TaskKind::Logistic | TaskKind::LeastSquares => d,
        TaskKind::Mlp { hidden } => hidden * d + 2 * hidden + 1,
    }
}

impl SyntheticTask {
    pub fn kind(&self) -> TaskKind {
        self.kind
    }

    /// The generating parameters; the exact minimizer for least squares.
    pub fn teacher(&self) -> &[f64] {
        &self.teacher
    }

    /// Deterministic starting point for training.
    pub fn initial_weights(&self, seed: u64) -> Vec<f64> {
        let mut g = rng::derived(seed, stream::INIT, 0);
        (0..self.dim()).map(|_| 0.1 * g.sample::<f64, _>(StandardNormal)).collect()
    }

    fn hidden(&self) -> usize {
        match self.kind {
            TaskKind::Mlp { hidden } => hidden,
            _ => 0,
        }
    }

    /// Output and hidden activations of the MLP for one sample.
    fn mlp_forward(&self, w: &[f64], s: usize) -> (f64, Vec<f64>) {
        let (h, d) = (self.hidden(), self.inputs);
        let x = &self.features[s];
        let (w1, rest) = w.split_at(h * d);
        let (b1, rest) = rest.split_at(h);
        let (w2, b2) = rest.split_at(h);
        let act: Vec<f64> = (0..h).map(|i| (dot(&w1[i * d..(i + 1) * d], x) + b1[i]).tanh()).collect();
        (dot(w2, &act) + b2[0], act)
    }
}

impl GradientModel for SyntheticTask {
    fn dim(&self) -> usize {
        model_dim(self.kind, self.inputs)
    }

    fn samples(&self) -> usize {
        self.features.len()
    }

    fn sample_loss(&self, w: &[f64], s: usize) -> f64 {
        let (x, y) = (&self.features[s], self.targets[s]);
        match self.kind {
            TaskKind::Logistic => {
                let z = dot(x, w);
                softplus(z) - y * z
            }
            TaskKind::LeastSquares => 0.5 * (dot(x, w) - y).powi(2),
            TaskKind::Mlp { .. } => 0.5 * (self.mlp_forward(w, s).0 - y).powi(2),
        }
    }

    fn add_sample_gradient(&self, w: &[f64], s: usize, out: &mut [f64]) {
        let (x, y) = (&self.features[s], self.targets[s]);
        match self.kind {
            TaskKind::Logistic => {
                let e = sigmoid(dot(x, w)) - y;
                out.iter_mut().zip(x).for_each(|(o, xi)| *o += e * xi);
            }
            TaskKind::LeastSquares => {
                let e = dot(x, w) - y;
                out.iter_mut().zip(x).for_each(|(o, xi)| *o += e * xi);
            }
            TaskKind::Mlp { hidden: h } => {
                let d = self.inputs;
                let (pred, act) = self.mlp_forward(w, s);
                let e = pred - y;
                let w2 = &w[h * d + h..h * d + 2 * h];
                for i in 0..h {
                    let delta = e * w2[i] * (1.0 - act[i] * act[i]);
                    for (j, xj) in x.iter().enumerate() {
                        out[i * d + j] += delta * xj;
                    }
                    out[h * d + i] += delta;
                    out[h * d + h + i] += e * act[i];
                }
                out[h * d + 2 * h] += e;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn least_squares_optimum_has_zero_gradient() {
        let task = synthetic_task(TaskKind::LeastSquares, 50, 4, 1).unwrap();
        let all: Vec<usize> = (0..50).collect();
        let g = task.file_gradient(task.teacher(), &all);
        assert!(g.iter().all(|x| x.abs() < 1e-12), "{g:?}");
    }

    #[test]
    fn file_gradients_sum_to_batch_gradient() {
        let task = synthetic_task(TaskKind::Logistic, 40, 3, 2).unwrap();
        let w = task.initial_weights(0);
        let all: Vec<usize> = (0..40).collect();
        let whole = task.file_gradient(&w, &all);
        let mut parts = vec![0.0; 3];
        for chunk in all.chunks(8) {
            for (p, g) in parts.iter_mut().zip(task.file_gradient(&w, chunk)) {
                *p += g;
            }
        }
        for (a, b) in whole.iter().zip(&parts) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_dataset() {
        let a = synthetic_task(TaskKind::Mlp { hidden: 4 }, 10, 3, 9).unwrap();
        let b = synthetic_task(TaskKind::Mlp { hidden: 4 }, 10, 3, 9).unwrap();
        assert_eq!(a.targets, b.targets);
        assert_eq!(a.dim(), 4 * 3 + 9);
    }

    #[test]
    fn rejects_empty() {
        assert!(synthetic_task(TaskKind::Logistic, 0, 3, 0).is_err());
        assert!(synthetic_task(TaskKind::Logistic, 3, 0, 0).is_err());
    }
}
