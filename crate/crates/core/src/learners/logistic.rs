//! Multinomial logistic regression trained by full-batch gradient descent.

use serde::{Deserialize, Serialize};

use super::{softmax, ClassProbs};
use crate::signal::{PdLabel, NUM_CLASSES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticHyper {
    pub learning_rate: f64,
    pub iterations: usize,
    /// L2 penalty on the weights (not the intercepts).
    pub l2: f64,
}

impl Default for LogisticHyper {
    fn default() -> Self {
        LogisticHyper {
            learning_rate: 0.1,
            iterations: 500,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// One weight row per class.
    pub weights: Vec<Vec<f64>>,
    pub bias: [f64; NUM_CLASSES],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<Vec<f64>>,
    pub bias: [f64; NUM_CLASSES],
}

impl LogisticModel {
    pub fn zeros(width: usize) -> Self {
        LogisticModel {
            weights: vec![vec![0.0; width]; NUM_CLASSES],
            bias: [0.0; NUM_CLASSES],
        }
    }

    fn scores(&self, row: &[f64]) -> ClassProbs {
        let mut z = self.bias;
        for (zk, w) in z.iter_mut().zip(&self.weights) {
            *zk += w.iter().zip(row).map(|(a, b)| a * b).sum::<f64>();
        }
        z
    }

    pub fn predict_proba_row(&self, row: &[f64]) -> ClassProbs {
        softmax(self.scores(row))
    }

    /// Mean negative log-likelihood plus `l2/2 · ‖W‖²`.
    pub fn loss(&self, x: &[Vec<f64>], y: &[PdLabel], l2: f64) -> f64 {
        let nll: f64 = x
            .iter()
            .zip(y)
            .map(|(row, label)| {
                let z = self.scores(row);
                let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
                lse - z[label.code()]
            })
            .sum();
        nll / x.len() as f64 + 0.5 * l2 * self.weight_norm_sq()
    }

    fn weight_norm_sq(&self) -> f64 {
        self.weights.iter().flatten().map(|w| w * w).sum()
    }

    pub fn loss_and_gradient(&self, x: &[Vec<f64>], y: &[PdLabel], l2: f64) -> (f64, Gradient) {
        let n = x.len() as f64;
        let width = self.weights[0].len();
        let mut gw = vec![vec![0.0; width]; NUM_CLASSES];
        let mut gb = [0.0; NUM_CLASSES];
        let mut nll = 0.0;
        for (row, label) in x.iter().zip(y) {
            let p = self.predict_proba_row(row);
            nll -= p[label.code()].max(f64::MIN_POSITIVE).ln();
            for k in 0..NUM_CLASSES {
                let r = p[k] - if k == label.code() { 1.0 } else { 0.0 };
                gb[k] += r / n;
                for (g, v) in gw[k].iter_mut().zip(row) {
                    *g += r * v / n;
                }
            }
        }
        for (gk, wk) in gw.iter_mut().zip(&self.weights) {
            for (g, w) in gk.iter_mut().zip(wk) {
                *g += l2 * w;
            }
        }
        let loss = nll / n + 0.5 * l2 * self.weight_norm_sq();
        (loss, Gradient { weights: gw, bias: gb })
    }

    fn stepped(&self, g: &Gradient, step: f64) -> LogisticModel {
        let mut next = self.clone();
        for (wk, gk) in next.weights.iter_mut().zip(&g.weights) {
            for (w, gv) in wk.iter_mut().zip(gk) {
                *w -= step * gv;
            }
        }
        for (b, gv) in next.bias.iter_mut().zip(&g.bias) {
            *b -= step * gv;
        }
        next
    }

    /// Gradient descent from zero weights. The step starts at the configured
    /// learning rate each iteration and is halved until the objective does
    /// not increase. Returns the objective after every accepted iteration.
    pub fn fit_with_trace(x: &[Vec<f64>], y: &[PdLabel], hyper: &LogisticHyper) -> (LogisticModel, Vec<f64>) {
        let mut model = LogisticModel::zeros(x[0].len());
        let (mut loss, mut grad) = model.loss_and_gradient(x, y, hyper.l2);
        let mut trace = vec![loss];
        'outer: for _ in 0..hyper.iterations {
            let mut step = hyper.learning_rate;
            loop {
                let candidate = model.stepped(&grad, step);
                let (c_loss, c_grad) = candidate.loss_and_gradient(x, y, hyper.l2);
                if c_loss <= loss {
                    model = candidate;
                    loss = c_loss;
                    grad = c_grad;
                    trace.push(loss);
                    break;
                }
                step *= 0.5;
                if step < hyper.learning_rate * 1e-10 {
                    break 'outer;
                }
            }
        }
        (model, trace)
    }
}
