//! Gradient boosting with the multinomial deviance loss: each round fits one
//! depth-limited regression tree per class to the residuals `y − p` and sets
//! leaf values by a single Newton step.

use serde::{Deserialize, Serialize};

use super::softmax;
use super::tree::{grow, SquaredErrorTarget, Tree, TreeParams};
use super::ClassProbs;
use crate::seed::rng_from_seed;
use crate::signal::{PdLabel, NUM_CLASSES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostingHyper {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
}

impl Default for BoostingHyper {
    fn default() -> Self {
        BoostingHyper {
            rounds: 100,
            max_depth: 3,
            learning_rate: 0.1,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoosting {
    pub learning_rate: f64,
    /// `rounds × classes` trees.
    pub trees: Vec<Vec<Tree<f64>>>,
    /// Set when training saw a single class; predictions are then certain.
    pub constant: Option<PdLabel>,
}

fn log_loss(scores: &[ClassProbs], y: &[PdLabel]) -> f64 {
    scores
        .iter()
        .zip(y)
        .map(|(z, l)| {
            let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            lse - z[l.code()]
        })
        .sum::<f64>()
        / y.len() as f64
}

impl GradientBoosting {
    /// Fits the model and returns the mean training log-loss before the
    /// first round and after every round.
    pub fn fit_with_trace(
        x: &[Vec<f64>],
        y: &[PdLabel],
        seed: u64,
        hyper: &BoostingHyper,
    ) -> (GradientBoosting, Vec<f64>) {
        let first = y[0];
        if y.iter().all(|&l| l == first) {
            let model = GradientBoosting {
                learning_rate: hyper.learning_rate,
                trees: Vec::new(),
                constant: Some(first),
            };
            return (model, vec![0.0]);
        }
        let n = x.len();
        let k = NUM_CLASSES as f64;
        let params = TreeParams {
            max_depth: Some(hyper.max_depth),
            min_samples_leaf: hyper.min_samples_leaf,
            max_features: None,
        };
        // all features are examined at every split, so the rng only breaks no ties
        let mut rng = rng_from_seed(seed);
        let mut scores = vec![[0.0; NUM_CLASSES]; n];
        let mut trace = vec![log_loss(&scores, y)];
        let mut trees = Vec::with_capacity(hyper.rounds);
        for _ in 0..hyper.rounds {
            let probs: Vec<ClassProbs> = scores.iter().map(|z| softmax(*z)).collect();
            let mut round = Vec::with_capacity(NUM_CLASSES);
            for class in 0..NUM_CLASSES {
                let residual: Vec<f64> = probs
                    .iter()
                    .zip(y)
                    .map(|(p, l)| if l.code() == class { 1.0 } else { 0.0 } - p[class])
                    .collect();
                let leaf_value = |idx: &[usize]| {
                    let num: f64 = idx.iter().map(|&i| residual[i]).sum();
                    let den: f64 = idx.iter().map(|&i| residual[i].abs() * (1.0 - residual[i].abs())).sum();
                    if den.abs() < 1e-150 {
                        0.0
                    } else {
                        (k - 1.0) / k * num / den
                    }
                };
                let target = SquaredErrorTarget {
                    targets: &residual,
                    leaf_value,
                };
                let tree = grow(x, &target, (0..n).collect(), params, &mut rng);
                round.push(tree);
            }
            for (z, row) in scores.iter_mut().zip(x) {
                for (zk, tree) in z.iter_mut().zip(&round) {
                    *zk += hyper.learning_rate * tree.leaf_for(row);
                }
            }
            trees.push(round);
            trace.push(log_loss(&scores, y));
        }
        let model = GradientBoosting {
            learning_rate: hyper.learning_rate,
            trees,
            constant: None,
        };
        (model, trace)
    }

    pub fn predict_proba_row(&self, row: &[f64]) -> ClassProbs {
        if let Some(l) = self.constant {
            let mut p = [0.0; NUM_CLASSES];
            p[l.code()] = 1.0;
            return p;
        }
        let mut z = [0.0; NUM_CLASSES];
        for round in &self.trees {
            for (zk, tree) in z.iter_mut().zip(round) {
                *zk += self.learning_rate * tree.leaf_for(row);
            }
        }
        softmax(z)
    }
}
