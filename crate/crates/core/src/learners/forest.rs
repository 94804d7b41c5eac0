//! Random forest of unpruned Gini trees on bootstrap resamples.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, GiniTarget, Tree, TreeParams};
use super::{argmax, ClassProbs};
use crate::seed::{derive_seed, rng_from_seed, stream};
use crate::signal::{PdLabel, NUM_CLASSES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestHyper {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features tried per split; `None` means ⌈√k⌉.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestHyper {
    fn default() -> Self {
        ForestHyper {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            max_features: None,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<Tree<ClassProbs>>,
}

impl RandomForest {
    pub fn fit(x: &[Vec<f64>], y: &[PdLabel], seed: u64, hyper: &ForestHyper) -> RandomForest {
        let labels: Vec<usize> = y.iter().map(|l| l.code()).collect();
        let width = x[0].len();
        let params = TreeParams {
            max_depth: hyper.max_depth,
            min_samples_leaf: hyper.min_samples_leaf,
            max_features: Some(
                hyper
                    .max_features
                    .unwrap_or_else(|| (width as f64).sqrt().ceil() as usize),
            ),
        };
        let n = x.len();
        let trees = (0..hyper.n_trees.max(1))
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_from_seed(derive_seed(seed, stream::TREE, t as u64));
                let sample = if hyper.bootstrap {
                    (0..n).map(|_| rng.gen_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                grow(x, &GiniTarget { labels: &labels }, sample, params, &mut rng)
            })
            .collect();
        RandomForest { trees }
    }

    /// Fraction of trees voting for each class.
    pub fn predict_proba_row(&self, row: &[f64]) -> ClassProbs {
        let mut votes = [0.0; NUM_CLASSES];
        for t in &self.trees {
            votes[argmax(t.leaf_for(row)).code()] += 1.0;
        }
        let n = self.trees.len() as f64;
        votes.iter_mut().for_each(|v| *v /= n);
        votes
    }
}
