//! CART trees: Gini classification trees for the forest and squared-error
//! regression trees for boosting.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::signal::NUM_CLASSES;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features examined per split; `None` examines all.
    pub max_features: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node<V> {
    Leaf(V),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<V> {
    pub nodes: Vec<Node<V>>,
}

impl<V> Tree<V> {
    pub fn leaf_for(&self, row: &[f64]) -> &V {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk<V>(t: &Tree<V>, at: usize) -> usize {
            match &t.nodes[at] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(t, *left).max(walk(t, *right)),
            }
        }
        walk(self, 0)
    }
}

/// Split criterion and leaf construction for one kind of target.
pub(crate) trait Target {
    type Acc: Clone;
    type Value;

    fn empty(&self) -> Self::Acc;
    fn add(&self, acc: &mut Self::Acc, i: usize);
    fn remove(&self, acc: &mut Self::Acc, i: usize);
    /// Purity proxy of one child; the split maximising the children's sum
    /// minimises the weighted impurity.
    fn proxy(&self, acc: &Self::Acc, n: usize) -> f64;
    fn is_pure(&self, idx: &[usize]) -> bool;
    fn leaf(&self, idx: &[usize]) -> Self::Value;
}

/// Class labels as codes; leaves hold the class distribution.
pub(crate) struct GiniTarget<'a> {
    pub labels: &'a [usize],
}

impl Target for GiniTarget<'_> {
    type Acc = [f64; NUM_CLASSES];
    type Value = [f64; NUM_CLASSES];

    fn empty(&self) -> Self::Acc {
        [0.0; NUM_CLASSES]
    }
    fn add(&self, acc: &mut Self::Acc, i: usize) {
        acc[self.labels[i]] += 1.0;
    }
    fn remove(&self, acc: &mut Self::Acc, i: usize) {
        acc[self.labels[i]] -= 1.0;
    }
    fn proxy(&self, acc: &Self::Acc, n: usize) -> f64 {
        acc.iter().map(|c| c * c).sum::<f64>() / n as f64
    }
    fn is_pure(&self, idx: &[usize]) -> bool {
        idx.iter().all(|&i| self.labels[i] == self.labels[idx[0]])
    }
    fn leaf(&self, idx: &[usize]) -> Self::Value {
        let mut dist = [0.0; NUM_CLASSES];
        for &i in idx {
            dist[self.labels[i]] += 1.0;
        }
        dist.iter_mut().for_each(|d| *d /= idx.len() as f64);
        dist
    }
}

/// Real-valued targets with a caller-supplied leaf value.
pub(crate) struct SquaredErrorTarget<'a, F: Fn(&[usize]) -> f64> {
    pub targets: &'a [f64],
    pub leaf_value: F,
}

impl<F: Fn(&[usize]) -> f64> Target for SquaredErrorTarget<'_, F> {
    type Acc = f64;
    type Value = f64;

    fn empty(&self) -> f64 {
        0.0
    }
    fn add(&self, acc: &mut f64, i: usize) {
        *acc += self.targets[i];
    }
    fn remove(&self, acc: &mut f64, i: usize) {
        *acc -= self.targets[i];
    }
    fn proxy(&self, acc: &f64, n: usize) -> f64 {
        acc * acc / n as f64
    }
    fn is_pure(&self, idx: &[usize]) -> bool {
        idx.iter().all(|&i| self.targets[i] == self.targets[idx[0]])
    }
    fn leaf(&self, idx: &[usize]) -> f64 {
        (self.leaf_value)(idx)
    }
}

struct Builder<'a, T: Target, R: Rng> {
    x: &'a [Vec<f64>],
    target: &'a T,
    params: TreeParams,
    rng: &'a mut R,
    nodes: Vec<Node<T::Value>>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

/// Grows a tree on the rows listed in `sample` (duplicates allowed, as
/// produced by bootstrap resampling).
pub(crate) fn grow<T: Target, R: Rng>(
    x: &[Vec<f64>],
    target: &T,
    sample: Vec<usize>,
    params: TreeParams,
    rng: &mut R,
) -> Tree<T::Value> {
    let mut b = Builder {
        x,
        target,
        params,
        rng,
        nodes: Vec::new(),
    };
    b.build(sample, 0);
    Tree { nodes: b.nodes }
}

impl<T: Target, R: Rng> Builder<'_, T, R> {
    fn build(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let at = self.nodes.len();
        let stop = self.params.max_depth.is_some_and(|d| depth >= d)
            || idx.len() < 2 * self.params.min_samples_leaf.max(1)
            || self.target.is_pure(&idx);
        let split = if stop { None } else { self.best_split(&idx) };
        match split {
            None => {
                self.nodes.push(Node::Leaf(self.target.leaf(&idx)));
                at
            }
            Some(s) => {
                self.nodes.push(Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left: 0,
                    right: 0,
                });
                let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x[i][s.feature] <= s.threshold);
                let left = self.build(l, depth + 1);
                let right = self.build(r, depth + 1);
                if let Node::Split {
                    left: lp, right: rp, ..
                } = &mut self.nodes[at]
                {
                    *lp = left;
                    *rp = right;
                }
                at
            }
        }
    }

    fn best_split(&mut self, idx: &[usize]) -> Option<BestSplit> {
        let width = self.x[idx[0]].len();
        let mut features: Vec<usize> = (0..width).collect();
        let wanted = self.params.max_features.unwrap_or(width).clamp(1, width);
        if wanted < width {
            features.shuffle(self.rng);
        }
        let mut best: Option<BestSplit> = None;
        for (visited, &f) in features.iter().enumerate() {
            // keep drawing features beyond the quota until one can split
            if visited >= wanted && best.is_some() {
                break;
            }
            if let Some(s) = self.best_threshold(idx, f) {
                if best.as_ref().is_none_or(|b| s.score > b.score) {
                    best = Some(s);
                }
            }
        }
        best
    }

    fn best_threshold(&self, idx: &[usize], feature: usize) -> Option<BestSplit> {
        let mut order: Vec<usize> = idx.to_vec();
        order.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]));
        let n = order.len();
        let min_leaf = self.params.min_samples_leaf.max(1);
        let mut left = self.target.empty();
        let mut right = self.target.empty();
        for &i in &order {
            self.target.add(&mut right, i);
        }
        let mut best: Option<BestSplit> = None;
        for pos in 0..n - 1 {
            let i = order[pos];
            self.target.add(&mut left, i);
            self.target.remove(&mut right, i);
            let nl = pos + 1;
            let (v, next) = (self.x[i][feature], self.x[order[pos + 1]][feature]);
            if v == next || nl < min_leaf || n - nl < min_leaf {
                continue;
            }
            let score = self.target.proxy(&left, nl) + self.target.proxy(&right, n - nl);
            if best.as_ref().is_none_or(|b| score > b.score) {
                let mid = v + (next - v) / 2.0;
                let threshold = if mid < next { mid } else { v };
                best = Some(BestSplit {
                    feature,
                    threshold,
                    score,
                });
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stump_separates_obvious_threshold() {
        let x = vec![vec![0.0], vec![1.0], vec![10.0], vec![11.0]];
        let labels = [0, 0, 1, 1];
        let params = TreeParams {
            max_depth: Some(1),
            min_samples_leaf: 1,
            max_features: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = grow(&x, &GiniTarget { labels: &labels }, (0..4).collect(), params, &mut rng);
        assert_eq!(t.depth(), 1);
        assert_eq!(
            t.nodes[0],
            Node::Split {
                feature: 0,
                threshold: 5.5,
                left: 1,
                right: 2
            }
        );
        for (row, &l) in x.iter().zip(&labels) {
            assert_eq!(t.leaf_for(row)[l], 1.0);
        }
    }

    #[test]
    fn unlimited_tree_fits_xor() {
        let x = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let labels = [0, 1, 1, 0];
        let params = TreeParams {
            max_depth: None,
            min_samples_leaf: 1,
            max_features: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = grow(&x, &GiniTarget { labels: &labels }, (0..4).collect(), params, &mut rng);
        for (row, &l) in x.iter().zip(&labels) {
            assert_eq!(t.leaf_for(row)[l], 1.0);
        }
    }

    #[test]
    fn regression_tree_uses_leaf_function() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let targets = [1.0, 1.0, 5.0, 5.0];
        let target = SquaredErrorTarget {
            targets: &targets,
            leaf_value: |idx: &[usize]| idx.iter().map(|&i| targets[i]).sum::<f64>() / idx.len() as f64,
        };
        let params = TreeParams {
            max_depth: Some(3),
            min_samples_leaf: 1,
            max_features: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = grow(&x, &target, (0..4).collect(), params, &mut rng);
        assert_eq!(*t.leaf_for(&[0.5]), 1.0);
        assert_eq!(*t.leaf_for(&[2.5]), 5.0);
        assert_eq!(t.depth(), 1);
    }

    #[test]
    fn min_leaf_is_respected() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let labels = [0, 1, 0, 1, 0, 1];
        let params = TreeParams {
            max_depth: None,
            min_samples_leaf: 3,
            max_features: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = grow(&x, &GiniTarget { labels: &labels }, (0..6).collect(), params, &mut rng);
        assert!(t.depth() <= 1);
    }
}
