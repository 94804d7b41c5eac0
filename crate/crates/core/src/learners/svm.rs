//! Soft-margin SVMs solved by SMO, combined one-vs-rest with Platt-scaled
//! probabilities. The fuzzy variant scales each sample's box constraint by a
//! membership weight derived from its distance to the class centroid.

use serde::{Deserialize, Serialize};

use super::ClassProbs;
use crate::error::{Error, Result};
use crate::signal::{PdLabel, NUM_CLASSES};

/// Curvature floor for non positive-definite pairs.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `exp(-γ‖a-b‖²)`; `gamma: None` selects `1 / (k · var(X))`.
    Rbf {
        gamma: Option<f64>,
    },
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    Rbf { gamma: f64 },
    Linear,
}

impl Kernel {
    pub fn resolve(spec: KernelSpec, x: &[Vec<f64>]) -> Kernel {
        match spec {
            KernelSpec::Linear => Kernel::Linear,
            KernelSpec::Rbf { gamma: Some(gamma) } => Kernel::Rbf { gamma },
            KernelSpec::Rbf { gamma: None } => {
                let k = x[0].len() as f64;
                let n = (x.len() * x[0].len()) as f64;
                let mean = x.iter().flatten().sum::<f64>() / n;
                let var = x.iter().flatten().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                let gamma = if var > 0.0 { 1.0 / (k * var) } else { 1.0 };
                Kernel::Rbf { gamma }
            }
        }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(p, q)| p * q).sum(),
            Kernel::Rbf { gamma } => {
                let d: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
                (-gamma * d).exp()
            }
        }
    }

    pub fn matrix(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = x.len();
        let mut k = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = self.eval(&x[i], &x[j]);
                k[i][j] = v;
                k[j][i] = v;
            }
        }
        k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmHyper {
    pub kernel: KernelSpec,
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmHyper {
    fn default() -> Self {
        SvmHyper {
            kernel: KernelSpec::Rbf { gamma: None },
            c: 1.0,
            tol: 1e-3,
            max_iter: 100_000,
        }
    }
}

impl SvmHyper {
    pub fn linear() -> Self {
        SvmHyper {
            kernel: KernelSpec::Linear,
            ..Default::default()
        }
    }
}

/// Dual solution of one binary problem. The decision function is
/// `f(x) = Σ αᵢ yᵢ K(xᵢ, x) + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// Final maximal-violating-pair gap `m(α) − M(α)`.
    pub gap: f64,
}

/// Solves `min ½αᵀQα − eᵀα` s.t. `yᵀα = 0`, `0 ≤ αᵢ ≤ upper[i]` with
/// second-order working set selection, `Q_ij = yᵢ yⱼ K_ij`.
pub fn solve_smo(kmat: &[Vec<f64>], y: &[f64], upper: &[f64], tol: f64, max_iter: usize) -> Result<SmoSolution> {
    let n = y.len();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let is_up = |a: f64, yi: f64, c: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let is_low = |a: f64, yi: f64, c: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    let mut iterations = 0;
    let mut gap;
    loop {
        let mut g_max = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if is_up(alpha[t], y[t], upper[t]) {
                let v = -y[t] * grad[t];
                if v > g_max {
                    g_max = v;
                    i = t;
                }
            }
        }
        let mut g_min = f64::INFINITY;
        let mut j = usize::MAX;
        let mut best_obj = f64::INFINITY;
        for t in 0..n {
            if !is_low(alpha[t], y[t], upper[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            g_min = g_min.min(v);
            if i == usize::MAX {
                continue;
            }
            let b = g_max - v;
            if b > 0.0 {
                let a = kmat[i][i] + kmat[t][t] - 2.0 * kmat[i][t];
                let obj = -(b * b) / if a > 0.0 { a } else { TAU };
                if obj <= best_obj {
                    best_obj = obj;
                    j = t;
                }
            }
        }
        gap = if i == usize::MAX || g_min == f64::INFINITY {
            0.0
        } else {
            g_max - g_min
        };
        if gap < tol || j == usize::MAX {
            break;
        }
        if iterations >= max_iter {
            return Err(Error::NoConvergence { iterations, gap });
        }
        iterations += 1;

        let (ci, cj) = (upper[i], upper[j]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = y[i] * y[j] * kmat[i][j];
        if y[i] != y[j] {
            let quad = (kmat[i][i] + kmat[j][j] + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > ci - cj {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = ci - diff;
                }
            } else if alpha[j] > cj {
                alpha[j] = cj;
                alpha[i] = cj + diff;
            }
        } else {
            let quad = (kmat[i][i] + kmat[j][j] - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > ci {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = sum - ci;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > cj {
                if alpha[j] > cj {
                    alpha[j] = cj;
                    alpha[i] = sum - cj;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for k in 0..n {
            grad[k] += y[k] * (y[i] * kmat[i][k] * di + y[j] * kmat[j][k] * dj);
        }
    }

    // Bias: average over free vectors, else midpoint of the feasible interval.
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= upper[t] {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            sum_free += yg;
            n_free += 1;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else if lb.is_finite() {
        lb
    } else {
        0.0
    };
    Ok(SmoSolution {
        alpha,
        bias: -rho,
        iterations,
        gap,
    })
}

/// Sigmoid `P(y = +1 | f) = 1 / (1 + exp(a·f + b))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Platt {
    pub a: f64,
    pub b: f64,
}

impl Platt {
    /// Newton fit with backtracking on smoothed targets.
    pub fn fit(decision: &[f64], positive: &[bool]) -> Platt {
        let prior1 = positive.iter().filter(|&&p| p).count() as f64;
        let prior0 = positive.len() as f64 - prior1;
        let hi = (prior1 + 1.0) / (prior1 + 2.0);
        let lo = 1.0 / (prior0 + 2.0);
        let t: Vec<f64> = positive.iter().map(|&p| if p { hi } else { lo }).collect();
        let objective = |a: f64, b: f64| -> f64 {
            decision
                .iter()
                .zip(&t)
                .map(|(&f, &ti)| {
                    let z = f * a + b;
                    if z >= 0.0 {
                        ti * z + (-z).exp().ln_1p()
                    } else {
                        (ti - 1.0) * z + z.exp().ln_1p()
                    }
                })
                .sum()
        };
        let (mut a, mut b) = (0.0, ((prior0 + 1.0) / (prior1 + 1.0)).ln());
        let mut fval = objective(a, b);
        for _ in 0..100 {
            let (mut h11, mut h22, mut h21, mut g1, mut g2) = (1e-12, 1e-12, 0.0, 0.0, 0.0);
            for (&f, &ti) in decision.iter().zip(&t) {
                let z = f * a + b;
                let (p, q) = if z >= 0.0 {
                    let e = (-z).exp();
                    (e / (1.0 + e), 1.0 / (1.0 + e))
                } else {
                    let e = z.exp();
                    (1.0 / (1.0 + e), e / (1.0 + e))
                };
                let d2 = p * q;
                h11 += f * f * d2;
                h22 += d2;
                h21 += f * d2;
                let d1 = ti - p;
                g1 += f * d1;
                g2 += d1;
            }
            if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
                break;
            }
            let det = h11 * h22 - h21 * h21;
            let da = -(h22 * g1 - h21 * g2) / det;
            let db = -(-h21 * g1 + h11 * g2) / det;
            let gd = g1 * da + g2 * db;
            let mut step = 1.0;
            while step >= 1e-10 {
                let (na, nb) = (a + step * da, b + step * db);
                let nf = objective(na, nb);
                if nf < fval + 1e-4 * step * gd {
                    a = na;
                    b = nb;
                    fval = nf;
                    break;
                }
                step /= 2.0;
            }
            if step < 1e-10 {
                break;
            }
        }
        Platt { a, b }
    }

    pub fn probability(&self, decision: f64) -> f64 {
        let z = decision * self.a + self.b;
        if z >= 0.0 {
            let e = (-z).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + z.exp())
        }
    }
}

/// One calibrated binary machine: coefficients `αᵢ yᵢ` over the shared
/// support set of the parent model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryMachine {
    pub coef: Vec<f64>,
    pub bias: f64,
    pub platt: Platt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvrSvm {
    pub kernel: Kernel,
    pub support: Vec<Vec<f64>>,
    /// One machine per class; `None` for classes absent from training.
    pub machines: Vec<Option<BinaryMachine>>,
}

/// Per-sample memberships `1 − d(x, c_k) / (r_k + δ)` where `c_k` is the
/// centroid of the sample's class and `r_k` the class radius.
pub fn fuzzy_weights(x: &[Vec<f64>], y: &[PdLabel]) -> Vec<f64> {
    const DELTA: f64 = 1e-6;
    let width = x.first().map_or(0, Vec::len);
    let mut centroid = vec![vec![0.0; width]; NUM_CLASSES];
    let mut count = [0usize; NUM_CLASSES];
    for (row, l) in x.iter().zip(y) {
        count[l.code()] += 1;
        for (c, v) in centroid[l.code()].iter_mut().zip(row) {
            *c += v;
        }
    }
    for (c, &n) in centroid.iter_mut().zip(&count) {
        if n > 0 {
            c.iter_mut().for_each(|v| *v /= n as f64);
        }
    }
    let dist: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(row, l)| {
            row.iter()
                .zip(&centroid[l.code()])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let mut radius = [0.0f64; NUM_CLASSES];
    for (d, l) in dist.iter().zip(y) {
        radius[l.code()] = radius[l.code()].max(*d);
    }
    dist.iter()
        .zip(y)
        .map(|(d, l)| 1.0 - d / (radius[l.code()] + DELTA))
        .collect()
}

impl OvrSvm {
    /// `weights` scales each sample's box constraint (`None` = plain SVM).
    pub fn fit(x: &[Vec<f64>], y: &[PdLabel], hyper: &SvmHyper, weights: Option<&[f64]>) -> Result<OvrSvm> {
        let kernel = Kernel::resolve(hyper.kernel, x);
        let kmat = kernel.matrix(x);
        let upper: Vec<f64> = match weights {
            Some(w) => w.iter().map(|s| hyper.c * s).collect(),
            None => vec![hyper.c; x.len()],
        };
        let mut solutions = Vec::with_capacity(NUM_CLASSES);
        for class in PdLabel::ALL {
            if !y.contains(&class) {
                solutions.push(None);
                continue;
            }
            let ypm: Vec<f64> = y.iter().map(|&l| if l == class { 1.0 } else { -1.0 }).collect();
            let sol = solve_smo(&kmat, &ypm, &upper, hyper.tol, hyper.max_iter)?;
            let decision: Vec<f64> = (0..x.len())
                .map(|i| {
                    sol.alpha
                        .iter()
                        .zip(&ypm)
                        .zip(&kmat[i])
                        .map(|((a, yy), k)| a * yy * k)
                        .sum::<f64>()
                        + sol.bias
                })
                .collect();
            let positive: Vec<bool> = ypm.iter().map(|&v| v > 0.0).collect();
            let platt = Platt::fit(&decision, &positive);
            solutions.push(Some((sol, ypm, platt)));
        }

        let used: Vec<usize> = (0..x.len())
            .filter(|&i| solutions.iter().flatten().any(|(s, _, _)| s.alpha[i] > 0.0))
            .collect();
        let machines = solutions
            .into_iter()
            .map(|s| {
                s.map(|(sol, ypm, platt)| BinaryMachine {
                    coef: used.iter().map(|&i| sol.alpha[i] * ypm[i]).collect(),
                    bias: sol.bias,
                    platt,
                })
            })
            .collect();
        Ok(OvrSvm {
            kernel,
            support: used.iter().map(|&i| x[i].clone()).collect(),
            machines,
        })
    }

    pub fn decision_values(&self, row: &[f64]) -> [Option<f64>; NUM_CLASSES] {
        let k: Vec<f64> = self.support.iter().map(|s| self.kernel.eval(s, row)).collect();
        let mut out = [None; NUM_CLASSES];
        for (o, m) in out.iter_mut().zip(&self.machines) {
            *o = m
                .as_ref()
                .map(|m| m.coef.iter().zip(&k).map(|(c, kv)| c * kv).sum::<f64>() + m.bias);
        }
        out
    }

    /// Platt probabilities of each one-vs-rest machine, renormalised.
    pub fn predict_proba_row(&self, row: &[f64]) -> ClassProbs {
        let mut p = [0.0; NUM_CLASSES];
        for ((pk, d), m) in p.iter_mut().zip(self.decision_values(row)).zip(&self.machines) {
            if let (Some(d), Some(m)) = (d, m) {
                *pk = m.platt.probability(d);
            }
        }
        let sum: f64 = p.iter().sum();
        if sum > 0.0 && sum.is_finite() {
            p.iter_mut().for_each(|v| *v /= sum);
            p
        } else {
            [1.0 / NUM_CLASSES as f64; NUM_CLASSES]
        }
    }
}
