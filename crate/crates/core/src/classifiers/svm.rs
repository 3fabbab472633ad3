use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::check_training_set;
use crate::error::invalid;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    /// RBF width; `None` selects `1 / (d · mean per-feature variance)`.
    pub gamma: Option<f64>,
    /// Stop once the maximal KKT violation falls below this.
    pub tol: f64,
    /// Pair updates; `None` selects `max(10⁴, 100 n)`.
    pub max_iter: Option<usize>,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self { c: 1.0, gamma: None, tol: 1e-3, max_iter: None }
    }
}

/// Binary soft-margin SVM with kernel `K(x, x') = exp(−γ‖x − x'‖²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfSvmModel {
    pub n_features: usize,
    pub support_vectors: Vec<Vec<f64>>,
    /// `αᵢ yᵢ` for each support vector.
    pub coef: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
    /// Maximal KKT violation `m(α) − M(α)` at exit.
    pub kkt_gap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Only one label was present; the decision is the constant `bias = ±1`.
    pub degenerate: bool,
}

/// Per-feature population variances averaged over features, then inverted.
pub fn default_gamma(x: &[Vec<f64>]) -> f64 {
    let d = x[0].len();
    let n = x.len() as f64;
    let mean_var = (0..d)
        .map(|k| {
            let mu = x.iter().map(|r| r[k]).sum::<f64>() / n;
            x.iter().map(|r| (r[k] - mu).powi(2)).sum::<f64>() / n
        })
        .sum::<f64>()
        / d as f64;
    if mean_var > 0.0 {
        1.0 / (d as f64 * mean_var)
    } else {
        1.0
    }
}

fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum();
    (-gamma * d2).exp()
}

/// Kernel rows computed on demand and kept in a bounded FIFO cache.
struct KernelRows<'a> {
    x: &'a [Vec<f64>],
    gamma: f64,
    rows: Vec<Option<Vec<f64>>>,
    order: VecDeque<usize>,
    capacity: usize,
}

const CACHE_BYTES: usize = 256 << 20;

impl<'a> KernelRows<'a> {
    fn new(x: &'a [Vec<f64>], gamma: f64) -> Self {
        let n = x.len();
        let capacity = (CACHE_BYTES / (8 * n.max(1))).clamp(2, n.max(2));
        Self { x, gamma, rows: vec![None; n], order: VecDeque::new(), capacity }
    }

    fn ensure(&mut self, i: usize) {
        if self.rows[i].is_some() {
            return;
        }
        if self.order.len() == self.capacity {
            let old = self.order.pop_front().expect("nonempty");
            self.rows[old] = None;
        }
        let xi = &self.x[i];
        self.rows[i] = Some(self.x.iter().map(|xj| rbf(self.gamma, xi, xj)).collect());
        self.order.push_back(i);
    }

    fn row(&self, i: usize) -> &[f64] {
        self.rows[i].as_deref().expect("row cached")
    }
}

impl RbfSvmModel {
    pub fn fit(x: &[Vec<f64>], y: &[bool], cfg: &SvmConfig) -> Result<Self> {
        let labels: Vec<usize> = y.iter().map(|&b| b as usize).collect();
        let d = check_training_set(x, &labels, 2)?;
        if !(cfg.c > 0.0) || !(cfg.tol > 0.0) {
            return Err(invalid("C and tol must be positive"));
        }
        let gamma = match cfg.gamma {
            Some(g) if g > 0.0 && g.is_finite() => g,
            Some(g) => return Err(invalid(format!("gamma {g} must be positive"))),
            None => default_gamma(x),
        };
        let n = x.len();
        let mut model = Self {
            n_features: d,
            support_vectors: Vec::new(),
            coef: Vec::new(),
            bias: 0.0,
            gamma,
            c: cfg.c,
            kkt_gap: 0.0,
            iterations: 0,
            converged: true,
            degenerate: false,
        };
        if y.iter().all(|&b| b) || y.iter().all(|&b| !b) {
            model.degenerate = true;
            model.bias = if y[0] { 1.0 } else { -1.0 };
            return Ok(model);
        }

        let c = cfg.c;
        let ys: Vec<f64> = y.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
        let mut alpha = vec![0.0; n];
        let mut grad = vec![-1.0; n];
        let max_iter = cfg.max_iter.unwrap_or((100 * n).max(10_000));
        let mut kernel = KernelRows::new(x, gamma);
        let in_up = |a: f64, y: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
        let in_low = |a: f64, y: f64| (y > 0.0 && a > 0.0) || (y < 0.0 && a < c);

        let mut iter = 0;
        let gap = loop {
            // maximal violating pair
            let (mut i, mut m_up) = (usize::MAX, f64::NEG_INFINITY);
            let (mut j, mut m_low) = (usize::MAX, f64::INFINITY);
            for t in 0..n {
                let v = -ys[t] * grad[t];
                if in_up(alpha[t], ys[t]) && v > m_up {
                    m_up = v;
                    i = t;
                }
                if in_low(alpha[t], ys[t]) && v < m_low {
                    m_low = v;
                    j = t;
                }
            }
            let gap = m_up - m_low;
            if i == usize::MAX || j == usize::MAX || gap < cfg.tol || iter >= max_iter {
                break gap;
            }
            iter += 1;
            kernel.ensure(i);
            kernel.ensure(j);
            let (ki, kj) = (kernel.row(i), kernel.row(j));
            let curvature = (ki[i] + kj[j] - 2.0 * ki[j]).max(1e-12);
            let ub_i = if ys[i] > 0.0 { c - alpha[i] } else { alpha[i] };
            let ub_j = if ys[j] > 0.0 { alpha[j] } else { c - alpha[j] };
            let lambda = (gap / curvature).min(ub_i).min(ub_j);
            alpha[i] = snap(alpha[i] + ys[i] * lambda, c);
            alpha[j] = snap(alpha[j] - ys[j] * lambda, c);
            for t in 0..n {
                grad[t] += ys[t] * lambda * (ki[t] - kj[t]);
            }
        };
        model.kkt_gap = gap.max(0.0);
        model.iterations = iter;
        model.converged = gap < cfg.tol;

        let (mut free_sum, mut free_n) = (0.0, 0usize);
        let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
        for t in 0..n {
            let v = -ys[t] * grad[t];
            if alpha[t] > 0.0 && alpha[t] < c {
                free_sum += v;
                free_n += 1;
            }
            if in_up(alpha[t], ys[t]) {
                hi = hi.max(v);
            }
            if in_low(alpha[t], ys[t]) {
                lo = lo.min(v);
            }
        }
        model.bias = if free_n > 0 {
            free_sum / free_n as f64
        } else {
            0.5 * (hi + lo)
        };
        for t in 0..n {
            if alpha[t] > 0.0 {
                model.support_vectors.push(x[t].clone());
                model.coef.push(alpha[t] * ys[t]);
            }
        }
        Ok(model)
    }

    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, got: x.len() });
        }
        Ok(self.decision_unchecked(x))
    }

    pub(crate) fn decision_unchecked(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coef)
            .map(|(s, a)| a * rbf(self.gamma, s, x))
            .sum::<f64>()
            + self.bias
    }

    /// Decision values on the product lattice `axis0 × axis1` of a
    /// two-feature model, entry `i0 * axis1.len() + i1`. Uses the
    /// factorization of the Gaussian kernel along coordinates.
    pub fn decision_on_lattice(&self, axis0: &[f64], axis1: &[f64]) -> Result<Vec<f64>> {
        if self.n_features != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: self.n_features });
        }
        let (n0, n1) = (axis0.len(), axis1.len());
        let mut out = vec![self.bias; n0 * n1];
        let mut f1 = vec![0.0; n1];
        for (s, &a) in self.support_vectors.iter().zip(&self.coef) {
            for (k, &t) in axis1.iter().enumerate() {
                f1[k] = (-self.gamma * (s[1] - t).powi(2)).exp();
            }
            for (i0, &g) in axis0.iter().enumerate() {
                let w = a * (-self.gamma * (s[0] - g).powi(2)).exp();
                if w == 0.0 {
                    continue;
                }
                let row = &mut out[i0 * n1..(i0 + 1) * n1];
                for (o, f) in row.iter_mut().zip(&f1) {
                    *o += w * f;
                }
            }
        }
        Ok(out)
    }

    /// Dual variables `αᵢ = |coef|`.
    pub fn alphas(&self) -> impl Iterator<Item = f64> + '_ {
        self.coef.iter().map(|v| v.abs())
    }

    /// Maximal KKT violation of this model's dual on a training set,
    /// recomputed from scratch. Samples that are not support vectors must be
    /// included with `αᵢ = 0`; pass the full set used in `fit`.
    pub fn kkt_violation(&self, x: &[Vec<f64>], y: &[bool]) -> f64 {
        let c = self.c;
        let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
        for (xt, &yt) in x.iter().zip(y) {
            let yv = if yt { 1.0 } else { -1.0 };
            let a = self
                .support_vectors
                .iter()
                .zip(&self.coef)
                .find(|(s, _)| *s == xt)
                .map(|(_, v)| v.abs())
                .unwrap_or(0.0);
            let u = self.decision_unchecked(xt) - self.bias;
            let v = yv - u;
            if (yv > 0.0 && a < c) || (yv < 0.0 && a > 0.0) {
                hi = hi.max(v);
            }
            if (yv > 0.0 && a > 0.0) || (yv < 0.0 && a < c) {
                lo = lo.min(v);
            }
        }
        (hi - lo).max(0.0)
    }
}

fn snap(a: f64, c: f64) -> f64 {
    if a < 1e-12 * c {
        0.0
    } else if a > c * (1.0 - 1e-12) {
        c
    } else {
        a
    }
}

/// Confidence that the positive label is correct, `σ(2f)`.
pub fn svm_confidence(decision: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * decision).exp())
}
