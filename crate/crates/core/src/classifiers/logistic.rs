use serde::{Deserialize, Serialize};

use super::optim::{minimize, LbfgsOptions};
use super::{check_training_set, class_presence};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    /// Inverse regularization strength; the penalty is `λ = 1/C`.
    pub c: f64,
    /// Stop once the gradient's max-norm falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self { c: 1.0, tol: 1e-6, max_iter: 500 }
    }
}

/// Multinomial (softmax) logistic regression with an L2 penalty on the
/// non-bias weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub n_classes: usize,
    pub n_features: usize,
    /// One row of length `n_features + 1` per class; the bias is last.
    pub weights: Vec<Vec<f64>>,
    /// Classes absent from the training labels are never predicted.
    pub present: Vec<bool>,
    pub l2_strength: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Fewer than two classes were present; the model predicts a constant.
    pub degenerate: bool,
}

impl LogisticModel {
    /// A model with all weights zero, predicting the uniform distribution.
    pub fn zeros(n_classes: usize, n_features: usize) -> Self {
        Self {
            n_classes,
            n_features,
            weights: vec![vec![0.0; n_features + 1]; n_classes],
            present: vec![true; n_classes],
            l2_strength: 1.0,
            converged: true,
            iterations: 0,
            degenerate: false,
        }
    }

    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, cfg: &LogisticConfig) -> Result<Self> {
        let d = check_training_set(x, y, n_classes)?;
        if !(cfg.c > 0.0) {
            return Err(crate::error::invalid("C must be positive"));
        }
        let present = class_presence(y, n_classes);
        let active: Vec<usize> = (0..n_classes).filter(|&c| present[c]).collect();
        let lambda = 1.0 / cfg.c;
        let mut model = Self::zeros(n_classes, d);
        model.present = present;
        model.l2_strength = lambda;
        if active.len() < 2 {
            model.degenerate = true;
            return Ok(model);
        }
        // optimize over the rows of present classes only
        let local: Vec<usize> = {
            let mut map = vec![usize::MAX; n_classes];
            for (r, &c) in active.iter().enumerate() {
                map[c] = r;
            }
            y.iter().map(|&c| map[c]).collect()
        };
        let m = active.len();
        let res = minimize(
            |w, g| objective_and_gradient(w, x, &local, m, lambda, g),
            vec![0.0; m * (d + 1)],
            LbfgsOptions { tol: cfg.tol, max_iter: cfg.max_iter, memory: 10 },
        );
        for (r, &c) in active.iter().enumerate() {
            model.weights[c] = res.x[r * (d + 1)..(r + 1) * (d + 1)].to_vec();
        }
        model.converged = res.converged;
        model.iterations = res.iterations;
        Ok(model)
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, got: x.len() });
        }
        Ok(self.proba(x))
    }

    pub(crate) fn proba(&self, x: &[f64]) -> Vec<f64> {
        let scores: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.present)
            .map(|(w, &p)| if p { linear(w, x) } else { f64::NEG_INFINITY })
            .collect();
        softmax(&scores)
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(super::argmax(&self.predict_proba(x)?))
    }
}

fn linear(w: &[f64], x: &[f64]) -> f64 {
    let d = x.len();
    w[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[d]
}

/// Numerically stable softmax; `-∞` scores map to probability 0.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

/// Penalized negative log-likelihood
/// `Σᵢ −log p(yᵢ|xᵢ) + (λ/2) Σ_c ‖w_c‖²` (bias excluded) and its gradient.
///
/// `w` holds `m` rows of length `d + 1`, bias last.
pub fn objective_and_gradient(w: &[f64], x: &[Vec<f64>], y: &[usize], m: usize, lambda: f64, grad: &mut [f64]) -> f64 {
    let d1 = w.len() / m;
    let d = d1 - 1;
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut f = 0.0;
    let mut scores = vec![0.0; m];
    for (xi, &yi) in x.iter().zip(y) {
        for c in 0..m {
            scores[c] = linear(&w[c * d1..(c + 1) * d1], xi);
        }
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = scores.iter().map(|s| (s - max).exp()).sum();
        let lse = max + z.ln();
        f += lse - scores[yi];
        for c in 0..m {
            let r = (scores[c] - lse).exp() - if c == yi { 1.0 } else { 0.0 };
            let row = &mut grad[c * d1..(c + 1) * d1];
            for k in 0..d {
                row[k] += r * xi[k];
            }
            row[d] += r;
        }
    }
    for c in 0..m {
        for k in 0..d {
            let v = w[c * d1 + k];
            f += 0.5 * lambda * v * v;
            grad[c * d1 + k] += lambda * v;
        }
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_problem(rng: &mut ChaCha8Rng, n: usize, d: usize, m: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
        let x = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let y = (0..n).map(|_| rng.gen_range(0..m)).collect();
        (x, y)
    }

    #[test]
    fn symmetric_1d_boundary_at_origin() {
        let x = vec![vec![-1.0], vec![1.0]];
        let m = LogisticModel::fit(&x, &[0, 1], 2, &LogisticConfig::default()).unwrap();
        assert!(m.converged);
        let p = m.predict_proba(&[0.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-6);
        // boundary location: w1·x + b1 = w0·x + b0
        let (w0, w1) = (&m.weights[0], &m.weights[1]);
        let x0 = -(w1[1] - w0[1]) / (w1[0] - w0[0]);
        assert!(x0.abs() < 1e-6, "{x0}");
    }

    #[test]
    fn zero_model_is_uniform() {
        let p = LogisticModel::zeros(3, 2).predict_proba(&[0.3, -1.0]).unwrap();
        for v in p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn two_class_sigmoid_value() {
        // class-1 score 0.5·x against a zero reference row
        let mut m = LogisticModel::zeros(2, 1);
        m.weights[1] = vec![0.5, 0.0];
        let p = m.predict_proba(&[2.0]).unwrap();
        assert!((p[1] - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-15);
        assert!((p[1] - 0.7311).abs() < 1e-4);
    }

    #[test]
    fn softmax_shift_invariant_and_monotone() {
        let s = [0.3, -1.2, 2.0];
        let p = softmax(&s);
        let q = softmax(&s.map(|v| v + 17.0));
        for (a, b) in p.iter().zip(&q) {
            assert!((a - b).abs() < 1e-15);
        }
        let r = softmax(&[0.3, -1.0, 2.0]);
        assert!(r[1] > p[1]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let m = LogisticModel::zeros(3, 2);
        assert!(matches!(m.predict_proba(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let (x, y) = random_problem(&mut rng, 15, 3, 3);
            let w: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut g = vec![0.0; 12];
            objective_and_gradient(&w, &x, &y, 3, 1.0, &mut g);
            let mut scratch = vec![0.0; 12];
            for k in 0..12 {
                let h = 1e-5;
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[k] += h;
                wm[k] -= h;
                let fd = (objective_and_gradient(&wp, &x, &y, 3, 1.0, &mut scratch)
                    - objective_and_gradient(&wm, &x, &y, 3, 1.0, &mut scratch))
                    / (2.0 * h);
                assert!((fd - g[k]).abs() <= 1e-5 * g[k].abs().max(1.0), "{fd} vs {}", g[k]);
            }
        }
    }

    #[test]
    fn objective_decreases_and_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let (x, y) = random_problem(&mut rng, 60, 2, 3);
        let res = minimize(
            |w, g| objective_and_gradient(w, &x, &y, 3, 1.0, g),
            vec![0.0; 9],
            LbfgsOptions { tol: 1e-6, max_iter: 500, memory: 10 },
        );
        assert!(res.converged);
        assert!(res.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn single_class_is_degenerate() {
        let x = vec![vec![0.0], vec![1.0]];
        let m = LogisticModel::fit(&x, &[2, 2], 3, &LogisticConfig::default()).unwrap();
        assert!(m.degenerate);
        assert_eq!(m.predict(&[5.0]).unwrap(), 2);
        assert_eq!(m.predict_proba(&[5.0]).unwrap(), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn absent_class_never_predicted() {
        let x = vec![vec![-1.0], vec![1.0]];
        let m = LogisticModel::fit(&x, &[0, 2], 3, &LogisticConfig::default()).unwrap();
        let p = m.predict_proba(&[0.1]).unwrap();
        assert_eq!(p[1], 0.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn label_permutation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let (x, y) = random_problem(&mut rng, 40, 2, 3);
        let perm = [2usize, 0, 1];
        let yp: Vec<usize> = y.iter().map(|&c| perm[c]).collect();
        let cfg = LogisticConfig { tol: 1e-10, ..Default::default() };
        let a = LogisticModel::fit(&x, &y, 3, &cfg).unwrap();
        let b = LogisticModel::fit(&x, &yp, 3, &cfg).unwrap();
        for xi in &x {
            let pa = a.predict_proba(xi).unwrap();
            let pb = b.predict_proba(xi).unwrap();
            for c in 0..3 {
                assert!((pa[c] - pb[perm[c]]).abs() < 1e-7);
            }
        }
    }
}
