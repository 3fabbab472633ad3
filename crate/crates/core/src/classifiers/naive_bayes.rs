use serde::{Deserialize, Serialize};

use super::{check_training_set, class_presence};
use crate::{Error, Result};

/// Gaussian naive Bayes with frequency priors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNBModel {
    pub n_classes: usize,
    pub n_features: usize,
    pub priors: Vec<f64>,
    /// Per class, per feature.
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    pub var_floor: f64,
    pub degenerate: bool,
}

/// Relative variance floor, scaled by the largest per-feature variance.
pub const VAR_SMOOTHING: f64 = 1e-9;

impl GaussianNBModel {
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize) -> Result<Self> {
        let d = check_training_set(x, y, n_classes)?;
        let n = x.len() as f64;
        let max_var = (0..d)
            .map(|k| {
                let mu = x.iter().map(|r| r[k]).sum::<f64>() / n;
                x.iter().map(|r| (r[k] - mu).powi(2)).sum::<f64>() / n
            })
            .fold(0.0, f64::max);
        let var_floor = if max_var > 0.0 { VAR_SMOOTHING * max_var } else { VAR_SMOOTHING };
        let mut counts = vec![0usize; n_classes];
        let mut means = vec![vec![0.0; d]; n_classes];
        let mut variances = vec![vec![var_floor; d]; n_classes];
        for (r, &c) in x.iter().zip(y) {
            counts[c] += 1;
            for k in 0..d {
                means[c][k] += r[k];
            }
        }
        for c in 0..n_classes {
            if counts[c] > 0 {
                means[c].iter_mut().for_each(|m| *m /= counts[c] as f64);
            }
        }
        for (r, &c) in x.iter().zip(y) {
            for k in 0..d {
                variances[c][k] += (r[k] - means[c][k]).powi(2) / counts[c] as f64;
            }
        }
        let priors = counts.iter().map(|&k| k as f64 / n).collect();
        let degenerate = class_presence(y, n_classes).iter().filter(|&&p| p).count() < 2;
        Ok(Self { n_classes, n_features: d, priors, means, variances, var_floor, degenerate })
    }

    /// Unnormalized log posterior; `-∞` for classes with zero prior.
    pub fn joint_log_likelihood(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_classes)
            .map(|c| {
                if self.priors[c] == 0.0 {
                    return f64::NEG_INFINITY;
                }
                let mut s = self.priors[c].ln();
                for k in 0..self.n_features {
                    let v = self.variances[c][k];
                    s -= 0.5 * (2.0 * std::f64::consts::PI * v).ln() + (x[k] - self.means[c][k]).powi(2) / (2.0 * v);
                }
                s
            })
            .collect()
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, got: x.len() });
        }
        Ok(self.proba(x))
    }

    pub(crate) fn proba(&self, x: &[f64]) -> Vec<f64> {
        super::logistic::softmax(&self.joint_log_likelihood(x))
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(super::argmax(&self.predict_proba(x)?))
    }
}
