use serde::{Deserialize, Serialize};

use super::{argmax, GaussianNBModel, LogisticConfig, LogisticModel, RbfSvmModel, SvmConfig};
use crate::error::invalid;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfTrainConfig {
    pub threshold: f64,
    pub max_iter: usize,
}

impl Default for SelfTrainConfig {
    fn default() -> Self {
        Self { threshold: 0.95, max_iter: 5 }
    }
}

/// A classifier that can be refit from labels and reports class confidences.
pub trait ProbabilisticModel: Sized {
    fn fit_labels(x: &[Vec<f64>], y: &[usize], n_classes: usize) -> Result<Self>;
    fn class_proba(&self, x: &[f64]) -> Vec<f64>;
}

impl ProbabilisticModel for LogisticModel {
    fn fit_labels(x: &[Vec<f64>], y: &[usize], n_classes: usize) -> Result<Self> {
        LogisticModel::fit(x, y, n_classes, &LogisticConfig::default())
    }

    fn class_proba(&self, x: &[f64]) -> Vec<f64> {
        self.proba(x)
    }
}

impl ProbabilisticModel for GaussianNBModel {
    fn fit_labels(x: &[Vec<f64>], y: &[usize], n_classes: usize) -> Result<Self> {
        GaussianNBModel::fit(x, y, n_classes)
    }

    fn class_proba(&self, x: &[f64]) -> Vec<f64> {
        self.proba(x)
    }
}

/// Binary view: class 1 is the positive label, with probability `σ(2f)`.
impl ProbabilisticModel for RbfSvmModel {
    fn fit_labels(x: &[Vec<f64>], y: &[usize], n_classes: usize) -> Result<Self> {
        if n_classes != 2 {
            return Err(invalid("the SVM is a binary classifier"));
        }
        let labels: Vec<bool> = y.iter().map(|&c| c == 1).collect();
        RbfSvmModel::fit(x, &labels, &SvmConfig::default())
    }

    fn class_proba(&self, x: &[f64]) -> Vec<f64> {
        let p = super::svm_confidence(self.decision_unchecked(x));
        vec![1.0 - p, p]
    }
}

#[derive(Debug, Clone)]
pub struct SelfTrainOutcome<M> {
    pub model: M,
    /// Rounds of fit-and-label performed before the final fit.
    pub iterations: usize,
    /// `(index into the unlabeled set, adopted pseudo-label)` in adoption order.
    pub pseudo_labels: Vec<(usize, usize)>,
}

/// Fits on the labeled set, adopts unlabeled samples whose top confidence
/// reaches the threshold, and repeats until nothing is adopted or
/// `max_iter` rounds have run; then fits once more. True labels are never
/// replaced.
pub fn self_train<M: ProbabilisticModel>(
    labeled_x: &[Vec<f64>],
    labeled_y: &[usize],
    unlabeled_x: &[Vec<f64>],
    n_classes: usize,
    cfg: &SelfTrainConfig,
) -> Result<SelfTrainOutcome<M>> {
    if !(cfg.threshold > 0.0 && cfg.threshold <= 1.0) {
        return Err(invalid(format!("threshold {} outside (0, 1]", cfg.threshold)));
    }
    let mut x: Vec<Vec<f64>> = labeled_x.to_vec();
    let mut y: Vec<usize> = labeled_y.to_vec();
    let mut adopted = vec![false; unlabeled_x.len()];
    let mut pseudo_labels = Vec::new();
    let mut iterations = 0;
    while iterations < cfg.max_iter && adopted.iter().any(|a| !a) {
        iterations += 1;
        let model = M::fit_labels(&x, &y, n_classes)?;
        let mut added = 0;
        for (k, u) in unlabeled_x.iter().enumerate() {
            if adopted[k] {
                continue;
            }
            let p = model.class_proba(u);
            let c = argmax(&p);
            if p[c] >= cfg.threshold {
                adopted[k] = true;
                pseudo_labels.push((k, c));
                added += 1;
            }
        }
        // add after scoring so one round uses one model
        for &(k, c) in &pseudo_labels[pseudo_labels.len() - added..] {
            x.push(unlabeled_x[k].clone());
            y.push(c);
        }
        if added == 0 {
            break;
        }
    }
    let model = M::fit_labels(&x, &y, n_classes)?;
    Ok(SelfTrainOutcome { model, iterations, pseudo_labels })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> (Vec<Vec<f64>>, Vec<usize>, Vec<Vec<f64>>) {
        let lx = vec![vec![-2.0], vec![-1.5], vec![1.5], vec![2.0]];
        let ly = vec![0, 0, 1, 1];
        let ux = vec![vec![-3.0], vec![0.0], vec![3.0], vec![2.5]];
        (lx, ly, ux)
    }

    #[test]
    fn empty_pool_leaves_model_unchanged() {
        let (lx, ly, _) = blobs();
        let out: SelfTrainOutcome<LogisticModel> = self_train(&lx, &ly, &[], 2, &SelfTrainConfig::default()).unwrap();
        let plain = LogisticModel::fit(&lx, &ly, 2, &LogisticConfig::default()).unwrap();
        assert_eq!(out.model, plain);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn unreachable_threshold_runs_one_round() {
        let (lx, ly, ux) = blobs();
        let cfg = SelfTrainConfig { threshold: 1.0, max_iter: 5 };
        let out: SelfTrainOutcome<GaussianNBModel> = self_train(&lx, &ly, &[vec![0.0]], 2, &cfg).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.pseudo_labels.is_empty());
        let _ = ux;
    }

    #[test]
    fn confident_interior_samples_adopted_correctly() {
        let (lx, ly, ux) = blobs();
        let out: SelfTrainOutcome<GaussianNBModel> = self_train(&lx, &ly, &ux, 2, &SelfTrainConfig::default()).unwrap();
        let labels: std::collections::HashMap<usize, usize> = out.pseudo_labels.iter().cloned().collect();
        assert_eq!(labels.get(&0), Some(&0));
        assert_eq!(labels.get(&2), Some(&1));
        assert!(!labels.contains_key(&1), "the midpoint is ambiguous");
    }

    #[test]
    fn fixed_point_is_idempotent() {
        let (lx, ly, ux) = blobs();
        let cfg = SelfTrainConfig::default();
        let a: SelfTrainOutcome<LogisticModel> = self_train(&lx, &ly, &ux, 2, &cfg).unwrap();
        // rerun with the adopted samples promoted to labels
        let mut x2 = lx.clone();
        let mut y2 = ly.clone();
        for &(k, c) in &a.pseudo_labels {
            x2.push(ux[k].clone());
            y2.push(c);
        }
        let rest: Vec<Vec<f64>> = (0..ux.len())
            .filter(|k| !a.pseudo_labels.iter().any(|(j, _)| j == k))
            .map(|k| ux[k].clone())
            .collect();
        let b: SelfTrainOutcome<LogisticModel> = self_train(&x2, &y2, &rest, 2, &cfg).unwrap();
        if a.iterations < cfg.max_iter {
            assert!(b.pseudo_labels.is_empty());
            assert_eq!(b.model, a.model);
        }
    }
}
