//! Logistic regression, Gaussian naive Bayes, RBF-kernel SVM, one-vs-rest
//! phase prediction and self-training.

mod logistic;
mod naive_bayes;
mod optim;
mod ovr;
mod self_training;
mod snapshot;
mod svm;

pub use logistic::{objective_and_gradient as logistic_objective, softmax, LogisticConfig, LogisticModel};
pub use naive_bayes::{GaussianNBModel, VAR_SMOOTHING};
pub use ovr::{in_domain, PhaseOvrModel, ORDERED_T_MAX};
pub use self_training::{self_train, ProbabilisticModel, SelfTrainConfig, SelfTrainOutcome};
pub use snapshot::ModelSnapshot;
pub use svm::{default_gamma, svm_confidence, RbfSvmModel, SvmConfig};

pub(crate) use crate::datasets::argmax_lowest as argmax;
pub(crate) use ovr::combine as combine_phase;

use crate::error::invalid;
use crate::{Error, Result};

/// Validates a training set and returns its feature dimension.
pub(crate) fn check_training_set(x: &[Vec<f64>], y: &[usize], n_classes: usize) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::EmptyPool);
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    let d = x[0].len();
    if d == 0 {
        return Err(invalid("samples need at least one feature"));
    }
    for r in x {
        if r.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: r.len() });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
    }
    if let Some(&c) = y.iter().find(|&&c| c >= n_classes) {
        return Err(invalid(format!("label {c} out of range for {n_classes} classes")));
    }
    Ok(d)
}

pub(crate) fn class_presence(y: &[usize], n_classes: usize) -> Vec<bool> {
    let mut p = vec![false; n_classes];
    for &c in y {
        p[c] = true;
    }
    p
}
