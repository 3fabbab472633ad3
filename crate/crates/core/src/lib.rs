//! Active learning for multinomial classification problems in quantum physics.
//!
//! The crate is organised bottom-up:
//!
//! * [`quantum`]: dense complex linear algebra for states of dimension ≤ 16
//!   (tensor products, partial traces, Uhlmann fidelity).
//! * [`weak_measurement`]: the two-ancilla coupling protocol that reconstructs
//!   qutrit populations exactly and charges a fidelity cost for each label.
//! * [`datasets`]: the qutrit lattices, the analytic phase diagram of the
//!   transverse-field triangular antiferromagnet and its noisy label oracle.
//! * [`classifiers`]: logistic regression, Gaussian naive Bayes, an RBF-kernel
//!   SVM and self-training.
//! * [`active_learning`]: uncertainty scores, query selection and the pool-based
//!   learning loop.
//! * [`ctqmc`]: continuous imaginary-time Swendsen-Wang Monte Carlo with an
//!   exact-diagonalization oracle.

pub mod active_learning;
pub mod classifiers;
pub mod ctqmc;
pub mod datasets;
mod error;
pub mod quantum;
pub mod rng;
pub mod stats;
pub mod weak_measurement;

pub use error::{Error, Result};

pub use active_learning::{
    al_run, evaluate_accuracy, select_query, uncertainty_scores, vote_entropy, ALConfig, ALState,
    CurvePoint, Problem, QueryStrategy, StoppingRule,
};
pub use classifiers::{
    GaussianNBModel, LogisticModel, ModelSnapshot, PhaseOvrModel, RbfSvmModel, SelfTrainConfig,
};
pub use datasets::{
    BoundaryModel, OvrBoundary, Phase, PhaseGrid, PhaseSample, QutritCase, QutritGrid,
    QutritSample,
};
pub use quantum::{ComplexMatrix, DensityMatrix, Ket};
pub use rng::{trial_rng, TrialRng};
pub use weak_measurement::{CouplingConfig, LabelingOutcome, MeasurementMode};
