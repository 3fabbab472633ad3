//! Pool-based active learning with uncertainty sampling.

mod curves;
mod engine;
mod strategy;

pub use curves::{aggregate_curves, write_aggregate_csv, write_curve_csv, AggregatePoint};
pub use engine::{
    al_run, evaluate_accuracy, self_train_phase, uncertainty_scores, ALConfig, ALRunner, ALState, CurvePoint, FittedModel, Label,
    Labeler, PhaseTarget, Problem, QutritModel, QutritTarget, StoppingRule, DENSE_EVAL_MAX_POOL, SPARSE_EVAL_EVERY,
};
pub use strategy::{distribution_score, ranking_score, select_query, shannon_entropy, vote_entropy, QueryStrategy};
