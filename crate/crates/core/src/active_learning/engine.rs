use rand::Rng;
use serde::{Deserialize, Serialize};

use super::strategy::{ranking_score, select_query, QueryStrategy};
use crate::classifiers::{
    argmax, GaussianNBModel, LogisticConfig, LogisticModel, ModelSnapshot, PhaseOvrModel,
    self_train, RbfSvmModel, SelfTrainConfig, SvmConfig, ORDERED_T_MAX,
};
use crate::datasets::{
    noisy_ovr_label, BoundaryModel, OvrBoundary, Phase, PhaseGrid, QutritCase, QutritGrid,
};
use crate::error::invalid;
use crate::quantum::DensityMatrix;
use crate::stats::compensated_sum;
use crate::weak_measurement::{label_qutrit, CouplingConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QutritModel {
    Logistic,
    NaiveBayes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QutritTarget {
    ThreeClass,
    /// Class `c ∈ 1..=3` against the other two.
    OneVsRest(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Labeler {
    /// Labels come from two-ancilla weak measurements and cost fidelity.
    WeakMeasurement(CouplingConfig),
    /// Labels are the true classes at no cost.
    Noiseless,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseTarget {
    /// Paramagnetic against the rest on the full grid.
    ParaVsRest,
    /// Ordered against the rest on the low-temperature window.
    OrderedVsRest,
    /// Two one-vs-rest machines, each querying its own sampling space (full
    /// grid, low-temperature window) in alternation; the budget counts the
    /// labels of both.
    ThreePhase,
    /// Two one-vs-rest machines sharing one pool; a query returns both
    /// answers where they apply and is scored by the more uncertain machine.
    ThreePhaseJoint,
}

impl PhaseTarget {
    fn machines(self) -> (bool, bool) {
        match self {
            PhaseTarget::ParaVsRest => (true, false),
            PhaseTarget::OrderedVsRest => (false, true),
            PhaseTarget::ThreePhase | PhaseTarget::ThreePhaseJoint => (true, true),
        }
    }

    fn three_class(self) -> bool {
        matches!(self, PhaseTarget::ThreePhase | PhaseTarget::ThreePhaseJoint)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Qutrit {
        case: QutritCase,
        model: QutritModel,
        target: QutritTarget,
        labeler: Labeler,
    },
    Phase {
        target: PhaseTarget,
        /// Decay coefficient of the label-flip probability.
        k: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoppingRule {
    /// Total oracle labels, seeds included.
    MaxLabels(usize),
    /// Stop after the labeling that brings the mean pool fidelity to or
    /// below this floor.
    MinSystemFidelity(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ALConfig {
    pub problem: Problem,
    pub strategy: QueryStrategy,
    pub stopping: StoppingRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n_labels: usize,
    pub accuracy: f64,
    /// Mean fidelity over the pool (unlabeled samples count as 1); only
    /// defined for qutrit problems.
    pub mean_fidelity: Option<f64>,
}

/// An oracle answer for one pool sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    /// Class index in the target's label space.
    Class(usize),
    /// One-vs-rest answers; `None` where the boundary does not apply.
    Ovr { para: Option<bool>, ord: Option<bool> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Logistic(LogisticModel),
    NaiveBayes(GaussianNBModel),
    Phase { para: Option<RbfSvmModel>, ord: Option<RbfSvmModel> },
}

impl FittedModel {
    pub fn snapshot(&self) -> ModelSnapshot {
        match self {
            FittedModel::Logistic(m) => ModelSnapshot::Logistic(m.clone()),
            FittedModel::NaiveBayes(m) => ModelSnapshot::NaiveBayes(m.clone()),
            FittedModel::Phase { para: Some(p), ord: Some(o) } => ModelSnapshot::PhaseOvr(PhaseOvrModel {
                svm_para: p.clone(),
                svm_ord: o.clone(),
                ord_t_max: ORDERED_T_MAX,
            }),
            FittedModel::Phase { para: Some(m), ord: None } | FittedModel::Phase { para: None, ord: Some(m) } => {
                ModelSnapshot::Svm(m.clone())
            }
            FittedModel::Phase { para: None, ord: None } => unreachable!("phase models carry a machine"),
        }
    }

    fn class_proba(&self, x: &[f64]) -> Vec<f64> {
        match self {
            FittedModel::Logistic(m) => m.proba(x),
            FittedModel::NaiveBayes(m) => m.proba(x),
            FittedModel::Phase { .. } => unreachable!("decision-function model"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ALState {
    /// Pool indices in labeling order, seeds first.
    pub labeled: Vec<usize>,
    /// Oracle answers, parallel to `labeled`.
    pub labels: Vec<Label>,
    /// Unlabeled pool indices, ascending.
    pub unlabeled: Vec<usize>,
    pub labels_used: usize,
    pub n_seeds: usize,
    /// Pool indices chosen by the query strategy, in order.
    pub queries: Vec<usize>,
    /// Per pool sample fidelity after labeling (1 when untouched); qutrit
    /// problems only.
    pub fidelity_ledger: Option<Vec<f64>>,
    pub curve: Vec<CurvePoint>,
    pub model: FittedModel,
}

impl ALState {
    pub fn system_fidelity(&self) -> Option<f64> {
        self.fidelity_ledger
            .as_ref()
            .map(|l| compensated_sum(l.iter().copied()) / l.len() as f64)
    }
}

/// Which one-vs-rest answers a phase pool entry yields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Machine {
    Para,
    Ord,
    /// The paramagnetic answer, plus the ordered one inside its window.
    Both,
}

#[derive(Debug, Clone, Copy)]
struct PoolEntry {
    gamma_ratio: f64,
    t_ratio: f64,
    machine: Machine,
    /// Index of the same coordinates in the evaluation lattice.
    lattice: usize,
}

impl PoolEntry {
    fn answers(&self) -> (bool, bool) {
        match self.machine {
            Machine::Para => (true, false),
            Machine::Ord => (false, true),
            Machine::Both => (true, in_ord_window(self.t_ratio)),
        }
    }
}

fn in_ord_window(t: f64) -> bool {
    t <= ORDERED_T_MAX + 1e-12
}

/// Precomputed pool, ground truth and lattice for one problem.
enum Context {
    Qutrit {
        features: Vec<Vec<f64>>,
        densities: Vec<DensityMatrix>,
        /// True classes `0..3`.
        classes: Vec<usize>,
        /// Truth in the target's label space.
        truth: Vec<usize>,
        n_classes: usize,
    },
    Phase {
        /// Evaluation lattice.
        grid: PhaseGrid,
        pool: Vec<PoolEntry>,
        boundary: BoundaryModel,
        target: PhaseTarget,
    },
}

impl Context {
    fn new(problem: &Problem) -> Result<Self> {
        match *problem {
            Problem::Qutrit { case, target, .. } => {
                let grid = QutritGrid::generate(case);
                let classes = grid.labels();
                let (truth, n_classes) = match target {
                    QutritTarget::ThreeClass => (classes.clone(), 3),
                    QutritTarget::OneVsRest(c) => {
                        if !(1..=3).contains(&c) {
                            return Err(invalid(format!("one-vs-rest class {c} outside 1..=3")));
                        }
                        (classes.iter().map(|&k| (k + 1 == c as usize) as usize).collect(), 2)
                    }
                };
                Ok(Context::Qutrit {
                    features: grid.features(),
                    densities: grid.samples.iter().map(|s| s.density()).collect(),
                    classes,
                    truth,
                    n_classes,
                })
            }
            Problem::Phase { target, k } => {
                if !(k >= 0.0) {
                    return Err(invalid(format!("noise coefficient k = {k} must be nonnegative")));
                }
                let boundary = BoundaryModel::default();
                let grid = match target {
                    PhaseTarget::OrderedVsRest => PhaseGrid::new(1.1, ORDERED_T_MAX, &boundary),
                    _ => PhaseGrid::full(&boundary),
                };
                let entry = |i: usize, machine| {
                    let s = &grid.samples[i];
                    PoolEntry { gamma_ratio: s.gamma_ratio, t_ratio: s.t_ratio, machine, lattice: i }
                };
                let all = 0..grid.len();
                let pool: Vec<PoolEntry> = match target {
                    PhaseTarget::ParaVsRest => all.map(|i| entry(i, Machine::Para)).collect(),
                    PhaseTarget::OrderedVsRest => all.map(|i| entry(i, Machine::Ord)).collect(),
                    PhaseTarget::ThreePhaseJoint => all.map(|i| entry(i, Machine::Both)).collect(),
                    PhaseTarget::ThreePhase => {
                        let low: Vec<usize> = all.clone().filter(|&i| in_ord_window(grid.samples[i].t_ratio)).collect();
                        all.map(|i| entry(i, Machine::Para))
                            .chain(low.into_iter().map(|i| entry(i, Machine::Ord)))
                            .collect()
                    }
                };
                Ok(Context::Phase { grid, pool, boundary, target })
            }
        }
    }

    fn pool_size(&self) -> usize {
        match self {
            Context::Qutrit { features, .. } => features.len(),
            Context::Phase { pool, .. } => pool.len(),
        }
    }
}

/// Decision values of the fitted machines over the whole phase lattice.
struct PhaseDecisions {
    para: Option<Vec<f64>>,
    ord: Option<Vec<f64>>,
}

/// Incremental driver of one active-learning trial.
pub struct ALRunner<R: Rng> {
    cfg: ALConfig,
    ctx: Context,
    rng: R,
    state: ALState,
    decisions: Option<PhaseDecisions>,
}

/// Pool sizes above this are evaluated every `SPARSE_EVAL_EVERY` labels.
pub const DENSE_EVAL_MAX_POOL: usize = 1000;
pub const SPARSE_EVAL_EVERY: usize = 5;

/// Ranking key of one machine. Its confidence `σ(2f)` is a two-class
/// distribution, whose uncertainty scores all decrease with `|f|`; ranking by
/// `−|f|` avoids the saturation of `σ` for large decisions.
fn machine_score(f: f64, _strategy: QueryStrategy) -> f64 {
    -f.abs()
}

impl<R: Rng> ALRunner<R> {
    pub fn new(cfg: ALConfig, rng: R) -> Result<Self> {
        validate(&cfg)?;
        let ctx = Context::new(&cfg.problem)?;
        let n = ctx.pool_size();
        let ledger = match cfg.problem {
            Problem::Qutrit { .. } => Some(vec![1.0; n]),
            Problem::Phase { .. } => None,
        };
        let mut runner = Self {
            cfg,
            ctx,
            rng,
            state: ALState {
                labeled: Vec::new(),
                labels: Vec::new(),
                unlabeled: (0..n).collect(),
                labels_used: 0,
                n_seeds: 0,
                queries: Vec::new(),
                fidelity_ledger: ledger,
                curve: Vec::new(),
                model: FittedModel::Phase { para: None, ord: None },
            },
            decisions: None,
        };
        runner.seed()?;
        runner.state.n_seeds = runner.state.labels_used;
        runner.refit()?;
        runner.record()?;
        Ok(runner)
    }

    pub fn state(&self) -> &ALState {
        &self.state
    }

    pub fn is_done(&self) -> bool {
        if self.state.unlabeled.is_empty() {
            return true;
        }
        match self.cfg.stopping {
            StoppingRule::MaxLabels(n) => self.state.labels_used >= n,
            StoppingRule::MinSystemFidelity(f) => self.state.system_fidelity().is_some_and(|s| s <= f),
        }
    }

    /// Uncertainty scores of the unlabeled samples, in `state().unlabeled`
    /// order.
    pub fn candidate_scores(&self) -> Result<Vec<f64>> {
        let strategy = self.cfg.strategy;
        if strategy == QueryStrategy::Random {
            return Err(invalid("random sampling has no uncertainty score"));
        }
        match &self.ctx {
            Context::Qutrit { features, .. } => self
                .state
                .unlabeled
                .iter()
                .map(|&i| ranking_score(&self.state.model.class_proba(&features[i]), strategy))
                .collect(),
            Context::Phase { pool, .. } => {
                let d = self.decisions.as_ref().expect("decisions follow every fit");
                let active = self.active_machine();
                Ok(self
                    .state
                    .unlabeled
                    .iter()
                    .map(|&i| {
                        let e = &pool[i];
                        if active.is_some_and(|m| m != e.machine) {
                            return f64::NEG_INFINITY;
                        }
                        let (ap, ao) = e.answers();
                        let mut s = f64::NEG_INFINITY;
                        if let (true, Some(fp)) = (ap, &d.para) {
                            s = s.max(machine_score(fp[e.lattice], strategy));
                        }
                        if let (true, Some(fo)) = (ao, &d.ord) {
                            s = s.max(machine_score(fo[e.lattice], strategy));
                        }
                        s
                    })
                    .collect())
            }
        }
    }

    /// In the split three-phase mode, the machine whose pool the next query
    /// comes from: the one holding fewer labels, the paramagnetic one on
    /// ties, falling back to whichever still has unlabeled samples.
    fn active_machine(&self) -> Option<Machine> {
        let Context::Phase { pool, target: PhaseTarget::ThreePhase, .. } = &self.ctx else {
            return None;
        };
        let count = |m: Machine| self.state.labeled.iter().filter(|&&i| pool[i].machine == m).count();
        let left = |m: Machine| self.state.unlabeled.iter().any(|&i| pool[i].machine == m);
        let prefer = if count(Machine::Ord) < count(Machine::Para) { Machine::Ord } else { Machine::Para };
        let other = if prefer == Machine::Para { Machine::Ord } else { Machine::Para };
        Some(if left(prefer) { prefer } else { other })
    }

    /// Positions in `state().unlabeled` the next query may pick.
    fn eligible(&self) -> Vec<usize> {
        let (Some(m), Context::Phase { pool, .. }) = (self.active_machine(), &self.ctx) else {
            return (0..self.state.unlabeled.len()).collect();
        };
        (0..self.state.unlabeled.len()).filter(|&p| pool[self.state.unlabeled[p]].machine == m).collect()
    }

    /// Queries, labels and refits once; returns the queried pool index.
    pub fn step(&mut self) -> Result<usize> {
        if self.state.unlabeled.is_empty() {
            return Err(Error::EmptyPool);
        }
        let pos = match self.cfg.strategy {
            QueryStrategy::Random => {
                let eligible = self.eligible();
                eligible[select_query(&vec![0.0; eligible.len()], &mut self.rng, QueryStrategy::Random)?]
            }
            s => {
                let scores = self.candidate_scores()?;
                select_query(&scores, &mut self.rng, s)?
            }
        };
        let idx = self.state.unlabeled[pos];
        self.label_at(pos)?;
        self.state.queries.push(idx);
        self.refit()?;
        let dense = self.ctx.pool_size() <= DENSE_EVAL_MAX_POOL;
        if dense || self.state.labels_used % SPARSE_EVAL_EVERY == 0 {
            self.record()?;
        }
        Ok(idx)
    }

    /// Adds a final curve point if the last labeling was not evaluated.
    pub fn finish(mut self) -> Result<ALState> {
        if self.state.curve.last().map(|p| p.n_labels) != Some(self.state.labels_used) {
            self.record()?;
        }
        Ok(self.state)
    }

    /// Fraction of the ground-truth grid the current model classifies
    /// correctly.
    pub fn accuracy(&self) -> Result<f64> {
        match &self.ctx {
            Context::Qutrit { features, truth, .. } => {
                let hits = features
                    .iter()
                    .zip(truth)
                    .filter(|(x, &t)| argmax(&self.state.model.class_proba(x)) == t)
                    .count();
                Ok(hits as f64 / truth.len() as f64)
            }
            Context::Phase { grid, target, .. } => {
                let d = self.decisions.as_ref().expect("decisions follow every fit");
                let hits = grid
                    .samples
                    .iter()
                    .enumerate()
                    .filter(|&(i, s)| match target {
                        PhaseTarget::ParaVsRest => {
                            (d.para.as_ref().unwrap()[i] > 0.0) == (s.true_phase == Phase::Paramagnetic)
                        }
                        PhaseTarget::OrderedVsRest => {
                            (d.ord.as_ref().unwrap()[i] > 0.0) == (s.true_phase == Phase::Ordered)
                        }
                        PhaseTarget::ThreePhase | PhaseTarget::ThreePhaseJoint => {
                            let fo = in_ord_window(s.t_ratio).then(|| d.ord.as_ref().unwrap()[i]);
                            crate::classifiers::combine_phase(d.para.as_ref().unwrap()[i], fo) == s.true_phase
                        }
                    })
                    .count();
                Ok(hits as f64 / grid.len() as f64)
            }
        }
    }

    fn record(&mut self) -> Result<()> {
        let accuracy = self.accuracy()?;
        let point = CurvePoint {
            n_labels: self.state.labels_used,
            accuracy,
            mean_fidelity: self.state.system_fidelity(),
        };
        self.state.curve.push(point);
        Ok(())
    }

    fn seed(&mut self) -> Result<()> {
        match &self.ctx {
            Context::Qutrit { classes, truth, .. } => {
                // one true-labeled sample per class, chosen uniformly
                let mut picks = Vec::with_capacity(3);
                for c in 0..3 {
                    let members: Vec<usize> = (0..classes.len()).filter(|&i| classes[i] == c).collect();
                    if members.is_empty() {
                        return Err(invalid(format!("class {} is absent from the pool", c + 1)));
                    }
                    picks.push(members[self.rng.gen_range(0..members.len())]);
                }
                let truth: Vec<usize> = picks.iter().map(|&i| truth[i]).collect();
                for (i, t) in picks.into_iter().zip(truth) {
                    let pos = self.state.unlabeled.binary_search(&i).expect("unlabeled");
                    self.state.unlabeled.remove(pos);
                    self.state.labeled.push(i);
                    self.state.labels.push(Label::Class(t));
                    self.state.labels_used += 1;
                }
                Ok(())
            }
            Context::Phase { target, .. } => {
                let budget = match self.cfg.stopping {
                    StoppingRule::MaxLabels(n) => n,
                    StoppingRule::MinSystemFidelity(_) => unreachable!("rejected by validate"),
                };
                let (need_para, need_ord) = target.machines();
                loop {
                    let (mut para, mut ord) = ([false; 2], [false; 2]);
                    for l in &self.state.labels {
                        if let Label::Ovr { para: p, ord: o } = l {
                            if let Some(v) = p {
                                para[*v as usize] = true;
                            }
                            if let Some(v) = o {
                                ord[*v as usize] = true;
                            }
                        }
                    }
                    // random draws from the sampling space of the first
                    // machine still missing a label
                    let want_para = need_para && para != [true; 2];
                    let want_ord = need_ord && ord != [true; 2];
                    if !want_para && !want_ord {
                        return Ok(());
                    }
                    let Context::Phase { pool, .. } = &self.ctx else { unreachable!() };
                    let candidates: Vec<usize> = (0..self.state.unlabeled.len())
                        .filter(|&p| {
                            let (ap, ao) = pool[self.state.unlabeled[p]].answers();
                            if want_para { ap } else { ao }
                        })
                        .collect();
                    if self.state.labels_used >= budget || candidates.is_empty() {
                        return Err(invalid(format!(
                            "budget of {budget} labels ran out before every one-vs-rest set held both labels"
                        )));
                    }
                    let pos = candidates[self.rng.gen_range(0..candidates.len())];
                    self.label_at(pos)?;
                }
            }
        }
    }

    /// Labels the unlabeled sample at `pos` through the configured oracle.
    fn label_at(&mut self, pos: usize) -> Result<()> {
        let idx = self.state.unlabeled.remove(pos);
        let label = match (&self.ctx, self.cfg.problem) {
            (Context::Qutrit { densities, .. }, Problem::Qutrit { target, labeler, .. }) => {
                let (class, fid) = match labeler {
                    Labeler::WeakMeasurement(cc) => {
                        let out = label_qutrit(&densities[idx], &cc, &mut self.rng)?;
                        (out.assigned_class as usize - 1, out.final_fidelity)
                    }
                    Labeler::Noiseless => {
                        let Context::Qutrit { classes, .. } = &self.ctx else { unreachable!() };
                        (classes[idx], 1.0)
                    }
                };
                if let Some(l) = self.state.fidelity_ledger.as_mut() {
                    l[idx] = fid;
                }
                Label::Class(match target {
                    QutritTarget::ThreeClass => class,
                    QutritTarget::OneVsRest(c) => (class + 1 == c as usize) as usize,
                })
            }
            (Context::Phase { pool, boundary, .. }, Problem::Phase { k, .. }) => {
                let e = pool[idx];
                let (ap, ao) = e.answers();
                let para = if ap {
                    Some(noisy_ovr_label(e.gamma_ratio, e.t_ratio, OvrBoundary::ParaVsRest, k, boundary, &mut self.rng)?)
                } else {
                    None
                };
                let ord = if ao {
                    Some(noisy_ovr_label(e.gamma_ratio, e.t_ratio, OvrBoundary::OrderedVsRest, k, boundary, &mut self.rng)?)
                } else {
                    None
                };
                Label::Ovr { para, ord }
            }
            _ => unreachable!("context matches problem"),
        };
        self.state.labeled.push(idx);
        self.state.labels.push(label);
        self.state.labels_used += 1;
        Ok(())
    }

    /// Refits from scratch on the labeled set taken in ascending pool order.
    fn refit(&mut self) -> Result<()> {
        let mut order: Vec<usize> = (0..self.state.labeled.len()).collect();
        order.sort_by_key(|&k| self.state.labeled[k]);
        match &self.ctx {
            Context::Qutrit { features, n_classes, .. } => {
                let Problem::Qutrit { model, .. } = self.cfg.problem else { unreachable!() };
                let x: Vec<Vec<f64>> = order.iter().map(|&k| features[self.state.labeled[k]].clone()).collect();
                let y: Vec<usize> = order
                    .iter()
                    .map(|&k| match self.state.labels[k] {
                        Label::Class(c) => c,
                        Label::Ovr { .. } => unreachable!(),
                    })
                    .collect();
                self.state.model = match model {
                    QutritModel::Logistic => {
                        FittedModel::Logistic(LogisticModel::fit(&x, &y, *n_classes, &LogisticConfig::default())?)
                    }
                    QutritModel::NaiveBayes => FittedModel::NaiveBayes(GaussianNBModel::fit(&x, &y, *n_classes)?),
                };
            }
            Context::Phase { grid, pool, target, .. } => {
                let (need_para, need_ord) = target.machines();
                let collect = |which: fn(&Label) -> Option<bool>| {
                    let mut x = Vec::new();
                    let mut y = Vec::new();
                    for &k in &order {
                        if let Some(v) = which(&self.state.labels[k]) {
                            let e = &pool[self.state.labeled[k]];
                            x.push(vec![e.gamma_ratio, e.t_ratio]);
                            y.push(v);
                        }
                    }
                    (x, y)
                };
                let cfg = SvmConfig::default();
                let para = if need_para {
                    let (x, y) = collect(|l| match l {
                        Label::Ovr { para, .. } => *para,
                        _ => None,
                    });
                    Some(RbfSvmModel::fit(&x, &y, &cfg)?)
                } else {
                    None
                };
                let ord = if need_ord {
                    let (x, y) = collect(|l| match l {
                        Label::Ovr { ord, .. } => *ord,
                        _ => None,
                    });
                    Some(RbfSvmModel::fit(&x, &y, &cfg)?)
                } else {
                    None
                };
                self.decisions = Some(PhaseDecisions {
                    para: para.as_ref().map(|m| m.decision_on_lattice(&grid.gammas, &grid.temps)).transpose()?,
                    ord: ord.as_ref().map(|m| m.decision_on_lattice(&grid.gammas, &grid.temps)).transpose()?,
                });
                self.state.model = FittedModel::Phase { para, ord };
            }
        }
        Ok(())
    }
}

fn validate(cfg: &ALConfig) -> Result<()> {
    match cfg.stopping {
        StoppingRule::MaxLabels(n) => {
            let min = match cfg.problem {
                Problem::Qutrit { .. } => 3,
                Problem::Phase { .. } => 2,
            };
            if n < min {
                return Err(invalid(format!(
                    "a budget of {n} labels cannot cover the {min} seed labels the problem needs"
                )));
            }
        }
        StoppingRule::MinSystemFidelity(f) => {
            if !(f > 0.0 && f <= 1.0) {
                return Err(invalid(format!("fidelity floor {f} outside (0, 1]")));
            }
            if !matches!(cfg.problem, Problem::Qutrit { .. }) {
                return Err(invalid("a fidelity floor only applies to qutrit problems"));
            }
        }
    }
    if let Problem::Qutrit { labeler: Labeler::WeakMeasurement(cc), .. } = cfg.problem {
        cc.validate()?;
    }
    Ok(())
}

/// Runs one trial to its stopping rule.
pub fn al_run<R: Rng>(cfg: &ALConfig, rng: R) -> Result<ALState> {
    let mut runner = ALRunner::new(*cfg, rng)?;
    while !runner.is_done() {
        runner.step()?;
    }
    runner.finish()
}

/// Accuracy of a fitted model against the problem's ground-truth grid.
pub fn evaluate_accuracy(model: &FittedModel, problem: &Problem) -> Result<f64> {
    let ctx = Context::new(problem)?;
    let hits = match (&ctx, model, problem) {
        (Context::Qutrit { features, truth, .. }, FittedModel::Logistic(_) | FittedModel::NaiveBayes(_), _) => {
            features.iter().zip(truth).filter(|(x, &t)| argmax(&model.class_proba(x)) == t).count()
        }
        (Context::Phase { grid, .. }, FittedModel::Phase { para, ord }, Problem::Phase { target, .. }) => {
            let predict: Box<dyn Fn(f64, f64) -> Phase> = match (target, para, ord) {
                (PhaseTarget::ParaVsRest, Some(p), _) => Box::new(move |g, t| {
                    if p.decision_unchecked(&[g, t]) > 0.0 { Phase::Paramagnetic } else { Phase::KT }
                }),
                (PhaseTarget::OrderedVsRest, _, Some(o)) => Box::new(move |g, t| {
                    if o.decision_unchecked(&[g, t]) > 0.0 { Phase::Ordered } else { Phase::KT }
                }),
                (PhaseTarget::ThreePhase | PhaseTarget::ThreePhaseJoint, Some(p), Some(o)) => {
                    let m = PhaseOvrModel { svm_para: p.clone(), svm_ord: o.clone(), ord_t_max: ORDERED_T_MAX };
                    Box::new(move |g, t| m.predict(g, t))
                }
                _ => return Err(invalid("model lacks a machine the target needs")),
            };
            // binary targets only distinguish the positive phase from the rest
            let collapse = |ph: Phase| match target {
                PhaseTarget::ParaVsRest => ph == Phase::Paramagnetic,
                PhaseTarget::OrderedVsRest => ph == Phase::Ordered,
                PhaseTarget::ThreePhase | PhaseTarget::ThreePhaseJoint => true,
            };
            grid.samples
                .iter()
                .filter(|s| {
                    let ph = predict(s.gamma_ratio, s.t_ratio);
                    match target {
                        _ if target.three_class() => ph == s.true_phase,
                        _ => collapse(ph) == collapse(s.true_phase),
                    }
                })
                .count()
        }
        _ => return Err(invalid("model kind does not match the problem")),
    };
    let total = match &ctx {
        Context::Qutrit { features, .. } => features.len(),
        Context::Phase { grid, .. } => grid.len(),
    };
    Ok(hits as f64 / total as f64)
}

/// Refines the machines of a finished phase trial by self-training: each
/// machine adopts confident pseudo-labels from the still unlabeled part of
/// its own sampling space. Returns the refit model and the number of
/// pseudo-labels adopted per machine.
pub fn self_train_phase(state: &ALState, problem: &Problem, cfg: &SelfTrainConfig) -> Result<(FittedModel, [usize; 2])> {
    let ctx = Context::new(problem)?;
    let Context::Phase { pool, target, .. } = &ctx else {
        return Err(invalid("self-training after active learning applies to phase problems"));
    };
    if state.labeled.len() + state.unlabeled.len() != pool.len() {
        return Err(invalid("trial state does not belong to this problem"));
    }
    let mut order: Vec<usize> = (0..state.labeled.len()).collect();
    order.sort_by_key(|&k| state.labeled[k]);
    let (need_para, need_ord) = target.machines();
    let mut adopted = [0; 2];
    let mut refine = |which: usize| -> Result<RbfSvmModel> {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for &k in &order {
            let l = match state.labels[k] {
                Label::Ovr { para, ord } => if which == 0 { para } else { ord },
                Label::Class(_) => return Err(invalid("trial state does not belong to this problem")),
            };
            if let Some(v) = l {
                let e = &pool[state.labeled[k]];
                x.push(vec![e.gamma_ratio, e.t_ratio]);
                y.push(v as usize);
            }
        }
        let unlabeled: Vec<Vec<f64>> = state
            .unlabeled
            .iter()
            .map(|&i| &pool[i])
            .filter(|e| {
                let (ap, ao) = e.answers();
                if which == 0 { ap } else { ao }
            })
            .map(|e| vec![e.gamma_ratio, e.t_ratio])
            .collect();
        let out = self_train::<RbfSvmModel>(&x, &y, &unlabeled, 2, cfg)?;
        adopted[which] = out.pseudo_labels.len();
        Ok(out.model)
    };
    let para = if need_para { Some(refine(0)?) } else { None };
    let ord = if need_ord { Some(refine(1)?) } else { None };
    Ok((FittedModel::Phase { para, ord }, adopted))
}

/// Ranking scores of arbitrary samples under a fitted model, on the scale
/// the query selection uses. Decision-function models are scored per machine
/// by `−|f|` and the most uncertain applicable machine wins; the ordered machine applies at
/// `T/J ≤ 0.3` (second feature).
pub fn uncertainty_scores(model: &FittedModel, samples: &[Vec<f64>], strategy: QueryStrategy) -> Result<Vec<f64>> {
    if strategy == QueryStrategy::Random {
        return Err(invalid("random sampling has no uncertainty score"));
    }
    samples
        .iter()
        .map(|x| match model {
            FittedModel::Logistic(m) => ranking_score(&m.predict_proba(x)?, strategy),
            FittedModel::NaiveBayes(m) => ranking_score(&m.predict_proba(x)?, strategy),
            FittedModel::Phase { para, ord } => {
                let mut s = f64::NEG_INFINITY;
                if let Some(m) = para {
                    s = s.max(machine_score(m.decision(x)?, strategy));
                }
                if let Some(m) = ord {
                    if x.get(1).is_some_and(|&t| t <= ORDERED_T_MAX + 1e-12) {
                        s = s.max(machine_score(m.decision(x)?, strategy));
                    }
                }
                if s == f64::NEG_INFINITY {
                    return Err(Error::NotFitted);
                }
                Ok(s)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_rng;

    fn qutrit_cfg(strategy: QueryStrategy, budget: usize) -> ALConfig {
        ALConfig {
            problem: Problem::Qutrit {
                case: QutritCase::CaseI,
                model: QutritModel::Logistic,
                target: QutritTarget::ThreeClass,
                labeler: Labeler::WeakMeasurement(CouplingConfig::exact(0.5, 0.5).unwrap()),
            },
            strategy,
            stopping: StoppingRule::MaxLabels(budget),
        }
    }

    fn phase_cfg(strategy: QueryStrategy, target: PhaseTarget, budget: usize) -> ALConfig {
        ALConfig { problem: Problem::Phase { target, k: 50.0 }, strategy, stopping: StoppingRule::MaxLabels(budget) }
    }

    fn check_partition(s: &ALState, n: usize) {
        let mut all: Vec<usize> = s.labeled.iter().chain(&s.unlabeled).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..n).collect::<Vec<_>>());
        assert_eq!(s.labeled.len(), s.labels.len());
        assert_eq!(s.labeled.len(), s.labels_used);
    }

    #[test]
    fn every_query_maximizes_the_score_and_keeps_the_partition() {
        for strategy in [QueryStrategy::LeastConfidence, QueryStrategy::Margin, QueryStrategy::Entropy] {
            let mut r = ALRunner::new(qutrit_cfg(strategy, 15), trial_rng(9, 0)).unwrap();
            while !r.is_done() {
                let scores = r.candidate_scores().unwrap();
                let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let unl = r.state().unlabeled.clone();
                let idx = r.step().unwrap();
                let pos = unl.iter().position(|&u| u == idx).unwrap();
                assert_eq!(scores[pos], best);
                assert_eq!(pos, scores.iter().position(|&v| v == best).unwrap());
                check_partition(r.state(), 441);
            }
        }
    }

    #[test]
    fn seeds_cover_every_class() {
        let r = ALRunner::new(qutrit_cfg(QueryStrategy::Random, 3), trial_rng(1, 2)).unwrap();
        let s = r.state();
        let mut classes: Vec<usize> = s.labels.iter().map(|l| if let Label::Class(c) = l { *c } else { 9 }).collect();
        classes.sort_unstable();
        assert_eq!(classes, vec![0, 1, 2]);
        assert_eq!(s.system_fidelity(), Some(1.0), "seed labels are free");
    }

    #[test]
    fn budget_equal_to_seed_size() {
        let s = al_run(&qutrit_cfg(QueryStrategy::Margin, 3), trial_rng(2, 0)).unwrap();
        assert_eq!(s.curve.len(), 1);
        assert_eq!(s.curve[0].n_labels, 3);
        assert!(s.queries.is_empty());
    }

    #[test]
    fn budget_below_seed_size_rejected() {
        assert!(al_run(&qutrit_cfg(QueryStrategy::Margin, 2), trial_rng(2, 0)).is_err());
        assert!(al_run(&phase_cfg(QueryStrategy::Margin, PhaseTarget::ThreePhase, 1), trial_rng(2, 0)).is_err());
    }

    #[test]
    fn deterministic_replay() {
        for cfg in [qutrit_cfg(QueryStrategy::Random, 20), qutrit_cfg(QueryStrategy::Entropy, 20)] {
            let a = al_run(&cfg, trial_rng(77, 3)).unwrap();
            let b = al_run(&cfg, trial_rng(77, 3)).unwrap();
            assert_eq!(a.queries, b.queries);
            assert_eq!(a.curve, b.curve);
        }
        let cfg = phase_cfg(QueryStrategy::Margin, PhaseTarget::ThreePhase, 25);
        let a = al_run(&cfg, trial_rng(5, 1)).unwrap();
        let b = al_run(&cfg, trial_rng(5, 1)).unwrap();
        assert_eq!(a.queries, b.queries);
        assert_eq!(a.curve, b.curve);
    }

    #[test]
    fn exhausting_the_pool_equals_full_supervision() {
        let cfg = ALConfig {
            problem: Problem::Qutrit {
                case: QutritCase::CaseII,
                model: QutritModel::NaiveBayes,
                target: QutritTarget::ThreeClass,
                labeler: Labeler::Noiseless,
            },
            strategy: QueryStrategy::Margin,
            stopping: StoppingRule::MaxLabels(441),
        };
        let s = al_run(&cfg, trial_rng(3, 0)).unwrap();
        assert!(s.unlabeled.is_empty());
        let grid = QutritGrid::generate(QutritCase::CaseII);
        let full = GaussianNBModel::fit(&grid.features(), &grid.labels(), 3).unwrap();
        assert_eq!(s.model, FittedModel::NaiveBayes(full));
    }

    #[test]
    fn fidelity_floor_stops_after_crossing() {
        let mut cfg = qutrit_cfg(QueryStrategy::Margin, 0);
        cfg.stopping = StoppingRule::MinSystemFidelity(0.995);
        let s = al_run(&cfg, trial_rng(4, 0)).unwrap();
        let fids: Vec<f64> = s.curve.iter().map(|p| p.mean_fidelity.unwrap()).collect();
        assert!(fids.windows(2).all(|w| w[1] <= w[0]));
        assert!(*fids.last().unwrap() <= 0.995);
        assert!(fids[fids.len() - 2] > 0.995);
    }

    #[test]
    fn phase_seeding_and_sparse_cadence() {
        let s = al_run(&phase_cfg(QueryStrategy::Random, PhaseTarget::ThreePhaseJoint, 23), trial_rng(6, 0)).unwrap();
        check_partition(&s, 6771);
        let last = s.curve.last().unwrap();
        assert_eq!(last.n_labels, 23);
        assert!(s.curve.iter().rev().skip(1).all(|p| p.n_labels % 5 == 0 || p.n_labels == s.n_seeds));
        assert!(last.mean_fidelity.is_none());
        let FittedModel::Phase { para: Some(_), ord: Some(_) } = &s.model else { panic!() };
        let direct =
            evaluate_accuracy(&s.model, &Problem::Phase { target: PhaseTarget::ThreePhaseJoint, k: 50.0 }).unwrap();
        assert!((direct - last.accuracy).abs() < 1e-12);
    }

    #[test]
    fn ordered_target_uses_the_low_temperature_pool() {
        let s = al_run(&phase_cfg(QueryStrategy::Margin, PhaseTarget::OrderedVsRest, 12), trial_rng(8, 0)).unwrap();
        check_partition(&s, 111 * 31);
    }

    #[test]
    fn pointwise_scores_agree_with_runner() {
        let r = ALRunner::new(phase_cfg(QueryStrategy::Margin, PhaseTarget::ThreePhaseJoint, 30), trial_rng(7, 0)).unwrap();
        let grid = PhaseGrid::full(&BoundaryModel::default());
        let xs: Vec<Vec<f64>> = r.state().unlabeled.iter().map(|&i| grid.samples[i].features().to_vec()).collect();
        let a = r.candidate_scores().unwrap();
        let b = uncertainty_scores(&r.state().model, &xs, QueryStrategy::Margin).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn split_mode_alternates_between_sampling_spaces() {
        let full = 6771;
        for strategy in [QueryStrategy::Random, QueryStrategy::Entropy] {
            let s = al_run(&phase_cfg(strategy, PhaseTarget::ThreePhase, 40), trial_rng(10, 0)).unwrap();
            check_partition(&s, full + 111 * 31);
            let ord = s.labeled.iter().filter(|&&i| i >= full).count();
            let para = s.labeled.len() - ord;
            assert!(para.abs_diff(ord) <= s.n_seeds.max(1), "{para} vs {ord}");
            for (&i, l) in s.labeled.iter().zip(&s.labels) {
                let Label::Ovr { para, ord } = *l else { panic!() };
                assert_eq!(para.is_some(), i < full);
                assert_eq!(ord.is_some(), i >= full);
            }
            let direct = evaluate_accuracy(&s.model, &Problem::Phase { target: PhaseTarget::ThreePhase, k: 50.0 }).unwrap();
            assert!((direct - s.curve.last().unwrap().accuracy).abs() < 1e-12);
        }
    }
}
