//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run a subset with `cargo test --release --test acceptance -- 1 9`.
//! A failing criterion is reported, not hidden; the process exits nonzero
//! only on a harness error, or on any FAIL when `ALPHYS_ACCEPTANCE_STRICT`
//! is set.

use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

use alphys::active_learning::{
    aggregate_curves, self_train_phase, ALRunner, Labeler, PhaseTarget, QutritModel, QutritTarget,
};
use alphys::classifiers::{logistic_objective, SvmConfig};
use alphys::ctqmc::{ed_oracle, poisson_chi_square, run_simulation, Geometry, LatticeSpec, RunOptions};
use alphys::datasets::QutritCase;
use alphys::quantum::fidelity;
use alphys::weak_measurement::{post_state_and_loss, reconstruct_diagonal};
use alphys::{
    al_run, evaluate_accuracy, trial_rng, ALConfig, CouplingConfig, DensityMatrix, Ket, Problem, QueryStrategy,
    RbfSvmModel, SelfTrainConfig, StoppingRule,
};
use num_complex::Complex64;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const SEED: u64 = 2024;
const THETAS: [f64; 4] = [0.1, 0.5, 1.0, FRAC_PI_2];
const USAMP: [QueryStrategy; 3] = [QueryStrategy::LeastConfidence, QueryStrategy::Margin, QueryStrategy::Entropy];

type Outcome = Result<(bool, String), String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn random_qutrit<R: Rng>(rng: &mut R) -> Ket {
    // uniform on the unit sphere of C³ by rejection from the cube
    loop {
        let v: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-6 && n2 <= 1.0 {
            let n = n2.sqrt();
            let amps = (0..3).map(|k| Complex64::new(v[2 * k] / n, v[2 * k + 1] / n)).collect();
            return Ket::new(amps).expect("normalized");
        }
    }
}

fn weak(theta: f64) -> Labeler {
    Labeler::WeakMeasurement(CouplingConfig::exact(theta, theta).expect("valid angles"))
}

/// Mean accuracy at `n` labels over `trials` seeded trials.
fn mean_at(problem: Problem, strategy: QueryStrategy, budget: usize, trials: u64, n: usize) -> Result<f64, String> {
    let cfg = ALConfig { problem, strategy, stopping: StoppingRule::MaxLabels(budget) };
    let curves = (0..trials)
        .map(|t| al_run(&cfg, trial_rng(SEED, t)).map(|s| s.curve))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let agg = aggregate_curves(&curves);
    let p = agg.iter().find(|p| p.n_labels == n).ok_or(format!("no curve point at {n} labels"))?;
    if p.trials as u64 != trials {
        return Err(format!("only {} of {trials} trials reached {n} labels", p.trials));
    }
    Ok(p.mean_accuracy)
}

fn c1_reconstruction() -> Outcome {
    let mut rng = trial_rng(SEED, 1);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let rho = DensityMatrix::pure(&random_qutrit(&mut rng));
        let pops = rho.populations();
        for ta in THETAS {
            for tb in THETAS {
                let cc = CouplingConfig::exact(ta, tb).map_err(err)?;
                for (j, p) in pops.iter().enumerate() {
                    let est = reconstruct_diagonal(&rho, j, &cc, &mut rng).map_err(err)?;
                    worst = worst.max((est - p).abs());
                }
            }
        }
    }
    Ok((worst <= 1e-9, format!("max |ρ̂ⱼⱼ − ρⱼⱼ| = {worst:.2e} (≤ 1e-9) over 200 states × 16 angle pairs")))
}

fn c2_fidelity_limits() -> Outcome {
    let mut rng = trial_rng(SEED, 2);
    let mut weakest: f64 = 1.0;
    for _ in 0..200 {
        let rho = DensityMatrix::pure(&random_qutrit(&mut rng));
        let cc = CouplingConfig::exact(1e-4, 1e-4).map_err(err)?;
        for j in 0..3 {
            weakest = weakest.min(post_state_and_loss(&rho, j, &cc).map_err(err)?.1);
        }
    }
    let mixed = DensityMatrix::maximally_mixed(3).map_err(err)?;
    let mut monotone = true;
    let mut trace = Vec::new();
    for tb in THETAS {
        for j in 0..3 {
            let mut prev = f64::INFINITY;
            for ta in THETAS {
                let cc = CouplingConfig::exact(ta, tb).map_err(err)?;
                let (post, f) = post_state_and_loss(&mixed, j, &cc).map_err(err)?;
                // recomputed independently of the returned value
                let f2 = fidelity(&mixed, &post).map_err(err)?;
                monotone &= f <= prev + 1e-12 && (f - f2).abs() < 1e-12;
                prev = f;
                if tb == 0.5 && j == 0 {
                    trace.push(format!("{f:.6}"));
                }
            }
        }
    }
    let ok = weakest >= 1.0 - 1e-6 && monotone;
    Ok((ok, format!("min F at θ = 1e-4: 1 − {:.1e} (≤ 1e-6); maximally mixed F along θ_A non-increasing: {monotone} [{}]", 1.0 - weakest, trace.join(", "))))
}

fn c3_case1_logistic() -> Outcome {
    let problem = Problem::Qutrit {
        case: QutritCase::CaseI,
        model: QutritModel::Logistic,
        target: QutritTarget::ThreeClass,
        labeler: weak(0.5),
    };
    // curves are evaluated after every label, so stopping at 22 of the
    // 66-label budget leaves the 22-label point unchanged
    let random = mean_at(problem, QueryStrategy::Random, 22, 200, 22)?;
    let mut ok = true;
    let mut parts = vec![format!("random {random:.4}")];
    let mut margin = 0.0;
    for s in USAMP {
        let m = mean_at(problem, s, 22, 200, 22)?;
        ok &= m >= random + 0.02;
        if s == QueryStrategy::Margin {
            margin = m;
        }
        parts.push(format!("{} {m:.4}", s.name()));
    }
    let band = (0.85..=0.93).contains(&margin);
    Ok((
        band && ok,
        format!("at 22 labels: {}; margin in [0.85, 0.93]: {band}; every USAMP ≥ random + 0.02: {ok}", parts.join(", ")),
    ))
}

fn c4_phase_k50() -> Outcome {
    let problem = Problem::Phase { target: PhaseTarget::ParaVsRest, k: 50.0 };
    let margin = mean_at(problem, QueryStrategy::Margin, 100, 100, 100)?;
    let random = mean_at(problem, QueryStrategy::Random, 100, 100, 100)?;
    let ok = margin >= 0.97 && (0.88..=0.97).contains(&random) && margin > random;
    Ok((ok, format!("at 100 labels: margin {margin:.4} (≥ 0.97), random {random:.4} (in [0.88, 0.97])")))
}

fn c5_noise_ordering() -> Outcome {
    let at = |k: f64, s| mean_at(Problem::Phase { target: PhaseTarget::ThreePhase, k }, s, 100, 100, 100);
    let hi = at(100.0, QueryStrategy::Margin)?;
    let rs = at(100.0, QueryStrategy::Random)?;
    let lo = at(5.0, QueryStrategy::Margin)?;
    Ok((hi > rs && rs > lo, format!("margin k=100 {hi:.4} > random k=100 {rs:.4} > margin k=5 {lo:.4}")))
}

fn c6_self_training() -> Outcome {
    let checkpoints = [20, 40, 60, 80, 100];
    let st = SelfTrainConfig::default();
    let configs =
        [(QueryStrategy::Random, 100.0), (QueryStrategy::Margin, 100.0), (QueryStrategy::Margin, 50.0), (QueryStrategy::Margin, 5.0)];
    let mut worst: (f64, String) = (0.0, String::new());
    for (s, k) in configs {
        let problem = Problem::Phase { target: PhaseTarget::ThreePhase, k };
        let cfg = ALConfig { problem, strategy: s, stopping: StoppingRule::MaxLabels(100) };
        let mut delta = [0.0; 5];
        for t in 0..100 {
            let mut runner = ALRunner::new(cfg, trial_rng(SEED, t)).map_err(err)?;
            for (ci, &cp) in checkpoints.iter().enumerate() {
                while runner.state().labels_used < cp {
                    runner.step().map_err(err)?;
                }
                let before = runner.accuracy().map_err(err)?;
                let (m, _) = self_train_phase(runner.state(), &problem, &st).map_err(err)?;
                delta[ci] += evaluate_accuracy(&m, &problem).map_err(err)? - before;
            }
        }
        for (ci, d) in delta.iter().enumerate() {
            let d = d / 100.0;
            if d.abs() >= worst.0.abs() {
                worst = (d, format!("{} k={k} at {} labels", s.name(), checkpoints[ci]));
            }
        }
    }
    Ok((worst.0.abs() < 0.02, format!("largest mean change {:+.4} ({}); bound 0.02", worst.0, worst.1)))
}

fn c7_case2_naive_bayes() -> Outcome {
    let problem = Problem::Qutrit {
        case: QutritCase::CaseII,
        model: QutritModel::NaiveBayes,
        target: QutritTarget::ThreeClass,
        labeler: weak(0.5),
    };
    let random = mean_at(problem, QueryStrategy::Random, 30, 200, 30)?;
    let mut parts = vec![format!("random {random:.4}")];
    let mut ok = true;
    for s in USAMP {
        let m = mean_at(problem, s, 30, 200, 30)?;
        ok &= random > m;
        parts.push(format!("{} {m:.4}", s.name()));
    }
    Ok((ok, format!("at 30 labels: {}", parts.join(", "))))
}

fn c8_binary_equivalence() -> Outcome {
    let mut problems = Vec::new();
    for model in [QutritModel::Logistic, QutritModel::NaiveBayes] {
        for c in 1..=3 {
            problems.push((
                Problem::Qutrit { case: QutritCase::CaseI, model, target: QutritTarget::OneVsRest(c), labeler: weak(0.5) },
                30,
            ));
        }
    }
    for target in [PhaseTarget::ParaVsRest, PhaseTarget::OrderedVsRest] {
        problems.push((Problem::Phase { target, k: 50.0 }, 40));
    }
    let mut compared = 0;
    for (problem, budget) in &problems {
        for t in 0..10 {
            let run = |s| {
                let cfg = ALConfig { problem: *problem, strategy: s, stopping: StoppingRule::MaxLabels(*budget) };
                al_run(&cfg, trial_rng(SEED, t)).map(|st| st.queries).map_err(err)
            };
            let reference = run(USAMP[0])?;
            for s in &USAMP[1..] {
                if run(*s)? != reference {
                    return Ok((false, format!("{problem:?} trial {t}: {} diverges from least_confidence", s.name())));
                }
            }
            compared += 1;
        }
    }
    Ok((true, format!("identical query sequences on {compared} seeded binary runs ({} sub-problems)", problems.len())))
}

fn c9_ctqmc() -> Outcome {
    let opts = RunOptions { sweeps: 21_000, thermalization: 1000, metropolis: false };
    let mut ok = true;
    let mut worst_z: f64 = 0.0;
    let mut worst_p: f64 = 1.0;
    let mut i = 0;
    for geometry in [Geometry::Triangle, Geometry::Periodic { l: 3 }] {
        for (gamma, t) in [(0.8, 1.0), (0.3, 0.5)] {
            let spec = LatticeSpec::new(geometry, 1.0, gamma, t).map_err(err)?;
            let ed = ed_oracle(&spec).map_err(err)?;
            let out = run_simulation(&spec, &opts, &mut trial_rng(SEED, i)).map_err(err)?;
            i += 1;
            for (e, exact) in [(out.observables.energy, ed.energy_per_site), (out.observables.nn_zz, ed.nn_zz)] {
                let z = (e.mean - exact) / e.stderr;
                ok &= z.abs() <= 3.0;
                worst_z = worst_z.max(z.abs());
            }
            let (chi2, dof) = poisson_chi_square(&out.cut_histogram, gamma * spec.beta()).map_err(err)?;
            let p = 1.0 - ChiSquared::new(dof as f64).map_err(err)?.cdf(chi2);
            ok &= p > 0.01;
            worst_p = worst_p.min(p);
        }
    }
    Ok((ok, format!("max |z| vs exact diagonalization {worst_z:.2} (≤ 3) on energy and ⟨σᶻσᶻ⟩; min Poisson p {worst_p:.3} (> 0.01)")))
}

fn c10_optimizers() -> Outcome {
    let mut rng = trial_rng(SEED, 10);
    let mut worst_grad: f64 = 0.0;
    for _ in 0..20 {
        let m = rng.gen_range(2..=4);
        let d = rng.gen_range(1..=4);
        let n = rng.gen_range(5..=30);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..m)).collect();
        let w: Vec<f64> = (0..m * (d + 1)).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lambda = rng.gen_range(0.01..2.0);
        let mut g = vec![0.0; w.len()];
        logistic_objective(&w, &x, &y, m, lambda, &mut g);
        let mut scratch = vec![0.0; w.len()];
        let h = 1e-5;
        let fd: Vec<f64> = (0..w.len())
            .map(|k| {
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[k] += h;
                wm[k] -= h;
                (logistic_objective(&wp, &x, &y, m, lambda, &mut scratch)
                    - logistic_objective(&wm, &x, &y, m, lambda, &mut scratch))
                    / (2.0 * h)
            })
            .collect();
        let diff = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = g.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-12);
        worst_grad = worst_grad.max(diff / scale);
    }

    let (mut box_ok, mut worst_eq, mut worst_kkt): (bool, f64, f64) = (true, 0.0, 0.0);
    for set in 0..20 {
        let separable = set % 2 == 0;
        let n = rng.gen_range(20..=60);
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let y: Vec<bool> = x
            .iter()
            .map(|p| {
                let side = p[0] + 0.5 * p[1] > 0.1;
                // the non-separable sets flip a quarter of the labels
                if !separable && rng.gen_bool(0.25) { !side } else { side }
            })
            .collect();
        if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
            continue;
        }
        let cfg = SvmConfig { c: if separable { 100.0 } else { 1.0 }, ..SvmConfig::default() };
        let model = RbfSvmModel::fit(&x, &y, &cfg).map_err(err)?;
        box_ok &= model.alphas().all(|a| (0.0..=model.c).contains(&a));
        worst_eq = worst_eq.max(model.coef.iter().sum::<f64>().abs());
        worst_kkt = worst_kkt.max(model.kkt_violation(&x, &y));
    }
    let ok = worst_grad <= 1e-5 && box_ok && worst_eq <= 1e-6 && worst_kkt <= 1e-3;
    Ok((
        ok,
        format!(
            "logistic gradient rel. error {worst_grad:.1e} (≤ 1e-5); SVM 0 ≤ α ≤ C: {box_ok}, |Σαy| {worst_eq:.1e} (≤ 1e-6), KKT {worst_kkt:.1e} (≤ 1e-3)"
        ),
    ))
}

fn main() {
    let criteria: [(usize, &str, fn() -> Outcome); 10] = [
        (1, "reconstruction exactness", c1_reconstruction),
        (2, "fidelity limits", c2_fidelity_limits),
        (3, "case I logistic learning curves", c3_case1_logistic),
        (4, "phase boundary, k = 50", c4_phase_k50),
        (5, "label-noise ordering", c5_noise_ordering),
        (6, "self-training null result", c6_self_training),
        (7, "case II naive Bayes counterexample", c7_case2_naive_bayes),
        (8, "binary equivalence of USAMP", c8_binary_equivalence),
        (9, "CTQMC validation", c9_ctqmc),
        (10, "optimizer correctness", c10_optimizers),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (mut passed, mut failed, mut broken) = (0, 0, 0);
    for (id, name, f) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let t0 = Instant::now();
        let outcome = f();
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok((true, detail)) => {
                passed += 1;
                println!("PASS criterion {id:>2} {name}: {detail} [{secs:.1} s]");
            }
            Ok((false, detail)) => {
                failed += 1;
                println!("FAIL criterion {id:>2} {name}: {detail} [{secs:.1} s]");
            }
            Err(e) => {
                broken += 1;
                println!("ERROR criterion {id:>2} {name}: {e} [{secs:.1} s]");
            }
        }
    }
    println!("acceptance: {passed} passed, {failed} failed, {broken} errors");
    let strict = std::env::var_os("ALPHYS_ACCEPTANCE_STRICT").is_some();
    if broken > 0 || (strict && failed > 0) {
        std::process::exit(1);
    }
}
