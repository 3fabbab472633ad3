use std::f64::consts::FRAC_PI_2;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use alphys::active_learning::{
    aggregate_curves, self_train_phase, write_aggregate_csv, write_curve_csv, ALRunner, Labeler, PhaseTarget,
    QutritModel, QutritTarget,
};
use alphys::ctqmc::{
    ed_oracle, poisson_chi_square, run_simulation, write_observables_csv, Estimate, Geometry, LatticeSpec,
    ObservableAccumulator, RunOptions,
};
use alphys::datasets::{write_phase_csv, write_qutrit_csv};
use alphys::stats::mean_std;
use alphys::weak_measurement::{label_qutrit, post_state_and_loss, reconstruct_diagonal};
use alphys::{
    al_run, evaluate_accuracy, trial_rng, ALConfig, BoundaryModel, CouplingConfig, CurvePoint, DensityMatrix, Ket,
    MeasurementMode, ModelSnapshot, PhaseGrid, Problem, QueryStrategy, QutritCase, QutritGrid, SelfTrainConfig,
    StoppingRule,
};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::config::{
    self, bad_value, check_kind, pick, CtqmcRunConfig, CtqmcValidateConfig, DatasetConfig, DatasetKind,
    ExperimentKind, LabelerKind, PhaseAlConfig, QutritAlConfig, ReconstructConfig, SslPhaseConfig,
};
use crate::{CliError, Global};

const DEFAULT_SEED: u64 = 2024;
const DEFAULT_OUT: &str = "alphys-out";

/// serde name of a unit enum variant, for file names.
fn tag<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|j| j.as_str().map(str::to_string))
        .unwrap_or_else(|| "unknown".into())
}

fn out_dir(g: &Global, from_config: Option<PathBuf>) -> Result<PathBuf, CliError> {
    let dir = pick(g.out.clone(), from_config, PathBuf::from(DEFAULT_OUT));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn trials(g: &Global, cfg: Option<usize>, default: usize, text: &str) -> Result<usize, CliError> {
    let n = pick(g.trials, cfg, default);
    if n == 0 {
        return Err(bad_value(text, "trials", "at least one trial is required"));
    }
    Ok(n)
}

fn positive(v: f64, text: &str, key: &str) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(bad_value(text, key, format!("{v} must be positive")))
    }
}

fn angle(v: f64, text: &str, key: &str) -> Result<f64, CliError> {
    if v > 0.0 && v <= FRAC_PI_2 + 1e-12 {
        Ok(v)
    } else {
        Err(bad_value(text, key, format!("{v} must lie in (0, π/2]")))
    }
}

fn strategies(list: Option<Vec<QueryStrategy>>, default: &[QueryStrategy], text: &str) -> Result<Vec<QueryStrategy>, CliError> {
    let s = list.unwrap_or_else(|| default.to_vec());
    if s.is_empty() {
        return Err(bad_value(text, "strategies", "list is empty"));
    }
    Ok(s)
}

/// Runs `f(trial)` for every trial on the installed pool; results come back
/// in trial order whatever the worker count.
fn par_trials<T: Send>(n: usize, f: impl Fn(u64) -> Result<T, CliError> + Sync + Send) -> Result<Vec<T>, CliError> {
    (0..n as u64).into_par_iter().map(f).collect()
}

struct CurveBatch {
    curves: Vec<Vec<CurvePoint>>,
    first_model: ModelSnapshot,
}

fn run_curves(cfg: &ALConfig, n: usize, seed: u64) -> Result<CurveBatch, CliError> {
    let runs = par_trials(n, |t| {
        let s = al_run(cfg, trial_rng(seed, t))?;
        Ok((s.curve, (t == 0).then(|| s.model.snapshot())))
    })?;
    let mut curves = Vec::with_capacity(n);
    let mut first_model = None;
    for (c, m) in runs {
        curves.push(c);
        first_model = first_model.or(m);
    }
    Ok(CurveBatch { curves, first_model: first_model.expect("trial 0 ran") })
}

fn write_batch(dir: &Path, prefix: &str, batch: &CurveBatch) -> Result<(), CliError> {
    let p = dir.join(format!("{prefix}_curves.csv"));
    let mut w = create(&p)?;
    write_curve_csv(&mut w, &batch.curves)?;
    finish(w, &p)?;
    let agg = aggregate_curves(&batch.curves);
    let p = dir.join(format!("{prefix}_aggregate.csv"));
    let mut w = create(&p)?;
    write_aggregate_csv(&mut w, &agg)?;
    finish(w, &p)?;
    batch.first_model.save(&dir.join(format!("{prefix}_model.json")))?;
    if let Some(last) = agg.last() {
        println!("{prefix}: mean accuracy {:.4} ± {:.4} at {} labels", last.mean_accuracy, last.std_accuracy, last.n_labels);
    }
    Ok(())
}

pub fn dataset_gen(g: &Global) -> Result<(), CliError> {
    let (c, text) = config::load::<DatasetConfig>(g.config.as_deref())?;
    check_kind(&text, c.kind, ExperimentKind::DatasetGen)?;
    let dir = out_dir(g, c.out)?;
    let kinds = c.datasets.unwrap_or_else(|| vec![DatasetKind::Case1, DatasetKind::Case2, DatasetKind::Phase]);
    for k in kinds {
        let (name, path) = match k {
            DatasetKind::Case1 => ("case1", dir.join("qutrit_case1.csv")),
            DatasetKind::Case2 => ("case2", dir.join("qutrit_case2.csv")),
            DatasetKind::Phase => ("phase", dir.join("phase_grid.csv")),
        };
        let mut w = create(&path)?;
        let rows = match k {
            DatasetKind::Case1 | DatasetKind::Case2 => {
                let case = if k == DatasetKind::Case1 { QutritCase::CaseI } else { QutritCase::CaseII };
                let grid = QutritGrid::generate(case);
                write_qutrit_csv(&mut w, &grid.samples)?;
                grid.len()
            }
            DatasetKind::Phase => {
                let grid = PhaseGrid::full(&BoundaryModel::default());
                write_phase_csv(&mut w, &grid.samples)?;
                grid.len()
            }
        };
        finish(w, &path)?;
        println!("{name}: {rows} samples -> {}", path.display());
    }
    Ok(())
}

pub fn al_qutrit(g: &Global) -> Result<(), CliError> {
    let (c, text) = config::load::<QutritAlConfig>(g.config.as_deref())?;
    check_kind(&text, c.kind, ExperimentKind::QutritAl)?;
    let case = c.case.unwrap_or(QutritCase::CaseI);
    let model = c.model.unwrap_or(QutritModel::Logistic);
    let target = match c.one_vs_rest {
        None => QutritTarget::ThreeClass,
        Some(k @ 1..=3) => QutritTarget::OneVsRest(k),
        Some(k) => return Err(bad_value(&text, "one_vs_rest", format!("class {k} outside 1..=3"))),
    };
    let labeler = match c.labeler.unwrap_or(LabelerKind::Weak) {
        LabelerKind::Noiseless => Labeler::Noiseless,
        LabelerKind::Weak => {
            let ta = angle(c.theta_a.unwrap_or(0.5), &text, "theta_a")?;
            let tb = angle(c.theta_b.unwrap_or(0.5), &text, "theta_b")?;
            let mode = match c.shots {
                None => MeasurementMode::Exact,
                Some(0) => return Err(bad_value(&text, "shots", "at least one shot is required")),
                Some(n) => MeasurementMode::Shots(n),
            };
            Labeler::WeakMeasurement(CouplingConfig::new(ta, tb, mode)?.with_carrier(c.carrier.unwrap_or_default()))
        }
    };
    let stopping = match (c.min_fidelity, c.budget) {
        (Some(f), _) if !(f > 0.0 && f <= 1.0) => return Err(bad_value(&text, "min_fidelity", format!("{f} outside (0, 1]"))),
        (Some(f), _) => StoppingRule::MinSystemFidelity(f),
        (None, Some(0)) => return Err(bad_value(&text, "budget", "must be positive")),
        (None, b) => StoppingRule::MaxLabels(b.unwrap_or(66)),
    };
    let strategies = strategies(c.strategies, &QueryStrategy::ALL, &text)?;
    let n = trials(g, c.trials, 200, &text)?;
    let seed = pick(g.seed, c.seed, DEFAULT_SEED);
    let dir = out_dir(g, c.out)?;
    let problem = Problem::Qutrit { case, model, target, labeler };
    for s in strategies {
        let cfg = ALConfig { problem, strategy: s, stopping };
        let batch = run_curves(&cfg, n, seed)?;
        write_batch(&dir, &format!("qutrit_{}_{}_{}", tag(&case), tag(&model), s.name()), &batch)?;
    }
    Ok(())
}

fn phase_common(
    text: &str,
    target: Option<PhaseTarget>,
    k: Option<f64>,
    default_k: f64,
) -> Result<(PhaseTarget, f64), CliError> {
    Ok((target.unwrap_or(PhaseTarget::ThreePhase), positive(k.unwrap_or(default_k), text, "k")?))
}

pub fn al_phase(g: &Global) -> Result<(), CliError> {
    let (c, text) = config::load::<PhaseAlConfig>(g.config.as_deref())?;
    check_kind(&text, c.kind, ExperimentKind::PhaseAl)?;
    let (target, k) = phase_common(&text, c.target, c.k, 50.0)?;
    let strategies = strategies(c.strategies, &[QueryStrategy::Random, QueryStrategy::Margin], &text)?;
    let budget = c.budget.unwrap_or(100);
    if budget == 0 {
        return Err(bad_value(&text, "budget", "must be positive"));
    }
    let n = trials(g, c.trials, 100, &text)?;
    let seed = pick(g.seed, c.seed, DEFAULT_SEED);
    let dir = out_dir(g, c.out)?;
    let problem = Problem::Phase { target, k };
    for s in strategies {
        let cfg = ALConfig { problem, strategy: s, stopping: StoppingRule::MaxLabels(budget) };
        let batch = run_curves(&cfg, n, seed)?;
        write_batch(&dir, &format!("phase_{}_k{k}_{}", tag(&target), s.name()), &batch)?;
    }
    Ok(())
}

struct SslRow {
    n_labels: usize,
    al: f64,
    ssl: f64,
    adopted: [usize; 2],
}

pub fn ssl_phase(g: &Global) -> Result<(), CliError> {
    let (c, text) = config::load::<SslPhaseConfig>(g.config.as_deref())?;
    check_kind(&text, c.kind, ExperimentKind::PhaseSsl)?;
    let (target, k) = phase_common(&text, c.target, c.k, 100.0)?;
    let strategies = strategies(c.strategies, &[QueryStrategy::Random, QueryStrategy::Margin], &text)?;
    let checkpoints = c.checkpoints.unwrap_or_else(|| vec![20, 40, 60, 80, 100]);
    if checkpoints.is_empty() || checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad_value(&text, "checkpoints", "must be a non-empty, strictly increasing list of positive counts"));
    }
    let st = SelfTrainConfig { threshold: c.threshold.unwrap_or(0.95), max_iter: c.max_iter.unwrap_or(5) };
    if !(st.threshold > 0.5 && st.threshold <= 1.0) {
        return Err(bad_value(&text, "threshold", format!("{} outside (0.5, 1]", st.threshold)));
    }
    let n = trials(g, c.trials, 100, &text)?;
    let seed = pick(g.seed, c.seed, DEFAULT_SEED);
    let dir = out_dir(g, c.out)?;
    let problem = Problem::Phase { target, k };
    let budget = *checkpoints.last().expect("non-empty");
    for s in strategies {
        let cfg = ALConfig { problem, strategy: s, stopping: StoppingRule::MaxLabels(budget) };
        let runs = par_trials(n, |t| {
            let mut runner = ALRunner::new(cfg, trial_rng(seed, t))?;
            let mut rows = Vec::with_capacity(checkpoints.len());
            let mut model = None;
            for &cp in &checkpoints {
                while runner.state().labels_used < cp && !runner.is_done() {
                    runner.step()?;
                }
                let al = runner.accuracy()?;
                let (m, adopted) = self_train_phase(runner.state(), &problem, &st)?;
                let ssl = evaluate_accuracy(&m, &problem)?;
                rows.push(SslRow { n_labels: runner.state().labels_used, al, ssl, adopted });
                model = Some(m);
            }
            Ok((rows, (t == 0).then(|| model.expect("a checkpoint ran").snapshot())))
        })?;
        let prefix = format!("ssl_{}_k{k}_{}", tag(&target), s.name());
        let p = dir.join(format!("{prefix}.csv"));
        let mut w = create(&p)?;
        writeln!(w, "trial,n_labels,al_accuracy,ssl_accuracy,pseudo_para,pseudo_ord")?;
        for (t, (rows, _)) in runs.iter().enumerate() {
            for r in rows {
                writeln!(w, "{t},{},{:.6},{:.6},{},{}", r.n_labels, r.al, r.ssl, r.adopted[0], r.adopted[1])?;
            }
        }
        finish(w, &p)?;

        let p = dir.join(format!("{prefix}_aggregate.csv"));
        let mut w = create(&p)?;
        writeln!(w, "checkpoint,mean_al_accuracy,mean_ssl_accuracy,mean_delta,std_delta")?;
        for (ci, cp) in checkpoints.iter().enumerate() {
            let col = |f: &dyn Fn(&SslRow) -> f64| -> Vec<f64> { runs.iter().map(|(r, _)| f(&r[ci])).collect() };
            let (al, _) = mean_std(&col(&|r| r.al));
            let (ssl, _) = mean_std(&col(&|r| r.ssl));
            let (d, sd) = mean_std(&col(&|r| r.ssl - r.al));
            writeln!(w, "{cp},{al:.6},{ssl:.6},{d:.6},{sd:.6}")?;
            println!("{prefix} @{cp}: active {al:.4}, self-trained {ssl:.4}, change {d:+.4}");
        }
        finish(w, &p)?;
        if let Some(m) = runs.into_iter().find_map(|(_, m)| m) {
            m.save(&dir.join(format!("{prefix}_model.json")))?;
        }
    }
    Ok(())
}

fn lattice_spec(text: &str, geometry: Geometry, j: f64, gamma: f64, t: f64) -> Result<LatticeSpec, CliError> {
    let j = positive(j, text, "j")?;
    let gamma = positive(gamma, text, "gamma")?;
    let t = positive(t, text, "t")?;
    LatticeSpec::new(geometry, j, gamma, t).map_err(|e| bad_value(text, "geometry", e))
}

fn run_options(text: &str, sweeps: usize, thermalization: usize, metropolis: bool) -> Result<RunOptions, CliError> {
    if sweeps <= thermalization + 1 {
        return Err(bad_value(text, "sweeps", format!("{sweeps} must exceed thermalization ({thermalization}) by at least 2")));
    }
    Ok(RunOptions { sweeps, thermalization, metropolis })
}

fn geometry_label(g: Geometry) -> String {
    match g {
        Geometry::Triangle => "triangle".into(),
        Geometry::Periodic { l } => format!("L{l}"),
    }
}

pub fn ctqmc_run(g: &Global) -> Result<(), CliError> {
    let (c, text) = config::load::<CtqmcRunConfig>(g.config.as_deref())?;
    check_kind(&text, c.kind, ExperimentKind::CtqmcRun)?;
    let spec = lattice_spec(
        &text,
        c.geometry.unwrap_or(Geometry::Periodic { l: 6 }),
        c.j.unwrap_or(1.0),
        c.gamma.unwrap_or(0.8),
        c.t.unwrap_or(1.0),
    )?;
    let opts = run_options(&text, c.sweeps.unwrap_or(20_000), c.thermalization.unwrap_or(1000), c.metropolis.unwrap_or(false))?;
    let chains = trials(g, c.trials, 4, &text)?;
    let seed = pick(g.seed, c.seed, DEFAULT_SEED);
    let dir = out_dir(g, c.out)?;
    let outs = par_trials(chains, |t| Ok(run_simulation(&spec, &opts, &mut trial_rng(seed, t))?))?;

    let p = dir.join("chains.csv");
    let mut w = create(&p)?;
    writeln!(w, "chain,energy,energy_stderr,nn_zz,nn_zz_stderr,tau_energy,acceptance")?;
    for (i, o) in outs.iter().enumerate() {
        let ob = &o.observables;
        let acc = o.acceptance.map(|a| format!("{a:.6}")).unwrap_or_default();
        writeln!(
            w,
            "{i},{:.10e},{:.10e},{:.10e},{:.10e},{:.4},{acc}",
            ob.energy.mean, ob.energy.stderr, ob.nn_zz.mean, ob.nn_zz.stderr, ob.tau_energy
        )?;
    }
    finish(w, &p)?;

    // chains are concatenated in chain order, so the merged estimate is fixed
    let mut acc = ObservableAccumulator::default();
    for o in outs {
        acc.merge(o.accumulator);
    }
    let obs = acc.finalize(spec.beta())?;
    let p = dir.join("observables.csv");
    let mut w = create(&p)?;
    write_observables_csv(&mut w, &[(spec, obs.samples, &obs)])?;
    finish(w, &p)?;
    println!(
        "{} J={} Gamma={} T={}: energy {:.6} ± {:.6}, psi2 {:.6} ± {:.6}, binder {:.4} ± {:.4} ({} samples)",
        geometry_label(spec.geometry),
        spec.j,
        spec.gamma,
        spec.t,
        obs.energy.mean,
        obs.energy.stderr,
        obs.psi2.mean,
        obs.psi2.stderr,
        obs.binder.mean,
        obs.binder.stderr,
        obs.samples
    );
    Ok(())
}

/// Points checked by `ctqmc validate`, on both the open triangle and the
/// nine-site torus.
const VALIDATION_POINTS: [(f64, f64); 2] = [(0.8, 1.0), (0.3, 0.5)];
const POISSON_P_MIN: f64 = 0.01;

pub fn ctqmc_validate(g: &Global) -> Result<(), CliError> {
    let (c, text) = config::load::<CtqmcValidateConfig>(g.config.as_deref())?;
    check_kind(&text, c.kind, ExperimentKind::CtqmcValidate)?;
    let opts = run_options(&text, c.sweeps.unwrap_or(21_000), c.thermalization.unwrap_or(1000), false)?;
    let sigmas = positive(c.sigmas.unwrap_or(3.0), &text, "sigmas")?;
    let seed = pick(g.seed, c.seed, DEFAULT_SEED);
    let dir = out_dir(g, c.out)?;

    let mut specs = Vec::new();
    for geometry in [Geometry::Triangle, Geometry::Periodic { l: 3 }] {
        for (gamma, t) in VALIDATION_POINTS {
            specs.push(LatticeSpec::new(geometry, 1.0, gamma, t)?);
        }
    }
    let outs = par_trials(specs.len(), |i| {
        let spec = &specs[i as usize];
        let out = run_simulation(spec, &opts, &mut trial_rng(seed, i))?;
        Ok((ed_oracle(spec)?, out))
    })?;

    let p = dir.join("validation.csv");
    let mut w = create(&p)?;
    writeln!(w, "check,geometry,J,Gamma,T,estimate,stderr,reference,score,pass")?;
    let mut failures = 0;
    for (spec, (ed, out)) in specs.iter().zip(&outs) {
        let geo = geometry_label(spec.geometry);
        let head = |check: &str| format!("{check},{geo},{},{},{}", spec.j, spec.gamma, spec.t);
        let compare = |e: Estimate, exact: f64| {
            let z = (e.mean - exact) / e.stderr;
            let z = if z.is_nan() { 0.0 } else { z };
            (z, z.abs() <= sigmas)
        };
        for (name, e, exact) in [("energy", out.observables.energy, ed.energy_per_site), ("nn_zz", out.observables.nn_zz, ed.nn_zz)] {
            let (z, ok) = compare(e, exact);
            failures += usize::from(!ok);
            writeln!(w, "{},{:.10e},{:.10e},{:.10e},{z:.4},{ok}", head(name), e.mean, e.stderr, exact)?;
            println!("{:<8} {geo:<8} Gamma={} T={}: mc {:.6} ± {:.6}, exact {:.6}, z {z:+.2} {}", name, spec.gamma, spec.t, e.mean, e.stderr, exact, if ok { "ok" } else { "FAIL" });
        }
        let rate = spec.gamma * spec.beta();
        let (chi2, dof) = poisson_chi_square(&out.cut_histogram, rate)?;
        let pval = 1.0 - ChiSquared::new(dof as f64).map_err(|e| CliError::Failed(e.to_string()))?.cdf(chi2);
        let ok = pval > POISSON_P_MIN;
        failures += usize::from(!ok);
        writeln!(w, "{},{chi2:.6},,{dof},{pval:.6},{ok}", head("poisson_cuts"))?;
        println!("poisson  {geo:<8} Gamma={} T={}: chi2 {chi2:.2} on {dof} dof, p {pval:.4} {}", spec.gamma, spec.t, if ok { "ok" } else { "FAIL" });
    }
    finish(w, &p)?;
    if failures > 0 {
        return Err(CliError::Failed(format!("{failures} validation checks failed")));
    }
    Ok(())
}

pub fn reconstruct_demo(g: &Global) -> Result<(), CliError> {
    let (c, text) = config::load::<ReconstructConfig>(g.config.as_deref())?;
    check_kind(&text, c.kind, ExperimentKind::ReconstructDemo)?;
    let amps = c.amplitudes.unwrap_or([0.6, 0.48, 0.64]);
    let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(bad_value(&text, "amplitudes", "must be finite and not all zero"));
    }
    let amps = amps.map(|a| a / norm);
    let rho = DensityMatrix::pure(&Ket::from_real(&amps)?);
    let sweep = [0.1, 0.5, 1.0, FRAC_PI_2];
    let thetas = |v: Option<Vec<f64>>, key: &str| -> Result<Vec<f64>, CliError> {
        let v = v.unwrap_or_else(|| sweep.to_vec());
        if v.is_empty() {
            return Err(bad_value(&text, key, "list is empty"));
        }
        v.into_iter().map(|t| angle(t, &text, key)).collect()
    };
    let tas = thetas(c.theta_a, "theta_a")?;
    let tbs = thetas(c.theta_b, "theta_b")?;
    let mode = match c.shots {
        None => MeasurementMode::Exact,
        Some(0) => return Err(bad_value(&text, "shots", "at least one shot is required")),
        Some(n) => MeasurementMode::Shots(n),
    };
    let seed = pick(g.seed, c.seed, DEFAULT_SEED);
    let dir = out_dir(g, c.out)?;
    let mut rng = trial_rng(seed, 0);

    let p = dir.join("reconstruct.csv");
    let mut w = create(&p)?;
    writeln!(w, "theta_a,theta_b,j,rho_jj,estimate,abs_error,fidelity")?;
    let lp = dir.join("labeling.csv");
    let mut lw = create(&lp)?;
    writeln!(lw, "theta_a,theta_b,assigned_class,retrievals,final_fidelity")?;
    let mut worst: f64 = 0.0;
    for &ta in &tas {
        for &tb in &tbs {
            let cc = CouplingConfig::new(ta, tb, mode)?;
            for (j, a) in amps.iter().enumerate() {
                let est = reconstruct_diagonal(&rho, j, &cc, &mut rng)?;
                let (_, f) = post_state_and_loss(&rho, j, &cc)?;
                let err = (est - a * a).abs();
                worst = worst.max(err);
                writeln!(w, "{ta},{tb},{j},{:.15},{est:.15},{err:.3e},{f:.15}", a * a)?;
            }
            let out = label_qutrit(&rho, &cc, &mut rng)?;
            writeln!(lw, "{ta},{tb},{},{},{:.15}", out.assigned_class, out.couplings_performed, out.final_fidelity)?;
        }
    }
    finish(w, &p)?;
    finish(lw, &lp)?;
    println!("populations {:?}: largest retrieval error {worst:.3e} over {} angle pairs", amps.map(|a| a * a), tas.len() * tbs.len());
    Ok(())
}

pub fn heatmap(g: &Global, model: &Path, case: &str) -> Result<(), CliError> {
    if !model.is_file() {
        return Err(CliError::Config(format!("model snapshot {} not found", model.display())));
    }
    let snap = ModelSnapshot::load(model).map_err(|e| CliError::Config(format!("{}: {e}", model.display())))?;
    let dir = out_dir(g, None)?;
    let p = dir.join("heatmap.csv");
    let mut w = create(&p)?;
    // grid samples and `decision_on_lattice` share the row-major (Γ, T) order
    let rows = match &snap {
        ModelSnapshot::PhaseOvr(m) => {
            let grid = PhaseGrid::full(&BoundaryModel::default());
            let fp = m.svm_para.decision_on_lattice(&grid.gammas, &grid.temps)?;
            let fo = m.svm_ord.decision_on_lattice(&grid.gammas, &grid.temps)?;
            writeln!(w, "gamma_ratio,t_ratio,f_para,f_ord,predicted")?;
            for (k, s) in grid.samples.iter().enumerate() {
                let f_ord = if s.t_ratio <= m.ord_t_max + 1e-12 { format!("{:.10}", fo[k]) } else { String::new() };
                let ph = m.predict(s.gamma_ratio, s.t_ratio);
                writeln!(w, "{:.2},{:.2},{:.10},{f_ord},{}", s.gamma_ratio, s.t_ratio, fp[k], ph.name())?;
            }
            grid.len()
        }
        ModelSnapshot::Svm(m) => {
            let grid = PhaseGrid::full(&BoundaryModel::default());
            let f = m.decision_on_lattice(&grid.gammas, &grid.temps)?;
            writeln!(w, "gamma_ratio,t_ratio,decision,predicted")?;
            for (s, &d) in grid.samples.iter().zip(&f) {
                writeln!(w, "{:.2},{:.2},{d:.10},{}", s.gamma_ratio, s.t_ratio, u8::from(d > 0.0))?;
            }
            grid.len()
        }
        ModelSnapshot::Logistic(_) | ModelSnapshot::NaiveBayes(_) => {
            let case = if case == "case2" { QutritCase::CaseII } else { QutritCase::CaseI };
            let grid = QutritGrid::generate(case);
            let proba = |x: &[f64]| match &snap {
                ModelSnapshot::Logistic(m) => m.predict_proba(x),
                ModelSnapshot::NaiveBayes(m) => m.predict_proba(x),
                _ => unreachable!(),
            };
            let width = proba(&grid.samples[0].features())?.len();
            let header: Vec<String> = (0..width).map(|k| format!("p{k}")).collect();
            writeln!(w, "x1,x2,{},predicted", header.join(","))?;
            for s in &grid.samples {
                let p = proba(&s.features())?;
                let cols: Vec<String> = p.iter().map(|v| format!("{v:.10}")).collect();
                writeln!(w, "{:.10},{:.10},{},{}", s.x1, s.x2, cols.join(","), argmax(&p))?;
            }
            grid.len()
        }
    };
    finish(w, &p)?;
    println!("{rows} grid points -> {}", p.display());
    Ok(())
}

/// Lowest index of the largest probability.
fn argmax(p: &[f64]) -> usize {
    p.iter().enumerate().fold(0, |best, (k, &v)| if v > p[best] { k } else { best })
}
