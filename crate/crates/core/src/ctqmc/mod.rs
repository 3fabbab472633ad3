//! Continuous imaginary-time Swendsen-Wang Monte Carlo for the transverse-field
//! Ising antiferromagnet on triangular clusters, with an exact-diagonalization
//! oracle for clusters of up to twelve sites.

mod ed;
mod lattice;
mod observables;
mod worldline;

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use ed::{ed_oracle, hamiltonian, EdResult, ED_MAX_SITES};
pub use lattice::{Geometry, Lattice, LatticeSpec};
pub use observables::{
    measure, order_parameter, Estimate, ObservableAccumulator, Observables, Sample, JACKKNIFE_BINS,
};
pub use worldline::{overlap_integral, sw_sweep, Configuration, SweepOptions, SweepStats, Worldline};

use crate::error::invalid;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Total sweeps, thermalization included.
    pub sweeps: usize,
    pub thermalization: usize,
    #[serde(default)]
    pub metropolis: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub observables: Observables,
    pub accumulator: ObservableAccumulator,
    /// `cut_histogram[n]` counts (site, measured sweep) pairs that received
    /// `n` new cuts.
    pub cut_histogram: Vec<u64>,
    /// Fraction of measured sweeps accepted by the optional Metropolis test.
    pub acceptance: Option<f64>,
}

/// Thermalizes, then measures after every remaining sweep.
pub fn run_simulation<R: Rng + ?Sized>(spec: &LatticeSpec, opts: &RunOptions, rng: &mut R) -> Result<SimulationOutput> {
    spec.validate()?;
    if opts.sweeps <= opts.thermalization {
        return Err(invalid(format!(
            "{} sweeps do not exceed the {} thermalization sweeps",
            opts.sweeps, opts.thermalization
        )));
    }
    let lattice = Lattice::new(spec.geometry)?;
    let sweep_opts = SweepOptions { metropolis: opts.metropolis };
    let mut config = Configuration::random(lattice.n_sites, spec.beta(), rng);
    for _ in 0..opts.thermalization {
        sw_sweep(&mut config, &lattice, spec, &sweep_opts, rng);
    }
    let mut acc = ObservableAccumulator::default();
    let mut hist: Vec<u64> = Vec::new();
    let mut accepted = 0usize;
    for _ in opts.thermalization..opts.sweeps {
        let st = sw_sweep(&mut config, &lattice, spec, &sweep_opts, rng);
        for &k in &st.inserted {
            if hist.len() <= k {
                hist.resize(k + 1, 0);
            }
            hist[k] += 1;
        }
        accepted += st.accepted.unwrap_or(false) as usize;
        acc.push(measure(&config, &lattice, spec.j));
    }
    let measured = opts.sweeps - opts.thermalization;
    Ok(SimulationOutput {
        observables: acc.finalize(spec.beta())?,
        accumulator: acc,
        cut_histogram: hist,
        acceptance: opts.metropolis.then(|| accepted as f64 / measured as f64),
    })
}

/// Pearson statistic of a count histogram against Poisson(`mean`), with
/// categories pooled from the right until each expects at least five counts;
/// returns `(χ², degrees of freedom)`.
pub fn poisson_chi_square(hist: &[u64], mean: f64) -> Result<(f64, usize)> {
    let total: u64 = hist.iter().sum();
    if total == 0 || !(mean > 0.0) {
        return Err(invalid("empty histogram or nonpositive mean"));
    }
    let n = total as f64;
    // categories 0..k-1 individually, k.. pooled into the tail
    let mut pmf = Vec::new();
    let mut p = (-mean).exp();
    let mut k = 0;
    while n * p >= 5.0 || k as f64 <= mean {
        pmf.push(p);
        k += 1;
        p *= mean / k as f64;
    }
    while pmf.len() > 1 && n * (1.0 - pmf.iter().sum::<f64>()) < 5.0 {
        pmf.pop();
    }
    let tail = 1.0 - pmf.iter().sum::<f64>();
    let mut chi2 = 0.0;
    for (c, &pc) in pmf.iter().enumerate() {
        let obs = hist.get(c).copied().unwrap_or(0) as f64;
        chi2 += (obs - n * pc).powi(2) / (n * pc);
    }
    let obs_tail: u64 = hist.iter().skip(pmf.len()).sum();
    chi2 += (obs_tail as f64 - n * tail).powi(2) / (n * tail);
    Ok((chi2, pmf.len()))
}

pub const OBSERVABLE_HEADER: &str = "L,J,Gamma,T,sweeps,observable,mean,stderr";

/// One CSV row per observable; `L` reads `triangle` for the open triangle.
pub fn write_observables_csv<W: Write>(mut w: W, rows: &[(LatticeSpec, usize, &Observables)]) -> Result<()> {
    writeln!(w, "{OBSERVABLE_HEADER}")?;
    for (spec, sweeps, obs) in rows {
        let l = match spec.geometry {
            Geometry::Triangle => "triangle".to_string(),
            Geometry::Periodic { l } => l.to_string(),
        };
        for (name, e) in obs.rows() {
            writeln!(w, "{l},{},{},{},{sweeps},{name},{:.10e},{:.10e}", spec.j, spec.gamma, spec.t, e.mean, e.stderr)?;
        }
    }
    Ok(())
}
