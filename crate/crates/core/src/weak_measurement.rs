//! Two-ancilla weak-measurement labeling of qutrits.
//!
//! The qutrit is coupled first through `Π_{a_j} ⊗ exp(-iθ_A Y_A)` to ancilla A
//! and then through `Π_{b_0} ⊗ exp(-iθ_B Y_B)` to ancilla B, where
//! `|b_0⟩ = (|0⟩+|1⟩+|2⟩)/√3`. The correlator `⟨Π_{a_k} Π_{1A} Π_{1B}⟩` on the
//! coupled state is proportional to `ρ_jj` for every coupling strength; the
//! proportionality constant is obtained by running the same forward map on the
//! maximally mixed state, so reconstruction is exact whatever θ is.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::invalid;
use crate::quantum::{
    c, expectation, fidelity, partial_trace, tensor_product, ComplexMatrix, DensityMatrix,
};
use crate::Result;

const QUTRIT: usize = 3;
const COUPLED_DIMS: [usize; 3] = [3, 2, 2];

/// Qutrit basis state the readout post-selects on. The correlator does not
/// depend on it.
pub const READOUT_INDEX: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementMode {
    /// Expectation values are computed exactly.
    Exact,
    /// The correlator is estimated from `n` single-shot readouts.
    Shots(u64),
}

/// Which physical qutrit the second retrieval of a labeling couples to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CarrierPolicy {
    /// Both couplings act on the same qutrit; the disturbance compounds.
    #[default]
    SameCarrier,
    /// The second retrieval consumes a fresh copy; the kept qutrit only
    /// carries the first coupling's disturbance.
    FreshCopy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub theta_a: f64,
    pub theta_b: f64,
    pub mode: MeasurementMode,
    #[serde(default)]
    pub carrier: CarrierPolicy,
}

impl CouplingConfig {
    pub fn new(theta_a: f64, theta_b: f64, mode: MeasurementMode) -> Result<Self> {
        let cfg = Self {
            theta_a,
            theta_b,
            mode,
            carrier: CarrierPolicy::SameCarrier,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn exact(theta_a: f64, theta_b: f64) -> Result<Self> {
        Self::new(theta_a, theta_b, MeasurementMode::Exact)
    }

    pub fn with_carrier(mut self, carrier: CarrierPolicy) -> Self {
        self.carrier = carrier;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("theta_a", self.theta_a), ("theta_b", self.theta_b)] {
            if !(t > 0.0 && t <= FRAC_PI_2 + 1e-12) {
                return Err(invalid(format!("{name} = {t} must lie in (0, π/2]")));
            }
        }
        if let MeasurementMode::Shots(0) = self.mode {
            return Err(invalid("shot count must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LabelingOutcome {
    /// Class in `1..=3`.
    pub assigned_class: u8,
    /// `(basis index, estimate of ρ_jj)` in retrieval order.
    pub diagonals_retrieved: Vec<(usize, f64)>,
    pub final_fidelity: f64,
    pub final_state: DensityMatrix,
    pub couplings_performed: usize,
}

fn rotation_y(theta: f64) -> ComplexMatrix {
    let (s, co) = theta.sin_cos();
    ComplexMatrix::from_real(2, &[co, -s, s, co]).expect("2x2")
}

fn projector(v: &[f64]) -> ComplexMatrix {
    let v: Vec<_> = v.iter().map(|&x| c(x, 0.0)).collect();
    ComplexMatrix::outer(&v, &v).expect("matching lengths")
}

fn basis_projector(j: usize) -> ComplexMatrix {
    let mut v = [0.0; QUTRIT];
    v[j] = 1.0;
    projector(&v)
}

fn b0_projector() -> ComplexMatrix {
    projector(&[1.0 / 3f64.sqrt(); QUTRIT])
}

fn check_index(j: usize) -> Result<()> {
    if j >= QUTRIT {
        return Err(invalid(format!("basis index {j} out of range 0..3")));
    }
    Ok(())
}

fn check_qutrit(rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != QUTRIT {
        return Err(crate::Error::DimensionMismatch {
            expected: QUTRIT,
            got: rho.dim(),
        });
    }
    Ok(())
}

/// `(U_{A,j}, U_B)` on qutrit ⊗ A ⊗ B.
pub fn coupling_unitaries(j: usize, theta_a: f64, theta_b: f64) -> Result<(ComplexMatrix, ComplexMatrix)> {
    check_index(j)?;
    let i3 = ComplexMatrix::identity(3)?;
    let i2 = ComplexMatrix::identity(2)?;
    let i4 = ComplexMatrix::identity(4)?;

    let pj = basis_projector(j);
    let ua = tensor_product(&i3.sub(&pj)?, &i4)?.add(&tensor_product(
        &tensor_product(&pj, &rotation_y(theta_a))?,
        &i2,
    )?)?;

    let pb = b0_projector();
    let ub = tensor_product(&i3.sub(&pb)?, &i4)?.add(&tensor_product(
        &pb,
        &tensor_product(&i2, &rotation_y(theta_b))?,
    )?)?;
    Ok((ua, ub))
}

/// `U_B U_{A,j} (ρ ⊗ |0⟩⟨0| ⊗ |0⟩⟨0|) U_{A,j}† U_B†`
pub fn build_coupled_state(rho: &DensityMatrix, j: usize, cfg: &CouplingConfig) -> Result<DensityMatrix> {
    check_qutrit(rho)?;
    cfg.validate()?;
    couple(rho, j, cfg.theta_a, cfg.theta_b)
}

fn couple(rho: &DensityMatrix, j: usize, theta_a: f64, theta_b: f64) -> Result<DensityMatrix> {
    let (ua, ub) = coupling_unitaries(j, theta_a, theta_b)?;
    let zero = DensityMatrix::basis(2, 0)?;
    let ini = rho.tensor(&zero)?.tensor(&zero)?;
    let u = ub.matmul(&ua)?;
    DensityMatrix::new(ini.matrix().conjugate_by(&u)?)
}

/// `⟨Π_{a_k} ⊗ Π_{1A} ⊗ Π_{1B}⟩` on a coupled 12-dimensional state.
pub fn correlator(coupled: &DensityMatrix, k: usize) -> Result<f64> {
    check_index(k)?;
    let one = projector(&[0.0, 1.0]);
    let obs = tensor_product(&tensor_product(&basis_projector(k), &one)?, &one)?;
    expectation(&obs, coupled)
}

/// Factor mapping the correlator to `ρ_jj`, measured by probing the forward
/// map with the maximally mixed state.
pub fn normalization_factor(j: usize, theta_a: f64, theta_b: f64) -> Result<f64> {
    let mixed = DensityMatrix::maximally_mixed(QUTRIT)?;
    let probe = correlator(&couple(&mixed, j, theta_a, theta_b)?, READOUT_INDEX)?;
    Ok((1.0 / QUTRIT as f64) / probe)
}

/// Closed form of the same factor, `16 N_AB²` with `N_AB = d / (4 sin θ_A sin θ_B)`.
pub fn closed_form_factor(theta_a: f64, theta_b: f64) -> f64 {
    let d = QUTRIT as f64;
    let s = theta_a.sin() * theta_b.sin();
    d * d / (s * s)
}

/// Estimate of `ρ_jj` from one coupling.
pub fn reconstruct_diagonal<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    j: usize,
    cfg: &CouplingConfig,
    rng: &mut R,
) -> Result<f64> {
    let coupled = build_coupled_state(rho, j, cfg)?;
    let p = correlator(&coupled, READOUT_INDEX)?;
    let factor = normalization_factor(j, cfg.theta_a, cfg.theta_b)?;
    match cfg.mode {
        MeasurementMode::Exact => Ok(p * factor),
        MeasurementMode::Shots(n) => {
            let p = p.clamp(0.0, 1.0);
            let hits = (0..n).filter(|_| rng.gen_bool(p)).count();
            Ok(hits as f64 / n as f64 * factor)
        }
    }
}

/// Reduced qutrit state after one coupling (ancillas traced out) and its
/// fidelity with the input.
pub fn post_state_and_loss(
    rho: &DensityMatrix,
    j: usize,
    cfg: &CouplingConfig,
) -> Result<(DensityMatrix, f64)> {
    let coupled = build_coupled_state(rho, j, cfg)?;
    let reduced = partial_trace(&coupled, &COUPLED_DIMS, 0)?;
    let f = fidelity(rho, &reduced)?;
    Ok((reduced, f))
}

/// Labels a qutrit with the random retrieval policy: read a random diagonal
/// element and accept it if it exceeds 1/2, otherwise read a second one and
/// take the argmax of the three inferred populations.
pub fn label_qutrit<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    cfg: &CouplingConfig,
    rng: &mut R,
) -> Result<LabelingOutcome> {
    let first = rng.gen_range(0..QUTRIT);
    label_with_draws(rho, cfg, first, rng, |rng| rng.gen_range(0..QUTRIT - 1))
}

/// [`label_qutrit`] with the retrieval order fixed: `order[0]` first, then
/// `order[1]` if a second retrieval is needed.
pub fn label_qutrit_in_order<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    cfg: &CouplingConfig,
    order: [usize; 2],
    rng: &mut R,
) -> Result<LabelingOutcome> {
    check_index(order[0])?;
    check_index(order[1])?;
    if order[0] == order[1] {
        return Err(invalid("retrieval indices must differ"));
    }
    let others = remaining(order[0]);
    let pick = others.iter().position(|&k| k == order[1]).expect("distinct index");
    label_with_draws(rho, cfg, order[0], rng, |_| pick)
}

fn remaining(j: usize) -> [usize; 2] {
    match j {
        0 => [1, 2],
        1 => [0, 2],
        _ => [0, 1],
    }
}

fn label_with_draws<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    cfg: &CouplingConfig,
    first: usize,
    rng: &mut R,
    second: impl FnOnce(&mut R) -> usize,
) -> Result<LabelingOutcome> {
    check_qutrit(rho)?;
    cfg.validate()?;
    let clamp = |e: f64| match cfg.mode {
        MeasurementMode::Exact => e,
        MeasurementMode::Shots(_) => e.clamp(0.0, 1.0),
    };

    let ej = clamp(reconstruct_diagonal(rho, first, cfg, rng)?);
    let (after_first, _) = post_state_and_loss(rho, first, cfg)?;
    if ej > 0.5 {
        let f = fidelity(rho, &after_first)?;
        return Ok(LabelingOutcome {
            assigned_class: first as u8 + 1,
            diagonals_retrieved: vec![(first, ej)],
            final_fidelity: f,
            final_state: after_first,
            couplings_performed: 1,
        });
    }

    let k = remaining(first)[second(rng)];
    // Each retrieval reads the populations of the state Alice prepared; only
    // the disturbance is tracked on the carrier.
    let ek = clamp(reconstruct_diagonal(rho, k, cfg, rng)?);
    let final_state = match cfg.carrier {
        CarrierPolicy::SameCarrier => post_state_and_loss(&after_first, k, cfg)?.0,
        CarrierPolicy::FreshCopy => after_first,
    };
    let third = 3 - first - k;
    let mut values = [0.0; QUTRIT];
    values[first] = ej;
    values[k] = ek;
    values[third] = 1.0 - ej - ek;
    let class = argmax_lowest(&values);
    Ok(LabelingOutcome {
        assigned_class: class as u8 + 1,
        diagonals_retrieved: vec![(first, ej), (k, ek)],
        final_fidelity: fidelity(rho, &final_state)?,
        final_state,
        couplings_performed: 2,
    })
}

fn argmax_lowest(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}
