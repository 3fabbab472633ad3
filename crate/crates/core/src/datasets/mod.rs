//! Sample pools and ground-truth oracles.

mod io;
mod phase;
mod qutrit;

pub use io::{read_phase_csv, read_qutrit_csv, write_phase_csv, write_qutrit_csv};
pub use phase::{
    boundary_temperatures, distance_to_boundary, flip_probability, noisy_ovr_label, true_phase,
    BoundaryModel, OvrBoundary, Phase, PhaseGrid, PhaseSample,
};
pub use qutrit::{case1_amplitudes, case2_amplitudes, gen_case1, gen_case2, QutritCase, QutritGrid, QutritSample};

/// Index of the largest value; the lowest index wins ties.
pub(crate) fn argmax_lowest(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}
