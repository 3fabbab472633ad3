//! Dense complex linear algebra for small quantum states.
//!
//! Everything here is sized for a qutrit coupled to two ancilla qubits
//! (dimension 12); matrices larger than [`MAX_DIM`] are rejected.

mod matrix;
mod ops;

pub use matrix::{ComplexMatrix, DensityMatrix, Ket, MAX_DIM};
pub use ops::{expectation, fidelity, partial_trace, psd_sqrt, tensor_product};

use num_complex::Complex64;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
