use super::{c, ComplexMatrix, DensityMatrix, HERMITIAN_TOL, PSD_TOL};
use crate::{Error, Result};

/// Kronecker product `a ⊗ b`.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (da, db) = (a.dim(), b.dim());
    let mut out = ComplexMatrix::zeros(da * db)?;
    for i in 0..da {
        for j in 0..da {
            let aij = a[(i, j)];
            if aij.re == 0.0 && aij.im == 0.0 {
                continue;
            }
            for k in 0..db {
                for l in 0..db {
                    out[(i * db + k, j * db + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

impl DensityMatrix {
    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        Ok(DensityMatrix::from_trusted(tensor_product(
            self.matrix(),
            other.matrix(),
        )?))
    }
}

/// Reduced state of subsystem `keep` of a composite with subsystem dimensions
/// `dims` (most significant first).
pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], keep: usize) -> Result<DensityMatrix> {
    if keep >= dims.len() {
        return Err(crate::error::invalid(format!(
            "subsystem {keep} out of range for {} subsystems",
            dims.len()
        )));
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(crate::error::invalid("subsystem dimensions must be positive"));
    }
    let total: usize = dims.iter().product();
    if total != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: total,
        });
    }
    let dk = dims[keep];
    // stride of the kept index inside the flat index
    let stride: usize = dims[keep + 1..].iter().product();
    let rest = total / dk;
    let m = rho.matrix();
    let mut out = ComplexMatrix::zeros(dk)?;
    for r in 0..rest {
        // split r into the (outer, inner) indices around the kept slot
        let outer = r / stride;
        let inner = r % stride;
        let base = outer * dk * stride + inner;
        for a in 0..dk {
            for b in 0..dk {
                out[(a, b)] += m[(base + a * stride, base + b * stride)];
            }
        }
    }
    DensityMatrix::new(out)
}

/// Principal square root of a positive-semidefinite Hermitian matrix.
///
/// Eigenvalues below `1e-13` (roundoff level for unit-trace matrices) are set
/// to zero; anything below `-1e-10` is rejected.
pub fn psd_sqrt(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (values, vecs) = h.hermitian_eigen()?;
    let roots = clamped_roots(&values)?;
    ComplexMatrix::from_spectrum(&roots, &vecs)
}

const EIGEN_FLOOR: f64 = 1e-13;

fn clamped_roots(values: &[f64]) -> Result<Vec<f64>> {
    values
        .iter()
        .map(|&v| {
            if v < -PSD_TOL {
                Err(Error::NotPositive(v))
            } else {
                Ok(if v < EIGEN_FLOOR { 0.0 } else { v.sqrt() })
            }
        })
        .collect()
}

/// Uhlmann fidelity `F = [Tr √(√σ ρ √σ)]²`, clamped to `[0, 1]`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: sigma.dim(),
        });
    }
    let s = psd_sqrt(sigma.matrix())?;
    let inner = s.matmul(rho.matrix())?.matmul(&s)?.symmetrized();
    let (values, _) = inner.hermitian_eigen()?;
    let tr: f64 = clamped_roots(&values)?.iter().sum();
    Ok((tr * tr).clamp(0.0, 1.0))
}

/// `Tr(obs · ρ)` for a Hermitian observable.
pub fn expectation(obs: &ComplexMatrix, rho: &DensityMatrix) -> Result<f64> {
    if obs.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: obs.dim(),
        });
    }
    let defect = obs.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let n = obs.dim();
    let m = rho.matrix();
    let mut acc = c(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += obs[(i, k)] * m[(k, i)];
        }
    }
    if acc.im.abs() > 1e-10 {
        return Err(crate::error::invalid(format!(
            "expectation has imaginary part {:.3e}",
            acc.im
        )));
    }
    Ok(acc.re)
}
