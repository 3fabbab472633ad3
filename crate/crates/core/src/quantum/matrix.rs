use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{c, HERMITIAN_TOL, PSD_TOL, TRACE_TOL};
use crate::{Error, Result};

pub const MAX_DIM: usize = 16;

/// Square complex matrix in row-major order.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m[(i, i)] = c(1.0, 0.0);
        }
        Ok(m)
    }

    pub fn from_row_major(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        check_dim(dim)?;
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { dim, data })
    }

    pub fn from_real(dim: usize, data: &[f64]) -> Result<Self> {
        Self::from_row_major(dim, data.iter().map(|&x| c(x, 0.0)).collect())
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let mut m = Self::zeros(values.len())?;
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = c(v, 0.0);
        }
        Ok(m)
    }

    /// `|u⟩⟨v|`
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: u.len(),
                got: v.len(),
            });
        }
        let n = u.len();
        let mut m = Self::zeros(n)?;
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = u[i] * v[j].conj();
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = self.clone();
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j] = self.data[j * n + i].conj();
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        self.same_dim(rhs)?;
        let n = self.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        Ok(Self { dim: n, data: out })
    }

    /// `U · self · U†`
    pub fn conjugate_by(&self, u: &Self) -> Result<Self> {
        u.matmul(self)?.matmul(&u.adjoint())
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.same_dim(rhs)?;
        Ok(Self {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.same_dim(rhs)?;
        Ok(Self {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise deviation `|A_ij − conj(A_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.data[i * n + j] - self.data[j * n + i].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    /// `(A + A†)/2`; callers check Hermiticity first.
    pub(crate) fn symmetrized(&self) -> Self {
        let n = self.dim;
        let mut out = self.clone();
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j] = (self.data[i * n + j] + self.data[j * n + i].conj()) * 0.5;
            }
        }
        out
    }

    /// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
    /// matching orthonormal eigenvectors as columns.
    pub fn hermitian_eigen(&self) -> Result<(Vec<f64>, ComplexMatrix)> {
        let defect = self.hermitian_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let n = self.dim;
        let h = self.symmetrized();
        let m = DMatrix::from_fn(n, n, |i, j| h.data[i * n + j]);
        let eig = SymmetricEigen::new(m);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vecs = ComplexMatrix::zeros(n)?;
        for (col, &k) in order.iter().enumerate() {
            for row in 0..n {
                vecs[(row, col)] = eig.eigenvectors[(row, k)];
            }
        }
        Ok((values, vecs))
    }

    /// Rebuilds `V diag(f(λ)) V†`.
    pub(crate) fn from_spectrum(values: &[f64], vecs: &ComplexMatrix) -> Result<Self> {
        let n = vecs.dim;
        let mut out = ComplexMatrix::zeros(n)?;
        for (k, &lam) in values.iter().enumerate() {
            if lam == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = vecs[(i, k)] * lam;
                for j in 0..n {
                    out.data[i * n + j] += vik * vecs[(j, k)].conj();
                }
            }
        }
        Ok(out)
    }

    fn same_dim(&self, rhs: &Self) -> Result<()> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: rhs.dim,
            });
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(crate::error::invalid("dimension must be positive"));
    }
    if dim > MAX_DIM {
        return Err(Error::DimensionTooLarge(dim));
    }
    Ok(())
}

/// Hermitian, unit-trace, positive-semidefinite matrix.
#[derive(Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    /// Validates the density-matrix invariants; an accepted matrix is
    /// symmetrized to remove the sub-tolerance anti-Hermitian residue.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let defect = m.hermitian_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let m = m.symmetrized();
        let tr = m.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::BadTrace(tr));
        }
        let (values, _) = m.hermitian_eigen()?;
        let min = values[0];
        if min < -PSD_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(Self(m))
    }

    pub fn pure(ket: &Ket) -> Self {
        let a = ket.amplitudes();
        let m = ComplexMatrix::outer(a, a).expect("ket dimension already validated");
        Self(m.symmetrized())
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        Ok(Self::pure(&Ket::basis(dim, index)?))
    }

    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::diagonal(populations)?)
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::diagonal(&vec![1.0 / dim as f64; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    /// Real diagonal `ρ_jj`.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.0
            .hermitian_eigen()
            .map(|(v, _)| v)
            .expect("density matrix is Hermitian")
    }

    pub(crate) fn from_trusted(m: ComplexMatrix) -> Self {
        Self(m)
    }
}

impl fmt::Debug for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DensityMatrix ")?;
        self.0.fmt(f)
    }
}

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket(Vec<Complex64>);

impl Ket {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        check_dim(amplitudes.len())?;
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self(amplitudes))
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&a| c(a, 0.0)).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        check_dim(dim)?;
        if index >= dim {
            return Err(crate::error::invalid(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut v = vec![c(0.0, 0.0); dim];
        v[index] = c(1.0, 0.0);
        Ok(Self(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_oversized_and_empty() {
        assert_eq!(ComplexMatrix::zeros(17).unwrap_err(), Error::DimensionTooLarge(17));
        assert!(ComplexMatrix::zeros(0).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        assert!(matches!(
            DensityMatrix::diagonal(&[0.5, 0.6]),
            Err(Error::BadTrace(_))
        ));
        assert!(matches!(
            DensityMatrix::diagonal(&[1.2, -0.2]),
            Err(Error::NotPositive(_))
        ));
        let mut m = ComplexMatrix::diagonal(&[0.5, 0.5]).unwrap();
        m[(0, 1)] = c(0.1, 0.0);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn ket_must_be_normalized() {
        assert!(Ket::from_real(&[1.0, 1.0]).is_err());
        let k = Ket::from_real(&[0.6, 0.8]).unwrap();
        let rho = DensityMatrix::pure(&k);
        assert!((rho.populations()[1] - 0.64).abs() < 1e-15);
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let mut m = ComplexMatrix::diagonal(&[0.2, 0.3, 0.5]).unwrap();
        m[(0, 2)] = c(0.1, -0.05);
        m[(2, 0)] = c(0.1, 0.05);
        let (vals, vecs) = m.hermitian_eigen().unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let back = ComplexMatrix::from_spectrum(&vals, &vecs).unwrap();
        assert!(back.sub(&m).unwrap().frobenius_norm() < 1e-12);
    }
}
