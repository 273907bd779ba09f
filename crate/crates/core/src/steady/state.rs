use faer::{Mat, MatRef};

use crate::linalg::{self, ONE, ZERO};
use crate::{Error, Result, C64};

/// Density matrix on the composite cavity ⊗ motion space.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    mat: Mat<C64>,
    n_cav: usize,
    n_mot: usize,
}

impl DensityMatrix {
    /// Wrap a matrix as is (no normalization).
    pub fn new(mat: Mat<C64>, n_cav: usize, n_mot: usize) -> Result<Self> {
        let d = n_cav * n_mot;
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: mat.nrows() });
        }
        Ok(Self { mat, n_cav, n_mot })
    }

    /// Hermitian part of `mat` scaled to unit trace.
    pub fn normalized(mat: MatRef<'_, C64>, n_cav: usize, n_mot: usize) -> Result<Self> {
        let tr = linalg::trace(mat);
        if !(tr.norm() > 1e-300) || !tr.is_finite() {
            return Err(Error::NumericalState(format!("cannot normalize matrix with trace {tr}")));
        }
        let scaled = linalg::scale(mat, ONE / tr);
        Self::new(linalg::hermitian_part(scaled.as_ref()), n_cav, n_mot)
    }

    /// |0_cav, 0_mot⟩⟨0_cav, 0_mot|.
    pub fn vacuum(n_cav: usize, n_mot: usize) -> Self {
        let d = n_cav * n_mot;
        let mat = Mat::from_fn(d, d, |i, j| if i == 0 && j == 0 { ONE } else { ZERO });
        Self { mat, n_cav, n_mot }
    }

    /// ρ_cav ⊗ ρ_mot.
    pub fn product(cav: MatRef<'_, C64>, mot: MatRef<'_, C64>) -> Self {
        Self { mat: linalg::kron(cav, mot), n_cav: cav.nrows(), n_mot: mot.nrows() }
    }

    pub fn mat(&self) -> &Mat<C64> {
        &self.mat
    }

    pub fn as_ref(&self) -> MatRef<'_, C64> {
        self.mat.as_ref()
    }

    pub fn into_mat(self) -> Mat<C64> {
        self.mat
    }

    pub fn n_cav(&self) -> usize {
        self.n_cav
    }

    pub fn n_mot(&self) -> usize {
        self.n_mot
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(self.mat.as_ref())
    }

    /// Re tr(ρ O).
    pub fn expect(&self, op: MatRef<'_, C64>) -> f64 {
        linalg::trace_product(self.mat.as_ref(), op).re
    }

    pub fn expect_complex(&self, op: MatRef<'_, C64>) -> C64 {
        linalg::trace_product(self.mat.as_ref(), op)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::hermitian_eigenvalues(self.mat.as_ref())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.first().copied().unwrap_or(0.0))
    }

    /// ½‖ρ − σ‖₁.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        let diff = &self.mat - &other.mat;
        let vals = linalg::hermitian_eigenvalues(diff.as_ref())?;
        Ok(0.5 * vals.iter().map(|v| v.abs()).sum::<f64>())
    }

    /// Check the density-matrix invariants at the given tolerances.
    pub fn check(&self, herm_tol: f64, trace_tol: f64, pos_tol: f64) -> Result<()> {
        let defect = linalg::hermiticity_defect(self.mat.as_ref());
        if defect > herm_tol {
            return Err(Error::NumericalState(format!("state not Hermitian: defect {defect:e}")));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > trace_tol {
            return Err(Error::NumericalState(format!("state trace {tr} differs from 1")));
        }
        let min = self.min_eigenvalue()?;
        if min < -pos_tol {
            return Err(Error::NumericalState(format!("state has eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// tr_mot ρ.
    pub fn reduced_cavity(&self) -> Mat<C64> {
        let (nc, nm) = (self.n_cav, self.n_mot);
        Mat::from_fn(nc, nc, |m, n| (0..nm).map(|k| self.mat[(m * nm + k, n * nm + k)]).sum())
    }

    /// tr_cav ρ.
    pub fn reduced_motion(&self) -> Mat<C64> {
        let (nc, nm) = (self.n_cav, self.n_mot);
        Mat::from_fn(nm, nm, |i, j| (0..nc).map(|m| self.mat[(m * nm + i, m * nm + j)]).sum())
    }

    /// Partial transpose over the motional factor.
    pub fn partial_transpose_motion(&self) -> Mat<C64> {
        let nm = self.n_mot;
        let d = self.dim();
        Mat::from_fn(d, d, |r, c| {
            let (m, i, n, j) = (r / nm, r % nm, c / nm, c % nm);
            self.mat[(m * nm + j, n * nm + i)]
        })
    }

    /// Partial transpose over the cavity factor.
    pub fn partial_transpose_cavity(&self) -> Mat<C64> {
        let nm = self.n_mot;
        let d = self.dim();
        Mat::from_fn(d, d, |r, c| {
            let (m, i, n, j) = (r / nm, r % nm, c / nm, c % nm);
            self.mat[(n * nm + i, m * nm + j)]
        })
    }

    /// Largest diagonal weight in the last cavity and last motional level
    /// of the reduced states.
    pub fn trailing_populations(&self) -> (f64, f64) {
        let rc = self.reduced_cavity();
        let rm = self.reduced_motion();
        (rc[(self.n_cav - 1, self.n_cav - 1)].re, rm[(self.n_mot - 1, self.n_mot - 1)].re)
    }
}
